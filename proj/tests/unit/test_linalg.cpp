#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include <Eigen/Eigenvalues>

#include "hubscope/error.hpp"
#include "hubscope/linalg.hpp"
#include "hubscope/parallel.hpp"
#include "oracles.hpp"

using namespace hubscope;

TEST(CosineMatrix, StandardBasis) {
  const auto e = oracle::to_embedding({{1, 0}, {0, 1}});
  const auto s = cosine_matrix(e, e);
  EXPECT_EQ(s(0, 0), 1.0);
  EXPECT_EQ(s(0, 1), 0.0);
  EXPECT_EQ(s(1, 0), 0.0);
  EXPECT_EQ(s(1, 1), 1.0);
  EXPECT_EQ(s.method(), ScoreMethod::Cosine);
}

TEST(CosineMatrix, HandValue) {
  const auto s = cosine_matrix(oracle::to_embedding({{1, 0}}), oracle::to_embedding({{0.8, 0.6}}));
  EXPECT_NEAR(s(0, 0), 0.8, 1e-15);
}

TEST(CosineMatrix, MatchesNaiveLoop) {
  const auto a = oracle::gaussian(50, 16, 1), b = oracle::gaussian(50, 16, 2);
  const auto s = cosine_matrix(oracle::to_embedding(a), oracle::to_embedding(b));
  const auto ref = oracle::cosine(a, b);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < 50; ++j) EXPECT_NEAR(s(i, j), ref[i][j], 1e-12);
  }
}

TEST(CosineMatrix, UnitDiagonalAndRange) {
  const auto a = oracle::gaussian(40, 300, 7);
  const auto s = cosine_matrix(oracle::to_embedding(a), oracle::to_embedding(a));
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_NEAR(s(i, i), 1.0, 1e-9);
    for (std::size_t j = 0; j < 40; ++j) {
      EXPECT_LE(std::abs(s(i, j)), 1.0 + 1e-9);
    }
  }
}

TEST(CosineMatrix, DimensionMismatch) {
  EXPECT_THROW(cosine_matrix(oracle::to_embedding({{1, 0}}), oracle::to_embedding({{1, 0, 0}})), ValidationError);
}

TEST(CosineMatrix, BitwiseIndependentOfThreads) {
  const auto a = oracle::to_embedding(oracle::gaussian(301, 65, 3));
  const auto b = oracle::to_embedding(oracle::gaussian(257, 65, 4));
  const std::size_t before = num_threads();
  set_num_threads(1);
  const auto one = cosine_matrix(a, b);
  set_num_threads(8);
  const auto eight = cosine_matrix(a, b);
  set_num_threads(before);
  ASSERT_EQ(one.data().size(), eight.data().size());
  EXPECT_EQ(std::memcmp(one.data().data(), eight.data().data(), one.data().size() * sizeof(double)), 0);
}

TEST(FixedDot, DocumentedOrder) {
  const std::vector<double> a{1e16, 1, -1e16, 1, 3}, b{1, 1, 1, 1, 1};
  // lanes: l0 = 1e16 + 3, l1 = 1, l2 = -1e16, l3 = 1; (l0 + l1) + (l2 + l3)
  const double l0 = 1e16 + 3.0, l1 = 1.0, l2 = -1e16, l3 = 1.0;
  EXPECT_EQ(fixed_dot(a, b), (l0 + l1) + (l2 + l3));
}

TEST(ScoreMatrix, TransposedSwapsAxes) {
  const auto s = oracle::to_scores({{1, 2, 3}, {4, 5, 6}});
  const auto t = s.transposed();
  EXPECT_EQ(t.n_src(), 3u);
  EXPECT_EQ(t.n_tgt(), 2u);
  EXPECT_EQ(t(2, 1), 6.0);
  EXPECT_THROW(oracle::to_scores({{std::nan("")}}), NumericalError);
}

TEST(TopK, TieGoesToLowerIndex) {
  const auto s = oracle::to_scores({{0.5, 0.9, 0.9}});
  const auto t = top_k(s, 1, Axis::PerRow);
  EXPECT_EQ(t.indices(0)[0], 1u);
  EXPECT_EQ(argmax_rows(s)[0], 1u);
}

TEST(TopK, FullWidthSortsRow) {
  const auto s = oracle::to_scores({{0.3, -0.1, 0.7, 0.2}});
  const auto t = top_k(s, 4, Axis::PerRow);
  EXPECT_EQ(std::vector<std::size_t>(t.indices(0).begin(), t.indices(0).end()),
            (std::vector<std::size_t>{2, 0, 3, 1}));
  EXPECT_THROW(top_k(s, 5, Axis::PerRow), ValidationError);
  EXPECT_THROW(top_k(s, 0, Axis::PerRow), ValidationError);
}

TEST(TopK, MatchesSortOracleBothAxes) {
  // Quantized values force plenty of ties.
  auto m = oracle::uniform(23, 31, 5);
  for (auto& r : m) {
    for (auto& v : r) v = std::round(v * 4) / 4;
  }
  const auto s = oracle::to_scores(m);
  for (std::size_t k : {1u, 3u, 10u, 23u}) {
    const auto rows = top_k(s, k, Axis::PerRow);
    for (std::size_t i = 0; i < 23; ++i) {
      const auto order = oracle::sort_desc(m[i]);
      for (std::size_t r = 0; r < k; ++r) {
        EXPECT_EQ(rows.indices(i)[r], order[r]);
        EXPECT_EQ(rows.scores(i)[r], m[i][order[r]]);
      }
    }
    const auto cols = top_k(s, k, Axis::PerCol);
    const auto mt = oracle::transpose(m);
    for (std::size_t j = 0; j < 31; ++j) {
      const auto order = oracle::sort_desc(mt[j]);
      for (std::size_t r = 0; r < k; ++r) EXPECT_EQ(cols.indices(j)[r], order[r]);
    }
  }
}

TEST(TopK, InvariantUnderDominatedColumns) {
  const auto m = oracle::uniform(10, 12, 9);
  auto wide = m;
  for (auto& r : wide) {
    r.push_back(-5.0);
    r.push_back(-7.0);
  }
  const auto a = top_k(oracle::to_scores(m), 4, Axis::PerRow);
  const auto b = top_k(oracle::to_scores(wide), 4, Axis::PerRow);
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.score, b.score);
}

TEST(Spectral, LineCloud) {
  oracle::Mat pts;
  for (int i = 0; i < 20; ++i) pts.push_back({1.0 + i, 2.0 + 2.0 * i});
  const auto sp = spectral_decompose(oracle::to_embedding(pts), 2);
  EXPECT_NEAR(sp.eigenvalues[0] / sp.total_variance, 1.0, 1e-12);
  EXPECT_NEAR(sp.eigenvalues[1], 0.0, 1e-9);
}

TEST(Spectral, KnownThreeOneZero) {
  // Four points whose covariance is exactly diag(3, 1, 0): +-s e1, +-t e2 with
  // 2 s^2 / 3 = 3 and 2 t^2 / 3 = 1.
  const double s = std::sqrt(4.5), t = std::sqrt(1.5);
  Eigen::MatrixXd x(4, 3);
  x << s, 0, 0, -s, 0, 0, 0, t, 0, 0, -t, 0;
  const auto sp = spectral_decompose(x, 3);
  EXPECT_NEAR(sp.eigenvalues[0], 3.0, 1e-8);
  EXPECT_NEAR(sp.eigenvalues[1], 1.0, 1e-8);
  EXPECT_NEAR(sp.eigenvalues[2], 0.0, 1e-8);
}

TEST(Spectral, IsotropicSample) {
  const auto sp = spectral_decompose(oracle::to_embedding(oracle::gaussian(20000, 4, 13)), 4);
  EXPECT_LT(sp.eigenvalues[0] / sp.eigenvalues[3], 1.1);
}

TEST(Spectral, OrthonormalAndReconstructs) {
  const auto x = oracle::gaussian(60, 8, 17);
  const auto sp = spectral_decompose(oracle::to_embedding(x), 8);
  const Eigen::MatrixXd gram = sp.components * sp.components.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-8);
  for (std::size_t i = 1; i < 8; ++i) EXPECT_GE(sp.eigenvalues[i - 1], sp.eigenvalues[i]);
  Eigen::MatrixXd xe = to_eigen(oracle::to_embedding(x));
  Eigen::MatrixXd xc = xe.rowwise() - xe.colwise().mean();
  const Eigen::MatrixXd cov = xc.transpose() * xc / 59.0;
  Eigen::VectorXd lam(8);
  for (int i = 0; i < 8; ++i) lam(i) = sp.eigenvalues[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd rebuilt = sp.components.transpose() * lam.asDiagonal() * sp.components;
  EXPECT_LT((rebuilt - cov).norm(), 1e-6);
  EXPECT_NEAR(sp.total_variance, cov.trace(), 1e-9);
}

TEST(Spectral, WideMatrixUsesGramSide) {
  // n << dim: the n x n route must agree with the direct covariance spectrum.
  const auto x = oracle::gaussian(12, 200, 19);
  const auto sp = spectral_decompose(oracle::to_embedding(x), 5);
  Eigen::MatrixXd xe = to_eigen(oracle::to_embedding(x));
  Eigen::MatrixXd xc = xe.rowwise() - xe.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xc.transpose() * xc / 11.0);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(sp.eigenvalues[static_cast<std::size_t>(i)], es.eigenvalues()(199 - i), 1e-8);
  const Eigen::MatrixXd gram = sp.components * sp.components.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(5, 5)).norm(), 1e-8);
}

TEST(Spectral, CountOutOfRange) {
  EXPECT_THROW(spectral_decompose(oracle::to_embedding(oracle::gaussian(5, 3, 1)), 4), ValidationError);
  EXPECT_THROW(spectral_decompose(oracle::to_embedding(oracle::gaussian(5, 3, 1)), 0), ValidationError);
}
