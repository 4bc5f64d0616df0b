#include "hubscope/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "hubscope/error.hpp"
#include "hubscope/parallel.hpp"

namespace hubscope {

std::string_view to_string(ScoreMethod m) {
  switch (m) {
    case ScoreMethod::Cosine: return "cosine";
    case ScoreMethod::Csls: return "csls";
    case ScoreMethod::InvSoftmax: return "inv-softmax";
    case ScoreMethod::MutualProx: return "mutual-prox";
    case ScoreMethod::Derived: return "derived";
  }
  return "unknown";
}

ScoreMatrix::ScoreMatrix(std::size_t n_src, std::size_t n_tgt, std::vector<double> scores,
                         ScoreMethod method)
    : n_src_(n_src), n_tgt_(n_tgt), scores_(std::move(scores)), method_(method) {
  if (n_src_ == 0 || n_tgt_ == 0) throw ValidationError("score matrix must be non-empty");
  if (scores_.size() != n_src_ * n_tgt_) {
    throw ValidationError("score matrix holds " + std::to_string(scores_.size()) +
                          " values, expected " + std::to_string(n_src_ * n_tgt_));
  }
  const bool cosine = method_ == ScoreMethod::Cosine;
  for (std::size_t idx = 0; idx < scores_.size(); ++idx) {
    const double v = scores_[idx];
    if (!std::isfinite(v) || (cosine && std::abs(v) > 1.0 + 1e-9)) {
      throw NumericalError("invalid " + std::string(to_string(method_)) + " score at (" +
                           std::to_string(idx / n_tgt_) + ", " + std::to_string(idx % n_tgt_) +
                           ")");
    }
  }
}

ScoreMatrix ScoreMatrix::transposed() const {
  std::vector<double> t(scores_.size());
  constexpr std::size_t B = 64;
  for (std::size_t i0 = 0; i0 < n_src_; i0 += B) {
    for (std::size_t j0 = 0; j0 < n_tgt_; j0 += B) {
      const std::size_t i1 = std::min(n_src_, i0 + B), j1 = std::min(n_tgt_, j0 + B);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) t[j * n_src_ + i] = scores_[i * n_tgt_ + j];
      }
    }
  }
  return ScoreMatrix(n_tgt_, n_src_, std::move(t), method_);
}

namespace {

typedef double v4d __attribute__((vector_size(32)));

inline v4d load4(const double* p) {
  v4d v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline double hsum(v4d v) { return (v[0] + v[1]) + (v[2] + v[3]); }

std::size_t round_up(std::size_t x, std::size_t m) { return (x + m - 1) / m * m; }

// Rows scaled to unit norm, zero-padded to `cols` columns and `rows` rows.
std::vector<double> normalized_padded(const EmbeddingMatrix& m, std::size_t rows,
                                      std::size_t cols) {
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto r = m.row(i);
    const double inv = 1.0 / std::sqrt(fixed_dot(r, r));
    for (std::size_t j = 0; j < r.size(); ++j) out[i * cols + j] = r[j] * inv;
  }
  return out;
}

}  // namespace

double fixed_dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  const std::size_t full = n / 4 * 4;
  v4d acc = {0, 0, 0, 0};
  for (std::size_t k = 0; k < full; k += 4) acc += load4(a.data() + k) * load4(b.data() + k);
  if (full < n) {
    double ta[4] = {0, 0, 0, 0}, tb[4] = {0, 0, 0, 0};
    for (std::size_t k = full; k < n; ++k) {
      ta[k - full] = a[k];
      tb[k - full] = b[k];
    }
    acc += load4(ta) * load4(tb);
  }
  return hsum(acc);
}

ScoreMatrix cosine_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
  }
  constexpr std::size_t MR = 4, NR = 4;
  const std::size_t dp = round_up(a.dim(), 4);
  const std::size_t na = round_up(a.n(), MR), nb = round_up(b.n(), NR);
  const std::vector<double> pa = normalized_padded(a, na, dp);
  const std::vector<double> pb = normalized_padded(b, nb, dp);
  const std::size_t n_src = a.n(), n_tgt = b.n();
  std::vector<double> out(n_src * n_tgt);

  // Tiles of A rows x B rows sized to stay cache-resident; every output entry
  // is one 4x4 micro-kernel lane, accumulated over k in order.
  constexpr std::size_t TJ = 64;
  const std::size_t quads = na / MR;
  parallel_for(quads, [&](std::size_t q0, std::size_t q1) {
    for (std::size_t j0 = 0; j0 < nb; j0 += TJ) {
      const std::size_t j1 = std::min(nb, j0 + TJ);
      for (std::size_t q = q0; q < q1; ++q) {
        const std::size_t i = q * MR;
        const double* a0 = pa.data() + i * dp;
        for (std::size_t j = j0; j < j1; j += NR) {
          const double* b0 = pb.data() + j * dp;
          v4d c[MR][NR];
          for (auto& row : c) {
            for (auto& v : row) v = v4d{0, 0, 0, 0};
          }
          for (std::size_t k = 0; k < dp; k += 4) {
            v4d av[MR], bv[NR];
            for (std::size_t r = 0; r < MR; ++r) av[r] = load4(a0 + r * dp + k);
            for (std::size_t s = 0; s < NR; ++s) bv[s] = load4(b0 + s * dp + k);
            for (std::size_t r = 0; r < MR; ++r) {
              for (std::size_t s = 0; s < NR; ++s) c[r][s] += av[r] * bv[s];
            }
          }
          for (std::size_t r = 0; r < MR && i + r < n_src; ++r) {
            for (std::size_t s = 0; s < NR && j + s < n_tgt; ++s) {
              out[(i + r) * n_tgt + j + s] = std::clamp(hsum(c[r][s]), -1.0, 1.0);
            }
          }
        }
      }
    }
  });
  return ScoreMatrix(n_src, n_tgt, std::move(out), ScoreMethod::Cosine);
}

std::vector<std::size_t> argmax_rows(const ScoreMatrix& s) {
  std::vector<std::size_t> best(s.n_src());
  parallel_for(s.n_src(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto r = s.row(i);
      std::size_t arg = 0;
      for (std::size_t j = 1; j < r.size(); ++j) {
        if (r[j] > r[arg]) arg = j;
      }
      best[i] = arg;
    }
  });
  return best;
}

NeighborLists top_k(const ScoreMatrix& s, std::size_t k, Axis axis) {
  const bool rows = axis == Axis::PerRow;
  const std::size_t lists = rows ? s.n_src() : s.n_tgt();
  const std::size_t width = rows ? s.n_tgt() : s.n_src();
  if (k < 1 || k > width) {
    throw ValidationError("top_k: k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(width) + "]");
  }
  NeighborLists out;
  out.k = k;
  out.lists = lists;
  out.index.resize(lists * k);
  out.score.resize(lists * k);
  parallel_for(lists, [&](std::size_t b, std::size_t e) {
    std::vector<double> vals(width);
    std::vector<std::size_t> idx(width);
    for (std::size_t l = b; l < e; ++l) {
      for (std::size_t w = 0; w < width; ++w) vals[w] = rows ? s(l, w) : s(w, l);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      auto better = [&](std::size_t x, std::size_t y) {
        return vals[x] > vals[y] || (vals[x] == vals[y] && x < y);
      };
      if (k < width) std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), better);
      std::sort(idx.begin(), idx.begin() + k, better);
      for (std::size_t t = 0; t < k; ++t) {
        out.index[l * k + t] = idx[t];
        out.score[l * k + t] = vals[idx[t]];
      }
    }
  });
  return out;
}

Eigen::MatrixXd to_eigen(const EmbeddingMatrix& m) {
  Eigen::MatrixXd x(m.n(), m.dim());
  for (std::size_t i = 0; i < m.n(); ++i) {
    for (std::size_t j = 0; j < m.dim(); ++j) x(i, j) = m.at(i, j);
  }
  return x;
}

Spectrum spectral_decompose(const EmbeddingMatrix& m, std::size_t count) {
  return spectral_decompose(to_eigen(m), count);
}

Spectrum spectral_decompose(const Eigen::MatrixXd& observations, std::size_t count) {
  const auto n = static_cast<std::size_t>(observations.rows());
  const auto dim = static_cast<std::size_t>(observations.cols());
  if (n < 2) throw ValidationError("spectral_decompose needs at least 2 observations");
  if (count < 1 || count > std::min(n, dim)) {
    throw ValidationError("spectral_decompose: m = " + std::to_string(count) + " outside [1, " +
                          std::to_string(std::min(n, dim)) + "]");
  }
  Spectrum sp;
  sp.mean = observations.colwise().mean().transpose();
  const Eigen::MatrixXd xc = observations.rowwise() - sp.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  sp.total_variance = xc.squaredNorm() / denom;

  // Eigen-solve whichever Gram side is smaller.
  const bool gram_side = n < dim;
  const Eigen::MatrixXd g = gram_side ? Eigen::MatrixXd(xc * xc.transpose() / denom)
                                      : Eigen::MatrixXd(xc.transpose() * xc / denom);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge");
  }
  const auto& evals = solver.eigenvalues();  // ascending
  const auto& evecs = solver.eigenvectors();
  const Eigen::Index size = evals.size();
  const double lmax = std::max(evals(size - 1), 0.0);
  const double tiny = 1e-12 * std::max(lmax, 1e-300);

  sp.eigenvalues.resize(count);
  sp.components.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  std::size_t filled = 0;
  for (std::size_t c = 0; c < count; ++c) {
    const Eigen::Index src = size - 1 - static_cast<Eigen::Index>(c);
    const double lambda = std::max(evals(src), 0.0);
    sp.eigenvalues[c] = lambda;
    if (!gram_side) {
      sp.components.row(static_cast<Eigen::Index>(c)) = evecs.col(src).transpose();
      ++filled;
    } else if (lambda > tiny) {
      Eigen::VectorXd v = xc.transpose() * evecs.col(src);
      sp.components.row(static_cast<Eigen::Index>(c)) = (v / v.norm()).transpose();
      ++filled;
    } else {
      break;
    }
  }
  // Gram side with a null tail: complete the basis deterministically with
  // Gram-Schmidt over the standard basis.
  std::size_t basis = 0;
  for (std::size_t c = filled; c < count; ++c) {
    for (;; ++basis) {
      if (basis >= dim) throw NumericalError("could not complete an orthonormal basis");
      Eigen::VectorXd v = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(basis));
      for (std::size_t p = 0; p < c; ++p) {
        const auto row = sp.components.row(static_cast<Eigen::Index>(p));
        v -= row.dot(v) * row.transpose();
      }
      if (v.norm() > 1e-6) {
        sp.components.row(static_cast<Eigen::Index>(c)) = (v / v.norm()).transpose();
        ++basis;
        break;
      }
    }
  }
  return sp;
}

}  // namespace hubscope
