#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "hubscope/corpus_store.hpp"

namespace hubscope {

enum class ScoreMethod { Cosine, Csls, InvSoftmax, MutualProx, Derived };

std::string_view to_string(ScoreMethod m);

// Dense n_src x n_tgt scores, row-major. Row i holds query i's scores against
// every candidate. Entries are finite; cosine matrices stay within [-1, 1]
// up to 1e-9.
class ScoreMatrix {
 public:
  ScoreMatrix(std::size_t n_src, std::size_t n_tgt, std::vector<double> scores,
              ScoreMethod method);

  std::size_t n_src() const { return n_src_; }
  std::size_t n_tgt() const { return n_tgt_; }
  ScoreMethod method() const { return method_; }
  bool square() const { return n_src_ == n_tgt_; }

  double operator()(std::size_t i, std::size_t j) const { return scores_[i * n_tgt_ + j]; }
  std::span<const double> row(std::size_t i) const { return {scores_.data() + i * n_tgt_, n_tgt_}; }
  std::span<const double> data() const { return scores_; }

  // Same scores seen from the other side: (j, i) entries, same method.
  ScoreMatrix transposed() const;

 private:
  std::size_t n_src_;
  std::size_t n_tgt_;
  std::vector<double> scores_;
  ScoreMethod method_;
};

// Dot product with the library's fixed summation order: four interleaved
// partial sums (lane = index mod 4), combined as (l0 + l1) + (l2 + l3).
double fixed_dot(std::span<const double> a, std::span<const double> b);

// cos(A_i, B_j) for every pair. Rows are normalized once, then every entry is
// one fixed_dot, so the result does not depend on the thread count.
ScoreMatrix cosine_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

// Argmax per row with the lowest index winning ties.
std::vector<std::size_t> argmax_rows(const ScoreMatrix& s);

enum class Axis { PerRow, PerCol };

// k best entries of each row (or column), best first. Ties go to the lower
// index.
struct NeighborLists {
  std::size_t k = 0;
  std::size_t lists = 0;
  std::vector<std::size_t> index;  // lists x k
  std::vector<double> score;       // lists x k

  std::span<const std::size_t> indices(std::size_t l) const { return {index.data() + l * k, k}; }
  std::span<const double> scores(std::size_t l) const { return {score.data() + l * k, k}; }
};

NeighborLists top_k(const ScoreMatrix& s, std::size_t k, Axis axis);

// Top-m eigenpairs of a sample covariance (n - 1 denominator).
struct Spectrum {
  std::vector<double> eigenvalues;  // descending, clipped at 0
  Eigen::MatrixXd components;       // m x dim, orthonormal rows
  double total_variance = 0.0;      // trace of the covariance (sum over the full spectrum)
  Eigen::VectorXd mean;             // the centering vector that was removed
};

Spectrum spectral_decompose(const EmbeddingMatrix& m, std::size_t count);

// Same, for an arbitrary observation matrix (one observation per row).
Spectrum spectral_decompose(const Eigen::MatrixXd& observations, std::size_t count);

// Copies an embedding matrix into an Eigen matrix (n x dim).
Eigen::MatrixXd to_eigen(const EmbeddingMatrix& m);

}  // namespace hubscope
