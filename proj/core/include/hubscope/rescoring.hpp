#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hubscope/corpus_store.hpp"
#include "hubscope/linalg.hpp"

namespace hubscope {

inline constexpr std::size_t kDefaultCslsK = 10;

// Mean top-k similarity of every query (r_src) and every candidate (r_tgt).
struct NeighborhoodCache {
  std::size_t k = 0;
  std::vector<double> r_src;
  std::vector<double> r_tgt;
};

struct RkOptions {
  // Monolingual use only: skip the diagonal entry when query and gallery are
  // the same set.
  bool exclude_self = false;
};

NeighborhoodCache precompute_rk(const ScoreMatrix& cos, std::size_t k, const RkOptions& opt = {});

// Same cache as precompute_rk(cosine_matrix(src, tgt), k), bit for bit, but
// scores src in blocks of block_rows so the full matrix never exists. This is
// the index-time pass when only the embeddings are at hand.
NeighborhoodCache precompute_rk_streaming(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                                          std::size_t k, std::size_t block_rows = 256);

// 2 cos[i][j] - r_src[i] - r_tgt[j].
ScoreMatrix csls(const ScoreMatrix& cos, const NeighborhoodCache& cache);

// Cache persistence: a JSON header file plus a little-endian f64 payload
// holding r_src followed by r_tgt.
void save_cache(const NeighborhoodCache& cache, const std::filesystem::path& path);
NeighborhoodCache load_cache(const std::filesystem::path& path);

// exp(tau cos[i][j]) normalized over queries i for each candidate j.
ScoreMatrix inverted_softmax(const ScoreMatrix& cos, double tau = 1.0);

// Phi((c - mu_i) / sd_i) * Phi((c - mu_j) / sd_j) with row and column
// Gaussians fitted to the similarity samples.
ScoreMatrix mutual_proximity(const ScoreMatrix& cos);

enum class TransformKind { Center, Abtt, Whiten };

struct Transform {
  TransformKind kind = TransformKind::Center;
  std::size_t param = 0;  // d for ABTT, m for whitening

  static Transform center() { return {TransformKind::Center, 0}; }
  static Transform abtt(std::size_t d) { return {TransformKind::Abtt, d}; }
  static Transform whiten(std::size_t m) { return {TransformKind::Whiten, m}; }
  std::string name() const;
};

struct TransformedSpace {
  EmbeddingMatrix src;
  EmbeddingMatrix tgt;
  Transform transform;
  Eigen::VectorXd mean;        // joint mean that was subtracted
  Eigen::MatrixXd components;  // removed (ABTT) or kept (whitening) directions, one per row
  std::vector<double> eigenvalues;
};

// Fits the transform once on the stacked src and tgt rows and applies it to
// both sides.
TransformedSpace transform_space(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                                 const Transform& t);

// The eight retrieval methods compared side by side.
enum class Method { Cosine, Csls, InvSoftmax, MutualProx, Center, Abtt1, Abtt3, Whiten128 };

Method parse_method(const std::string& name);
std::string to_string(Method m);
const std::vector<Method>& all_methods();

struct MethodOptions {
  std::size_t k = kDefaultCslsK;
  double tau = 1.0;
  std::size_t whiten_m = 128;
};

// Forward (src -> tgt) and backward (tgt -> src) scores under one method.
struct DirectedScores {
  ScoreMatrix fwd;
  ScoreMatrix bwd;
};

DirectedScores score_pair(const ParallelDataset& ds, Method method, const MethodOptions& opt = {});

// Same, starting from an already computed forward cosine matrix (used by the
// score-only methods; transforms recompute cosine on the transformed space).
DirectedScores score_pair(const ParallelDataset& ds, const ScoreMatrix& cos_fwd, Method method,
                          const MethodOptions& opt = {});

}  // namespace hubscope
