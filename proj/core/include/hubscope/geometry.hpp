#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hubscope/corpus_store.hpp"
#include "hubscope/linalg.hpp"

namespace hubscope {

struct PairObservation {
  std::string model;
  std::string pair;
  double R = 0.0;
  double H = 0.0;
  double A = 0.0;
  double D = 0.0;
  int dim = 0;
  std::optional<double> b;
  bool replay = false;        // values copied from a fixture, not computed
  bool spectral_clipped = false;
};

// Nearest-neighbor hit counts per target for one retrieval direction.
struct InDegreeProfile {
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

// Counts, per target column, how many rows pick it as their argmax.
InDegreeProfile in_degree(const ScoreMatrix& s);

// Fraction of i that are mutual nearest neighbors: argmax of row i of S_fwd is
// i and argmax of row i of S_bwd is i. S_bwd is the tgt -> src matrix.
double reciprocity(const ScoreMatrix& s_fwd, const ScoreMatrix& s_bwd);

// Share of retrievals captured by the max(1, ceil(threshold * n_tgt)) most
// retrieved targets, ties broken toward the lower index.
std::size_t hub_slots(std::size_t n_tgt, double threshold);
double hub_mass(const InDegreeProfile& profile, double threshold);

enum class AnisotropyVariant { CosCentroid, Frac1, Spectral };

AnisotropyVariant parse_anisotropy(const std::string& name);
std::string to_string(AnisotropyVariant v);

struct AnisotropyValue {
  double value = 0.0;
  // Spectral only: eigenvalue count actually averaged (40 unless clipped).
  std::size_t top_m = 0;
  bool clipped = false;
};

inline constexpr std::size_t kSpectralTopM = 40;

AnisotropyValue anisotropy_detail(const EmbeddingMatrix& m, AnisotropyVariant variant);
double anisotropy(const EmbeddingMatrix& m, AnisotropyVariant variant);

// 1 - cos(mean(A), mean(B)).
double centroid_drift(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

// Fraction of rows i whose own index i is within the row's top k.
double recall_at_k(const ScoreMatrix& s, std::size_t k);

enum class HubDirection { Averaged, Forward };

struct ObservationConfig {
  double threshold = 0.01;
  AnisotropyVariant aniso = AnisotropyVariant::CosCentroid;
  HubDirection hub_direction = HubDirection::Averaged;
  std::optional<double> b;
};

// All constructs for one aligned pair, scored with cosine.
PairObservation pair_observation(const ParallelDataset& ds, const ObservationConfig& config = {});

// Variant that reuses precomputed forward and backward cosine matrices.
PairObservation pair_observation(const ParallelDataset& ds, const ScoreMatrix& cos_fwd,
                                 const ScoreMatrix& cos_bwd, const ObservationConfig& config);

// Fixture replay: returns the stored row unchanged, tagged as replay.
PairObservation pair_observation(const FixtureRow& row);

}  // namespace hubscope
