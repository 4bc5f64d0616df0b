#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hubscope/corpus_store.hpp"
#include "hubscope/geometry.hpp"
#include "hubscope/linalg.hpp"

namespace hubscope {

inline const std::vector<std::size_t> kAblationKs{0, 5, 10, 25, 50, 100, 250};

// Target indices by descending in-degree, ties toward the lower index.
std::vector<std::size_t> rank_hubs(const InDegreeProfile& profile);

enum class HubRanking {
  Static,     // rank once on the full pool
  Iterative,  // re-rank on the reduced pool at every ablation level
};

enum class RemovalSemantics {
  CandidatePool,  // removed targets cannot be retrieved; denominator stays n
  DropPairs,      // aligned pairs leave the problem on both sides; denominator n - k
};

struct AblationOptions {
  HubRanking ranking = HubRanking::Static;
  RemovalSemantics semantics = RemovalSemantics::CandidatePool;
};

// Reciprocity after removing the given target indices. fwd is src -> tgt,
// bwd is tgt -> src.
double reciprocity_without(const ScoreMatrix& fwd, const ScoreMatrix& bwd,
                           std::span<const std::size_t> removed,
                           RemovalSemantics semantics = RemovalSemantics::CandidatePool);

// Targets removed at level k. Static ranking takes the first k of the full
// ranking; iterative ranking walks the standard levels up to k, re-ranking
// the surviving pool at each step.
std::vector<std::size_t> hubs_to_remove(const ScoreMatrix& fwd, std::size_t k,
                                        HubRanking ranking);

double ablate_topk(const ScoreMatrix& fwd, const ScoreMatrix& bwd, std::size_t k,
                   const AblationOptions& opt = {});
double ablate_topk(const ParallelDataset& ds, std::size_t k, const AblationOptions& opt = {});

// Mean reciprocity over `trials` uniformly random k-subsets of targets. Trial
// t draws from a generator seeded with (seed, t).
double random_ablation_control(const ScoreMatrix& fwd, const ScoreMatrix& bwd, std::size_t k,
                               std::size_t trials, std::uint64_t seed,
                               RemovalSemantics semantics = RemovalSemantics::CandidatePool);
double random_ablation_control(const ParallelDataset& ds, std::size_t k, std::size_t trials,
                               std::uint64_t seed,
                               RemovalSemantics semantics = RemovalSemantics::CandidatePool);

struct AblationCurve {
  std::vector<std::size_t> ks;
  std::vector<double> R_values;
  bool monotone = false;  // R non-increasing in k
};

AblationCurve ablation_curve(const ScoreMatrix& fwd, const ScoreMatrix& bwd,
                             const std::vector<std::size_t>& ks = kAblationKs,
                             const AblationOptions& opt = {});

}  // namespace hubscope
