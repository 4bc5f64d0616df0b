#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hubscope/corpus_store.hpp"

namespace hubscope {

struct SynthConfig {
  std::size_t n = 1000;
  std::size_t dim = 128;
  double noise = 0.5;         // rotation angle scale and per-item perturbation
  double hub_strength = 0.0;  // gamma
  std::size_t hub_count = 10;
  double mean_offset = 0.0;   // theta, radians
  double aniso_pull = 0.0;    // shrink toward a shared direction, [0, 1]
  std::uint64_t seed = 0;
  // Round every generated value to the nearest float so the dataset survives
  // a raw-f32 round trip bit-exactly. Off by default: rounding perturbs the
  // constructed centroid angle at the 1e-8 level.
  bool float32 = false;
  std::string model_id = "synth";
  std::string src_lang = "En";
  std::string tgt_lang = "Bn";
};

// Throws ValidationError naming the bad field.
void validate(const SynthConfig& cfg);

// Per-language parameters for a derived language.
struct SynthLanguage {
  std::string lang;
  double noise = 0.5;
  double hub_strength = 0.0;
  std::size_t hub_count = 10;
  double mean_offset = 0.0;
};

// Source cloud: unit Gaussian rows pulled toward a random unit direction c.
// Each derived language: rows mapped by a Cayley rotation whose angle scale is
// `noise`, plus noise / sqrt(dim) Gaussian jitter, plus gamma times the unit
// source-centroid direction on hub_count random rows (targets pushed toward
// where the queries concentrate), then shifted so its centroid sits at angle
// theta from the source centroid (same norm). All randomness comes from the
// seed. Hub injection needs aniso_pull > 0: an isotropic source cloud has no
// direction shared by the queries.
std::vector<EmbeddingMatrix> generate_languages(const SynthConfig& base,
                                                const std::vector<SynthLanguage>& derived);

// Two-language case: src plus one derived language built from the config.
ParallelDataset generate_parallel(const SynthConfig& cfg);

// Configuration used by the directional E2/E3 checks (chosen by a seeded
// sweep; see docs/synth_calibration.md).
SynthConfig calibrated_config(std::uint64_t seed);

struct SynthCorpusConfig {
  std::size_t n = 600;
  std::uint64_t seed = 0;
  bool float32 = true;
};

// Five synthetic models over En, Hi, Bn, Ar with model-specific noise, hub
// strength, anisotropy and dimension, for running the experiment grid
// without real embeddings.
Corpus synth_corpus(const SynthCorpusConfig& cfg);

// Item features for the English side of a synthetic corpus: token_len is the
// English text length, concreteness is uniform on [1, 5] and hypernym_depth
// uniform on {2..9}, both drawn from the seed.
FeatureTable synth_feature_table(const Corpus& corpus, std::uint64_t seed);

}  // namespace hubscope
