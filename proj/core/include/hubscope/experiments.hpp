#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hubscope/ablation.hpp"
#include "hubscope/corpus_store.hpp"
#include "hubscope/geometry.hpp"
#include "hubscope/report.hpp"
#include "hubscope/rescoring.hpp"
#include "hubscope/synth.hpp"

namespace hubscope {

// ---- gap closure and phylogenetic gap --------------------------------------

// g_m = (R_csls[m] - R_cos[m]) / (max(R_cos) - R_cos[m]). Models attaining the
// maximum get nullopt (zero denominator).
std::vector<std::optional<double>> gap_closure(std::span<const double> r_cos,
                                               std::span<const double> r_csls);

// Per-pair mode: r_cos[m][p] and r_csls[m][p] over models m and pairs p. The
// best model is found per pair, g is computed per pair and averaged over the
// pairs where it is defined. A model that is best on every pair gets nullopt.
std::vector<std::optional<double>> gap_closure_per_pair(
    const std::vector<std::vector<double>>& r_cos, const std::vector<std::vector<double>>& r_csls);

enum class DiagonalScore { Cosine, HubAblated, Csls };

std::string to_string(DiagonalScore s);

struct PhyloOptions {
  std::size_t k = kDefaultCslsK;     // CSLS neighborhood
  std::size_t ablation_k = 100;      // hubs dropped for HubAblated
};

// Mean corresponding-pair score of one dataset. HubAblated averages over the
// items whose target is not among the top ablation_k cosine hubs.
double mean_diagonal(const ParallelDataset& ds, DiagonalScore score, const PhyloOptions& opt = {});

// mean_diagonal(first) - mean_diagonal(second). Both datasets must share the
// source language and size.
double phylo_gap(const ParallelDataset& first, const ParallelDataset& second, DiagonalScore score,
                 const PhyloOptions& opt = {});

// ---- inputs ----------------------------------------------------------------

enum class InputKind { Fixture, Dataset, Synth };

struct ExperimentInput {
  InputKind kind = InputKind::Fixture;
  std::vector<FixtureRow> fixture;
  std::shared_ptr<const Corpus> corpus;
  std::optional<FeatureTable> features;
  std::string descriptor;  // printed in every report
};

ExperimentInput fixture_input(const std::filesystem::path& path);
ExperimentInput dataset_input(const std::filesystem::path& root,
                              const std::optional<std::filesystem::path>& features = std::nullopt);
// Synthetic corpus plus a synthetic feature table, both from cfg.seed.
ExperimentInput synth_input(const SynthCorpusConfig& cfg);

struct ExperimentConfig {
  double threshold = 0.01;
  AnisotropyVariant aniso = AnisotropyVariant::CosCentroid;
  std::size_t k = kDefaultCslsK;
  double tau = 1.0;
  std::uint64_t seed = 0;
  std::size_t ablation_k = 100;
  std::size_t random_trials = 10;
  AblationOptions ablation{};
  std::size_t hub_top = 100;  // hub sample size for the feature contrasts
  bool use_b = true;          // include the byte ratio when every row has one
};

// ---- per-pair computations shared by the experiments -----------------------

// Lazily computed, memoized scores per (model, pair) of a corpus. pairs()
// lists the analysed pairs in corpus model order and En-Bn, En-Hi, En-Ar,
// Hi-Bn pair order; the accessors accept any pair whose languages exist
// (the phylogenetic gap also needs Hi-Ar).
class Workspace {
 public:
  Workspace(std::shared_ptr<const Corpus> corpus, ExperimentConfig cfg);
  ~Workspace();
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  struct PairKey {
    std::string model;
    std::string pair;
    auto operator<=>(const PairKey&) const = default;
  };

  const Corpus& corpus() const { return *corpus_; }
  const ExperimentConfig& config() const { return cfg_; }

  // (model, pair) keys with both languages present, in report order.
  const std::vector<PairKey>& pairs() const { return pairs_; }
  std::vector<std::string> models() const;

  const ParallelDataset& dataset(const PairKey& key);
  const ScoreMatrix& cos_fwd(const PairKey& key);
  const ScoreMatrix& cos_bwd(const PairKey& key);
  const DirectedScores& scores(const PairKey& key, Method method);
  const DirectedScores& csls_at(const PairKey& key, std::size_t k);

  PairObservation observation(const PairKey& key, double threshold, AnisotropyVariant aniso);
  PairObservation observation(const PairKey& key) { return observation(key, cfg_.threshold, cfg_.aniso); }
  double ablated_R(const PairKey& key, std::size_t k);

 private:
  struct Entry;
  Entry& entry(const PairKey& key);

  std::shared_ptr<const Corpus> corpus_;
  ExperimentConfig cfg_;
  std::vector<PairKey> pairs_;
  std::map<PairKey, std::unique_ptr<Entry>> entries_;
};

// ---- synthetic directional checks -----------------------------------------

// Reciprocity of one synthetic pair under cosine, CSLS (cfg.k), top
// cfg.ablation_k hub ablation and the matched random ablation control.
struct DirectionalResult {
  double R_cos = 0.0;
  double R_csls = 0.0;
  double R_hub_ablated = 0.0;
  double R_random = 0.0;
  double hub_mass = 0.0;
};

DirectionalResult synth_direction(const SynthConfig& synth, const ExperimentConfig& cfg);

// ---- experiments -----------------------------------------------------------

// Experiment ids accepted by run_experiment, in canonical order.
const std::vector<std::string>& experiment_ids();

// Pair-level observations: replayed fixture rows or computed from the corpus.
std::vector<PairObservation> observations(const ExperimentInput& in, Workspace* ws);

struct E1Options {
  bool use_b = true;
  // Restrict to these predictors (by name among H, A, D, dim, b); empty = all.
  std::vector<std::string> predictors;
  // Fill the published_* columns (fixture inputs); otherwise they are flagged.
  bool published_reference = false;
};

ExperimentReport run_e1(const std::vector<PairObservation>& rows, const E1Options& opt,
                        const std::string& input_descriptor);

// Returns one or more reports; the first carries the experiment id. Pass a
// workspace to reuse scores across experiments on the same corpus; its
// config must match cfg.
std::vector<ExperimentReport> run_experiment(const std::string& id, const ExperimentInput& in,
                                             const ExperimentConfig& cfg, Workspace* ws = nullptr);

}  // namespace hubscope
