#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

// Published values used for replay cells and for reference columns in the
// experiment reports. Models appear in the order of kModels throughout.

namespace hubscope::reference {

inline const std::vector<std::string> kModels{"Gemini", "Mistral", "OpenAI-L", "OpenAI-S", "Qwen"};
inline const std::vector<std::string> kPairs{"En-Bn", "En-Hi", "En-Ar", "Hi-Bn"};

// Embedding dimensionality per model.
int model_dim(const std::string& model);

// Pair-averaged reciprocity under cosine, top-100 hub ablation and CSLS
// (k = 10), with the printed gap-closure percentage.
struct ModelRetrieval {
  std::string model;
  double r_cos;
  double r_abl;
  double r_csls;
  double gap_pct;
};
const std::vector<ModelRetrieval>& retrieval_by_model();
inline constexpr double kMeanGapPct = 63.5;

struct EffectSize {
  std::string model;
  double d_csls;
  double d_abl;
  double ratio;
};
const std::vector<EffectSize>& effect_sizes();
inline constexpr double kEffectRatioTableMean = 130.0;
inline constexpr double kEffectRatioText = 130.1;

// Pair-averaged R at each hub-ablation level k (k = 0 is cosine).
struct AblationLevels {
  std::string model;
  std::vector<std::size_t> ks;
  std::vector<double> R;
  bool monotone;
};
const std::vector<AblationLevels>& ablation_levels();

struct RecallRow {
  std::string model;
  double r1_cos;
  double r5_cos;
  double r1_csls;
  double r5_csls;
};
const std::vector<RecallRow>& recall_by_model();

struct PhyloRow {
  std::string model;
  double cos;
  double abl;
  double csls;
};
const std::vector<PhyloRow>& phylo_gaps();

struct KSweepRow {
  std::size_t k;  // 0 = plain cosine
  double mean_R;
  std::optional<double> delta;
  double mean_R1;
};
const std::vector<KSweepRow>& csls_k_sweep();

struct StageTiming {
  double rk_ms;
  double csls_ms;
  double cosine_ms;
  double total_ms;
};
StageTiming stage_timing();

struct MethodRow {
  std::string model;
  double cos, center, abtt1, csls, whiten, inv_softmax, mutual_prox;
};
const std::vector<MethodRow>& methods_by_model();
MethodRow methods_mean();

struct InferenceRow {
  std::string predictor;
  double p_ols;
  double p_cr_model;
  double p_cr_pair;
  double p_lme;           // upper bound when lme_bound is set
  bool lme_bound;
  double dominance_pct;
};
const std::vector<InferenceRow>& inference_frameworks();

struct SensitivityRow {
  double threshold;
  std::string aniso;
  double r2;
  double beta_h;
  double p_h;
  double dom_h;
};
const std::vector<SensitivityRow>& sensitivity_grid();

struct RegressionRow {
  std::string predictor;
  double beta;
  double p;
  double partial_r2;
  double dominance_pct;
};
const std::vector<RegressionRow>& joint_regression();
inline constexpr double kJointR2 = 0.747;

struct ValidityRow {
  std::string id;
  std::string test;
  std::string observed;
  std::string p;
  std::string verdict;
};
const std::vector<ValidityRow>& validity_tests();

struct FeatureContrast {
  std::string model;
  std::string feature;
  double hub;
  double nonhub;
  double p;
  bool p_bound;  // printed as "< p"
};
const std::vector<FeatureContrast>& hub_feature_contrasts();

// Pair-level correlation matrix over H, A, D, R_cos, R_csls.
const std::vector<std::string>& construct_names();
const std::vector<std::vector<double>>& construct_correlations();

struct Diagnostic {
  std::string name;
  double value;
};
const std::vector<Diagnostic>& validity_diagnostics();

}  // namespace hubscope::reference
