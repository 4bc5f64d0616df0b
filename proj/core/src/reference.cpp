#include "hubscope/reference.hpp"

#include "hubscope/error.hpp"

namespace hubscope::reference {

int model_dim(const std::string& model) {
  if (model == "Gemini") return 3072;
  if (model == "Mistral") return 1024;
  if (model == "OpenAI-L") return 3072;
  if (model == "OpenAI-S") return 1536;
  if (model == "Qwen") return 4096;
  throw ValidationError("no published dimension for model '" + model + "'");
}

const std::vector<ModelRetrieval>& retrieval_by_model() {
  static const std::vector<ModelRetrieval> v{
      {"Gemini", 0.265, 0.264, 0.338, 42.4},   {"Mistral", 0.094, 0.094, 0.214, 70.0},
      {"OpenAI-L", 0.193, 0.194, 0.300, 62.4}, {"OpenAI-S", 0.109, 0.115, 0.242, 78.0},
      {"Qwen", 0.177, 0.179, 0.288, 64.7},
  };
  return v;
}

const std::vector<EffectSize>& effect_sizes() {
  static const std::vector<EffectSize> v{
      {"Gemini", 1.24, -0.03, 42.0},  {"Mistral", 4.21, -0.01, 452.0}, {"OpenAI-L", 1.78, 0.02, 90.0},
      {"OpenAI-S", 3.02, 0.14, 22.0}, {"Qwen", 1.63, 0.04, 44.0},
  };
  return v;
}

const std::vector<AblationLevels>& ablation_levels() {
  static const std::vector<std::size_t> ks{0, 5, 10, 25, 50, 100, 250};
  static const std::vector<AblationLevels> v{
      {"Gemini", ks, {0.265, 0.265, 0.265, 0.265, 0.264, 0.264, 0.261}, false},
      {"Mistral", ks, {0.094, 0.094, 0.094, 0.094, 0.094, 0.094, 0.092}, false},
      {"OpenAI-L", ks, {0.193, 0.193, 0.193, 0.194, 0.194, 0.194, 0.194}, true},
      {"OpenAI-S", ks, {0.109, 0.110, 0.110, 0.112, 0.113, 0.115, 0.117}, true},
      {"Qwen", ks, {0.177, 0.177, 0.178, 0.178, 0.179, 0.179, 0.178}, false},
  };
  return v;
}

const std::vector<RecallRow>& recall_by_model() {
  static const std::vector<RecallRow> v{
      {"Gemini", 0.212, 0.372, 0.232, 0.404},   {"Mistral", 0.111, 0.209, 0.141, 0.256},
      {"OpenAI-L", 0.144, 0.266, 0.165, 0.297}, {"OpenAI-S", 0.055, 0.112, 0.068, 0.132},
      {"Qwen", 0.146, 0.247, 0.188, 0.322},
  };
  return v;
}

const std::vector<PhyloRow>& phylo_gaps() {
  static const std::vector<PhyloRow> v{
      {"Gemini", -0.015, -0.016, -0.040}, {"Mistral", 0.033, 0.033, -0.036},
      {"OpenAI-L", -0.008, -0.009, -0.119}, {"OpenAI-S", 0.047, 0.046, -0.029},
      {"Qwen", -0.058, -0.060, -0.033},
  };
  return v;
}

const std::vector<KSweepRow>& csls_k_sweep() {
  static const std::vector<KSweepRow> v{
      {0, 0.167, std::nullopt, 0.133}, {1, 0.304, 0.136, 0.155},  {5, 0.290, 0.123, 0.159},
      {10, 0.276, 0.109, 0.158},       {20, 0.263, 0.096, 0.158}, {50, 0.249, 0.081, 0.157},
      {100, 0.240, 0.072, 0.156},
  };
  return v;
}

StageTiming stage_timing() { return {1041.0, 117.0, 457.0, 1615.0}; }

const std::vector<MethodRow>& methods_by_model() {
  static const std::vector<MethodRow> v{
      {"Gemini", 0.265, 0.282, 0.280, 0.338, 0.300, 0.273, 0.233},
      {"Mistral", 0.094, 0.218, 0.216, 0.214, 0.305, 0.119, 0.195},
      {"OpenAI-L", 0.193, 0.233, 0.234, 0.300, 0.306, 0.210, 0.229},
      {"OpenAI-S", 0.109, 0.166, 0.167, 0.242, 0.313, 0.132, 0.184},
      {"Qwen", 0.177, 0.266, 0.263, 0.288, 0.303, 0.256, 0.233},
  };
  return v;
}

MethodRow methods_mean() { return {"Mean", 0.168, 0.233, 0.232, 0.276, 0.305, 0.198, 0.215}; }

const std::vector<InferenceRow>& inference_frameworks() {
  static const std::vector<InferenceRow> v{
      {"H", 0.0011, 0.038, 0.006, 1e-4, true, 49.5}, {"dim", 0.012, 0.052, 0.134, 0.626, false, 29.4},
      {"D", 0.668, 0.463, 0.576, 0.717, false, 8.7},   {"b", 0.065, 0.127, 0.003, 0.001, false, 7.7},
      {"A", 0.677, 0.631, 0.584, 0.489, false, 4.7},
  };
  return v;
}

const std::vector<SensitivityRow>& sensitivity_grid() {
  static const std::vector<SensitivityRow> v{
      {0.005, "cos-centroid", 0.726, -0.0489, 0.0020, 48.3}, {0.005, "frac1", 0.829, -0.0378, 0.0020, 40.1},
      {0.005, "spectral", 0.786, -0.0428, 0.0015, 45.5},     {0.01, "cos-centroid", 0.747, -0.0524, 0.0011, 49.5},
      {0.01, "frac1", 0.844, -0.0398, 0.0011, 41.4},         {0.01, "spectral", 0.803, -0.0447, 0.0008, 46.8},
      {0.02, "cos-centroid", 0.775, -0.0555, 0.0005, 50.9},  {0.02, "frac1", 0.858, -0.0418, 0.0005, 43.0},
      {0.02, "spectral", 0.820, -0.0467, 0.0004, 48.3},
  };
  return v;
}

const std::vector<RegressionRow>& joint_regression() {
  static const std::vector<RegressionRow> v{
      {"H", -0.052, 0.001, 0.302, 49.5}, {"A", 0.011, 0.677, 0.003, 4.7},
      {"D", 0.012, 0.668, 0.003, 8.7},   {"dim", 0.037, 0.012, 0.150, 29.4},
      {"b", -0.021, 0.065, 0.072, 7.7},
  };
  return v;
}

const std::vector<ValidityRow>& validity_tests() {
  static const std::vector<ValidityRow> v{
      {"T1", "r(H, CSLS gain) > 0, pairs", "-0.129", "0.589", "fail"},
      {"T2", "|partial r(A, CSLS gain | H)| < 0.30, pairs", "-0.274", "0.243", "pass"},
      {"T3a", "rho(H-bar, gap closure) > 0, models", "+1.000", "<0.001", "pass"},
      {"T3b", "rho(H-bar, R_cos) < 0, models", "-0.900", "0.037", "pass"},
      {"T3c", "|rho(CSLS gain, ablation gain)| < 0.70, models", "0.700", "0.188", "borderline"},
      {"T4", "Sobel p < 0.05, pairs", "z = 0.53", "0.595", "fail"},
      {"T5", "d_CSLS / d_abl > 2", "130.1x", "", "pass"},
  };
  return v;
}

const std::vector<FeatureContrast>& hub_feature_contrasts() {
  static const std::vector<FeatureContrast> v{
      {"Gemini", "token_len", 8.38, 7.69, 0.110, false},
      {"Gemini", "concreteness", 3.48, 3.42, 0.706, false},
      {"Gemini", "hypernym_depth", 3.89, 4.15, 0.444, false},
      {"Mistral", "token_len", 11.83, 7.13, 0.001, true},
      {"Mistral", "concreteness", 3.42, 3.23, 0.084, false},
      {"Mistral", "hypernym_depth", 4.26, 4.12, 0.185, false},
      {"OpenAI-L", "token_len", 7.45, 7.28, 0.854, false},
      {"OpenAI-L", "concreteness", 3.46, 3.30, 0.156, false},
      {"OpenAI-L", "hypernym_depth", 4.04, 4.06, 0.853, false},
      {"OpenAI-S", "token_len", 7.67, 7.23, 0.262, false},
      {"OpenAI-S", "concreteness", 3.45, 3.33, 0.332, false},
      {"OpenAI-S", "hypernym_depth", 4.60, 4.11, 0.009, false},
      {"Qwen", "token_len", 6.51, 8.11, 0.001, false},
      {"Qwen", "concreteness", 3.56, 3.32, 0.031, false},
      {"Qwen", "hypernym_depth", 4.59, 4.10, 0.102, false},
  };
  return v;
}

const std::vector<std::string>& construct_names() {
  static const std::vector<std::string> v{"H", "A", "D", "R_cos", "R_csls"};
  return v;
}

const std::vector<std::vector<double>>& construct_correlations() {
  static const std::vector<std::vector<double>> v{
      {1.00, -0.09, 0.38, -0.69, -0.84}, {-0.09, 1.00, -0.84, 0.01, -0.11},
      {0.38, -0.84, 1.00, -0.30, -0.27}, {-0.69, 0.01, -0.30, 1.00, 0.93},
      {-0.84, -0.11, -0.27, 0.93, 1.00},
  };
  return v;
}

const std::vector<Diagnostic>& validity_diagnostics() {
  static const std::vector<Diagnostic> v{
      {"r(H, A_cos)", -0.086},        {"r(H, A_frac1)", 0.169},      {"r(H, A_spec)", 0.005},
      {"max |r(H_i, A_j)|", 0.183},   {"VIF(H)", 1.52},              {"VIF(dim)", 1.51},
      {"VIF(b)", 1.03},               {"VIF(A)", 5.96},              {"VIF(D)", 6.81},
      {"r(R, H | dim, D, b)", -0.755}, {"r(R, A | dim, D, b)", -0.262}, {"r(H, A | dim, D, b)", 0.436},
  };
  return v;
}

}  // namespace hubscope::reference
