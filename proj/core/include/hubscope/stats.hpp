#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hubscope::stats {

double mean(std::span<const double> x);
// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> x);
// 1-based ranks with ties given their average rank.
std::vector<double> midranks(std::span<const double> x);
// z-scores with the sample SD. Throws ValidationError on zero variance.
std::vector<double> zscore(std::span<const double> x, const std::string& name = "input");

double normal_cdf(double z);
// Two-sided p-values.
double p_normal(double z);
double p_student_t(double t, double df);

// Predictors as columns; names are used in error messages and reports.
struct Design {
  Eigen::MatrixXd X;
  std::vector<std::string> names;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  Design subset(const std::vector<std::size_t>& cols) const;
  Design without(std::size_t col) const;
};

Design make_design(const std::vector<std::vector<double>>& columns,
                   const std::vector<std::string>& names);

struct RegressionResult {
  std::vector<std::string> names;
  std::vector<double> betas;  // standardized slopes, one per predictor
  std::vector<double> se;
  std::vector<double> t;
  std::vector<double> p;
  std::vector<double> partial_r2;
  double intercept = 0.0;  // zero up to rounding after standardization
  double intercept_se = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::size_t n = 0;
  std::size_t df_resid = 0;
  std::vector<double> residuals;
  // Standardized design with a leading intercept column; kept for the
  // cluster-robust refit.
  Eigen::MatrixXd design;
};

// OLS on z-scored y and predictors with an intercept, solved by Householder
// QR. Rank deficiency is reported with the first offending column.
RegressionResult ols_standardized(std::span<const double> y, const Design& d);

// R^2 of y on an intercept plus the given predictors (0 for no predictors).
double r_squared(std::span<const double> y, const Eigen::MatrixXd& X);

struct DominanceResult {
  std::vector<std::string> names;
  std::vector<double> general;  // general-dominance weight (R^2 units)
  std::vector<double> shares;   // percent of total R^2
  double r2 = 0.0;
};

DominanceResult dominance_analysis(std::span<const double> y, const Design& d);

// Infinite entries flag perfect collinearity.
std::vector<double> vif(const Design& d);

enum class CorrMode { Pearson, Spearman };

struct CorrelationResult {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  std::size_t df = 0;
  bool permutation = false;
};

struct CorrelationOptions {
  // Exact permutation p-value over all n! orderings; only for n <= 10.
  bool permutation = false;
};

// Pearson or Spearman r with a two-sided t-approximation p. With a non-empty
// control design, the partial correlation is the Pearson r of the residuals
// of x and y regressed on the controls (on ranks for Spearman).
CorrelationResult correlation(std::span<const double> x, std::span<const double> y,
                              CorrMode mode, const Eigen::MatrixXd& controls = {},
                              const CorrelationOptions& opt = {});

enum class MwuMethod { Auto, Exact, Normal };

struct MannWhitneyResult {
  double u_x = 0.0;  // pairs (x, y) with x > y, ties counted half
  double u_y = 0.0;
  double u = 0.0;    // min(u_x, u_y)
  double p = 1.0;
  bool exact = false;
};

inline constexpr std::size_t kMwuExactLimit = 16;

// Two-sided. Auto enumerates exactly when n_x + n_y <= 16, otherwise uses the
// normal approximation with tie and continuity corrections.
MannWhitneyResult mann_whitney_u(std::span<const double> xs, std::span<const double> ys,
                                 MwuMethod method = MwuMethod::Auto);

// (mean(treated) - mean(baseline)) / sample_sd(baseline).
double cohens_d_within(std::span<const double> baseline, std::span<const double> treated);
double cohens_d_within(std::span<const double> baseline, double treated_mean);

struct SobelResult {
  double z = 0.0;
  double p = 1.0;
};

SobelResult sobel(double a, double se_a, double b, double se_b);

enum class Reference { StudentT, Normal };

struct ClusterRobustResult {
  std::vector<double> se;  // intercept first, then predictors
  std::vector<double> t;
  std::vector<double> p;
  std::size_t clusters = 0;
  double df = 0.0;  // G - 1 under the t reference
};

// CR1 sandwich with small-sample factor G/(G-1) * (n-1)/(n-k), k counting the
// intercept. Singleton clusters reduce it to HC1.
ClusterRobustResult cluster_robust_se(const RegressionResult& fit,
                                      const std::vector<std::string>& clusters,
                                      Reference reference = Reference::StudentT);

}  // namespace hubscope::stats
