#include "hubscope/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/QR>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "hubscope/error.hpp"

namespace hubscope::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("sample SD needs at least 2 values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

std::vector<double> midranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> zscore(std::span<const double> x, const std::string& name) {
  const double m = mean(x);
  const double sd = sample_sd(x);
  if (!(sd > 0.0)) throw ValidationError("zero variance in " + name);
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m) / sd;
  return z;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double p_normal(double z) {
  if (std::isnan(z)) return 1.0;
  const boost::math::normal_distribution<double> nd;
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(nd, std::abs(z))));
}

double p_student_t(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t_distribution<double> td(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(td, std::abs(t))));
}

Design Design::subset(const std::vector<std::size_t>& cols) const {
  Design d;
  d.X.resize(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    d.X.col(static_cast<Eigen::Index>(c)) = X.col(static_cast<Eigen::Index>(cols[c]));
    d.names.push_back(names.at(cols[c]));
  }
  return d;
}

Design Design::without(std::size_t col) const {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < p(); ++c) {
    if (c != col) keep.push_back(c);
  }
  return subset(keep);
}

Design make_design(const std::vector<std::vector<double>>& columns,
                   const std::vector<std::string>& names) {
  if (columns.size() != names.size()) throw ValidationError("design: names and columns differ");
  if (columns.empty()) throw ValidationError("design needs at least one predictor");
  const std::size_t n = columns[0].size();
  Design d;
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != n) throw ValidationError("design column " + names[c] + " has wrong length");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(columns[c][i])) throw ValidationError("non-finite value in " + names[c]);
      d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = columns[c][i];
    }
  }
  d.names = names;
  return d;
}

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd z(X.rows(), X.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(X.cols()) = X;
  return z;
}

Eigen::Index rank_of(const Eigen::MatrixXd& m) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  return qr.rank();
}

Eigen::VectorXd to_vec(std::span<const double> y) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = y[i];
  return v;
}

}  // namespace

RegressionResult ols_standardized(std::span<const double> y, const Design& d) {
  const std::size_t n = y.size();
  const std::size_t p = d.p();
  if (d.n() != n) throw ValidationError("OLS: y and predictors differ in length");
  if (n <= p + 1) {
    throw ValidationError("OLS needs n > p + 1 (n = " + std::to_string(n) + ", p = " +
                          std::to_string(p) + ")");
  }
  const auto yz_v = zscore(y, "response");
  Eigen::MatrixXd xz(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t c = 0; c < p; ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    const auto z = zscore(col, "predictor " + d.names.at(c));
    for (std::size_t i = 0; i < n; ++i) xz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = z[i];
  }
  const Eigen::MatrixXd Z = with_intercept(xz);
  if (rank_of(Z) < Z.cols()) {
    for (Eigen::Index c = 2; c <= Z.cols(); ++c) {
      if (rank_of(Z.leftCols(c)) < c) {
        throw ValidationError("rank-deficient design: predictor '" +
                              d.names.at(static_cast<std::size_t>(c - 2)) +
                              "' is a linear combination of earlier columns");
      }
    }
  }
  const Eigen::VectorXd yz = to_vec(yz_v);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
  const Eigen::VectorXd coef = qr.solve(yz);
  const Eigen::VectorXd resid = yz - Z * coef;
  const auto k = static_cast<Eigen::Index>(p + 1);
  const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd xtx_inv = Rinv * Rinv.transpose();

  RegressionResult r;
  r.names = d.names;
  r.n = n;
  r.df_resid = n - p - 1;
  const double rss = resid.squaredNorm();
  const double tss = static_cast<double>(n - 1);  // z-scored response
  const double sigma2 = rss / static_cast<double>(r.df_resid);
  r.r2 = std::clamp(1.0 - rss / tss, 0.0, 1.0);
  r.adj_r2 = 1.0 - (1.0 - r.r2) * static_cast<double>(n - 1) / static_cast<double>(r.df_resid);
  r.intercept = coef(0);
  r.intercept_se = std::sqrt(sigma2 * xtx_inv(0, 0));
  for (std::size_t c = 0; c < p; ++c) {
    const auto idx = static_cast<Eigen::Index>(c + 1);
    const double b = coef(idx);
    const double se = std::sqrt(sigma2 * xtx_inv(idx, idx));
    const double t = se > 0.0 ? b / se : (b == 0.0 ? 0.0 : std::copysign(INFINITY, b));
    r.betas.push_back(b);
    r.se.push_back(se);
    r.t.push_back(t);
    r.p.push_back(p_student_t(t, static_cast<double>(r.df_resid)));
    r.partial_r2.push_back(std::isinf(t) ? 1.0 : t * t / (t * t + static_cast<double>(r.df_resid)));
  }
  r.residuals.assign(resid.data(), resid.data() + resid.size());
  r.design = Z;
  return r;
}

double r_squared(std::span<const double> y, const Eigen::MatrixXd& X) {
  if (X.cols() == 0) return 0.0;
  const Eigen::VectorXd yv = to_vec(y);
  const Eigen::MatrixXd Z = with_intercept(X);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  const Eigen::VectorXd coef = qr.solve(yv);
  const double rss = (yv - Z * coef).squaredNorm();
  const double tss = (yv.array() - yv.mean()).matrix().squaredNorm();
  if (!(tss > 0.0)) throw ValidationError("zero variance in response");
  return std::clamp(1.0 - rss / tss, 0.0, 1.0);
}

DominanceResult dominance_analysis(std::span<const double> y, const Design& d) {
  const std::size_t p = d.p();
  if (p < 1 || p > 12) throw ValidationError("dominance analysis supports 1 to 12 predictors");
  // Validates shapes and rank once on the full model.
  const RegressionResult full = ols_standardized(y, d);

  const std::size_t subsets = std::size_t{1} << p;
  std::vector<double> r2(subsets, 0.0);
  for (std::size_t mask = 1; mask < subsets; ++mask) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < p; ++c) {
      if (mask >> c & 1u) cols.push_back(c);
    }
    r2[mask] = r_squared(y, d.subset(cols).X);
  }

  DominanceResult out;
  out.names = d.names;
  out.r2 = full.r2;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> sum_by_size(p, 0.0);
    std::vector<std::size_t> count_by_size(p, 0);
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask >> j & 1u) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      sum_by_size[size] += r2[mask | (std::size_t{1} << j)] - r2[mask];
      ++count_by_size[size];
    }
    double g = 0.0;
    for (std::size_t s = 0; s < p; ++s) g += sum_by_size[s] / static_cast<double>(count_by_size[s]);
    g /= static_cast<double>(p);
    // Nested R^2 never decreases; anything below zero here is rounding.
    out.general.push_back(std::max(g, 0.0));
  }
  const double total = std::accumulate(out.general.begin(), out.general.end(), 0.0);
  if (!(total > 0.0)) throw NumericalError("dominance analysis: total explained variance is zero");
  for (double g : out.general) out.shares.push_back(100.0 * g / total);
  return out;
}

std::vector<double> vif(const Design& d) {
  if (d.p() < 2) throw ValidationError("VIF needs at least 2 predictors");
  std::vector<double> out;
  for (std::size_t j = 0; j < d.p(); ++j) {
    const Eigen::VectorXd col = d.X.col(static_cast<Eigen::Index>(j));
    const std::vector<double> target(col.data(), col.data() + col.size());
    const double r2 = r_squared(target, d.without(j).X);
    out.push_back(r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2));
  }
  return out;
}

namespace {

double pearson_r(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm(), syy = yc.squaredNorm();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ValidationError("correlation: zero variance input");
  return std::clamp(xc.dot(yc) / std::sqrt(sxx * syy), -1.0, 1.0);
}

Eigen::VectorXd residualize(const Eigen::VectorXd& v, const Eigen::MatrixXd& controls) {
  const Eigen::MatrixXd Z = with_intercept(controls);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  return v - Z * qr.solve(v);
}

double p_from_r(double r, double df) {
  if (std::abs(r) >= 1.0) return 0.0;
  return p_student_t(r * std::sqrt(df / (1.0 - r * r)), df);
}

}  // namespace

CorrelationResult correlation(std::span<const double> x, std::span<const double> y,
                              CorrMode mode, const Eigen::MatrixXd& controls,
                              const CorrelationOptions& opt) {
  if (x.size() != y.size()) throw ValidationError("correlation: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("correlation needs at least 3 observations");
  const std::size_t q = static_cast<std::size_t>(controls.cols());
  if (q > 0 && static_cast<std::size_t>(controls.rows()) != n) {
    throw ValidationError("correlation: control rows differ from sample size");
  }
  if (n < q + 3) throw ValidationError("correlation: too few observations for the controls");

  Eigen::VectorXd xv, yv;
  Eigen::MatrixXd cv = controls;
  if (mode == CorrMode::Spearman) {
    xv = to_vec(midranks(x));
    yv = to_vec(midranks(y));
    for (Eigen::Index c = 0; c < cv.cols(); ++c) {
      const Eigen::VectorXd col = cv.col(c);
      cv.col(c) = to_vec(midranks(std::span<const double>(col.data(), n)));
    }
  } else {
    xv = to_vec(x);
    yv = to_vec(y);
  }
  if (q > 0) {
    xv = residualize(xv, cv);
    yv = residualize(yv, cv);
  }

  CorrelationResult out;
  out.n = n;
  out.df = n - 2 - q;
  out.r = pearson_r(xv, yv);
  if (!opt.permutation) {
    out.p = p_from_r(out.r, static_cast<double>(out.df));
    return out;
  }
  if (n > 10) throw ValidationError("exact permutation p-values are limited to n <= 10");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t extreme = 0, total = 0;
  Eigen::VectorXd yp(static_cast<Eigen::Index>(n));
  const double obs = std::abs(out.r) - 1e-12;
  do {
    for (std::size_t i = 0; i < n; ++i) yp(static_cast<Eigen::Index>(i)) = yv(static_cast<Eigen::Index>(perm[i]));
    extreme += std::abs(pearson_r(xv, yp)) >= obs;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  out.p = static_cast<double>(extreme) / static_cast<double>(total);
  out.permutation = true;
  return out;
}

MannWhitneyResult mann_whitney_u(std::span<const double> xs, std::span<const double> ys,
                                 MwuMethod method) {
  if (xs.empty() || ys.empty()) throw ValidationError("Mann-Whitney needs two non-empty samples");
  const std::size_t nx = xs.size(), ny = ys.size(), N = nx + ny;
  std::vector<double> all(xs.begin(), xs.end());
  all.insert(all.end(), ys.begin(), ys.end());
  const auto ranks = midranks(all);
  double rx = 0.0;
  for (std::size_t i = 0; i < nx; ++i) rx += ranks[i];
  const double dnx = static_cast<double>(nx), dny = static_cast<double>(ny);

  MannWhitneyResult out;
  out.u_x = rx - dnx * (dnx + 1.0) / 2.0;
  out.u_y = dnx * dny - out.u_x;
  out.u = std::min(out.u_x, out.u_y);
  const double mu = dnx * dny / 2.0;

  const bool exact = method == MwuMethod::Exact || (method == MwuMethod::Auto && N <= kMwuExactLimit);
  if (exact) {
    if (N > 24) throw ValidationError("exact Mann-Whitney enumeration is limited to 24 observations");
    // Permutation distribution of the x rank sum over all C(N, nx) splits of
    // the observed midranks.
    const double obs = std::abs(out.u_x - mu) - 1e-9;
    std::size_t extreme = 0, total = 0;
    const std::uint32_t limit = std::uint32_t{1} << N;
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != nx) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        if (mask >> i & 1u) s += ranks[i];
      }
      const double u = s - dnx * (dnx + 1.0) / 2.0;
      extreme += std::abs(u - mu) >= obs;
      ++total;
    }
    out.p = std::min(1.0, static_cast<double>(extreme) / static_cast<double>(total));
    out.exact = true;
    return out;
  }
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < N;) {
    std::size_t j = i;
    while (j < N && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double dN = static_cast<double>(N);
  const double var = dnx * dny / 12.0 * ((dN + 1.0) - tie_term / (dN * (dN - 1.0)));
  if (!(var > 0.0)) {
    out.p = 1.0;
    return out;
  }
  const double z = std::max(0.0, std::abs(out.u_x - mu) - 0.5) / std::sqrt(var);
  out.p = p_normal(z);
  return out;
}

double cohens_d_within(std::span<const double> baseline, double treated_mean) {
  if (baseline.size() < 2) throw ValidationError("Cohen's d needs at least 2 baseline values");
  const double sd = sample_sd(baseline);
  if (!(sd > 0.0)) throw ValidationError("Cohen's d: zero baseline SD");
  return (treated_mean - mean(baseline)) / sd;
}

double cohens_d_within(std::span<const double> baseline, std::span<const double> treated) {
  if (baseline.size() != treated.size()) throw ValidationError("Cohen's d: length mismatch");
  return cohens_d_within(baseline, mean(treated));
}

SobelResult sobel(double a, double se_a, double b, double se_b) {
  for (double v : {a, se_a, b, se_b}) {
    if (!std::isfinite(v)) throw ValidationError("Sobel inputs must be finite");
  }
  const double num = a * b;
  const double den = std::sqrt(b * b * se_a * se_a + a * a * se_b * se_b);
  if (num == 0.0) return {0.0, 1.0};
  if (!(den > 0.0)) throw ValidationError("Sobel: zero standard error with a nonzero effect");
  const double z = num / den;
  return {z, p_normal(z)};
}

ClusterRobustResult cluster_robust_se(const RegressionResult& fit,
                                      const std::vector<std::string>& clusters,
                                      Reference reference) {
  const Eigen::MatrixXd& Z = fit.design;
  const auto n = static_cast<std::size_t>(Z.rows());
  const auto k = static_cast<std::size_t>(Z.cols());
  if (clusters.size() != n) throw ValidationError("cluster labels differ from sample size");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[clusters[i]].push_back(i);
  const std::size_t G = groups.size();
  if (G < 2) throw ValidationError("cluster-robust errors need at least 2 clusters");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(kk, kk).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(kk, kk));
  const Eigen::MatrixXd bread = Rinv * Rinv.transpose();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(kk, kk);
  for (const auto& [_, idx] : groups) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(kk);
    for (std::size_t i : idx) s += Z.row(static_cast<Eigen::Index>(i)).transpose() * fit.residuals[i];
    meat += s * s.transpose();
  }
  const double dG = static_cast<double>(G), dn = static_cast<double>(n), dk = static_cast<double>(k);
  const double factor = dG / (dG - 1.0) * (dn - 1.0) / (dn - dk);
  const Eigen::MatrixXd cov = factor * bread * meat * bread;

  ClusterRobustResult out;
  out.clusters = G;
  out.df = reference == Reference::StudentT ? dG - 1.0 : INFINITY;
  std::vector<double> coef{fit.intercept};
  coef.insert(coef.end(), fit.betas.begin(), fit.betas.end());
  for (std::size_t c = 0; c < k; ++c) {
    const double se = std::sqrt(std::max(cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)), 0.0));
    const double t = se > 0.0 ? coef[c] / se : 0.0;
    out.se.push_back(se);
    out.t.push_back(t);
    out.p.push_back(reference == Reference::StudentT ? p_student_t(t, dG - 1.0) : p_normal(t));
  }
  return out;
}

}  // namespace hubscope::stats
