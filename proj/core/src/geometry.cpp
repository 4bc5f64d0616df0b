#include "hubscope/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hubscope/error.hpp"
#include "hubscope/parallel.hpp"

namespace hubscope {

InDegreeProfile in_degree(const ScoreMatrix& s) {
  InDegreeProfile p;
  p.counts.assign(s.n_tgt(), 0);
  for (std::size_t j : argmax_rows(s)) ++p.counts[j];
  p.total = s.n_src();
  return p;
}

double reciprocity(const ScoreMatrix& s_fwd, const ScoreMatrix& s_bwd) {
  if (!s_fwd.square() || !s_bwd.square()) throw ValidationError("reciprocity needs square scores");
  if (s_fwd.n_src() != s_bwd.n_src()) throw ValidationError("reciprocity: size mismatch");
  const auto f = argmax_rows(s_fwd);
  const auto b = argmax_rows(s_bwd);
  std::size_t mutual = 0;
  for (std::size_t i = 0; i < f.size(); ++i) mutual += (f[i] == i && b[i] == i);
  return static_cast<double>(mutual) / static_cast<double>(f.size());
}

std::size_t hub_slots(std::size_t n_tgt, double threshold) {
  const auto slots = static_cast<std::size_t>(std::ceil(threshold * static_cast<double>(n_tgt)));
  return std::clamp<std::size_t>(slots, 1, n_tgt);
}

double hub_mass(const InDegreeProfile& profile, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("hub threshold must lie in (0, 1)");
  }
  if (profile.total == 0 || profile.counts.empty()) {
    throw ValidationError("hub_mass needs a non-empty profile");
  }
  std::vector<std::size_t> c = profile.counts;
  const std::size_t slots = hub_slots(c.size(), threshold);
  // Which targets fill the slots only matters through their counts.
  std::partial_sort(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(slots), c.end(),
                    std::greater<>());
  const std::size_t captured = std::accumulate(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(slots),
                                               std::size_t{0});
  return static_cast<double>(captured) / static_cast<double>(profile.total);
}

AnisotropyVariant parse_anisotropy(const std::string& name) {
  if (name == "cos-centroid") return AnisotropyVariant::CosCentroid;
  if (name == "frac1") return AnisotropyVariant::Frac1;
  if (name == "spectral") return AnisotropyVariant::Spectral;
  throw ValidationError("unknown anisotropy variant '" + name + "'");
}

std::string to_string(AnisotropyVariant v) {
  switch (v) {
    case AnisotropyVariant::CosCentroid: return "cos-centroid";
    case AnisotropyVariant::Frac1: return "frac1";
    case AnisotropyVariant::Spectral: return "spectral";
  }
  return "unknown";
}

namespace {

std::vector<double> centroid(const EmbeddingMatrix& m) {
  std::vector<double> c(m.dim(), 0.0);
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += r[j];
  }
  for (double& v : c) v /= static_cast<double>(m.n());
  return c;
}

double norm(std::span<const double> v) { return std::sqrt(fixed_dot(v, v)); }

}  // namespace

AnisotropyValue anisotropy_detail(const EmbeddingMatrix& m, AnisotropyVariant variant) {
  if (m.n() < 2) throw ValidationError("anisotropy needs n >= 2");
  AnisotropyValue out;
  if (variant == AnisotropyVariant::CosCentroid) {
    const auto c = centroid(m);
    const double cn = norm(c);
    if (!(cn > 0.0)) throw NumericalError("degenerate centroid (zero norm) in " + m.lang());
    double sum = 0.0;
    for (std::size_t i = 0; i < m.n(); ++i) sum += fixed_dot(m.row(i), c) / (norm(m.row(i)) * cn);
    out.value = sum / static_cast<double>(m.n());
    return out;
  }
  const std::size_t cap = std::min(m.n(), m.dim());
  if (variant == AnisotropyVariant::Frac1) {
    const Spectrum sp = spectral_decompose(m, 1);
    if (!(sp.total_variance > 0.0)) throw NumericalError("zero total variance in " + m.lang());
    out.value = sp.eigenvalues[0] / sp.total_variance;
    return out;
  }
  std::size_t top = kSpectralTopM;
  if (m.n() <= kSpectralTopM + 1) {
    top = m.n() - 1;
    out.clipped = true;
  }
  if (top > cap) {
    top = cap;
    out.clipped = true;
  }
  const Spectrum sp = spectral_decompose(m, top);
  if (!(sp.eigenvalues[0] > 0.0)) throw NumericalError("zero leading eigenvalue in " + m.lang());
  const double mean = std::accumulate(sp.eigenvalues.begin(), sp.eigenvalues.end(), 0.0) /
                      static_cast<double>(top);
  out.value = 1.0 - mean / sp.eigenvalues[0];
  out.top_m = top;
  return out;
}

double anisotropy(const EmbeddingMatrix& m, AnisotropyVariant variant) {
  return anisotropy_detail(m, variant).value;
}

double centroid_drift(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.dim() != b.dim()) throw ValidationError("centroid_drift: dimension mismatch");
  const auto ca = centroid(a);
  const auto cb = centroid(b);
  const double na = norm(ca), nb = norm(cb);
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericalError("centroid_drift: zero centroid");
  const double cosv = std::clamp(fixed_dot(ca, cb) / (na * nb), -1.0, 1.0);
  return 1.0 - cosv;
}

double recall_at_k(const ScoreMatrix& s, std::size_t k) {
  if (!s.square()) throw ValidationError("recall_at_k needs an aligned square matrix");
  if (k < 1 || k > s.n_tgt()) throw ValidationError("recall_at_k: k out of range");
  std::vector<unsigned char> hit(s.n_src(), 0);
  parallel_for(s.n_src(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      // Own index is in the top k iff fewer than k entries beat it under the
      // lower-index tie rule.
      const auto r = s.row(i);
      const double own = r[i];
      std::size_t better = 0;
      for (std::size_t j = 0; j < r.size() && better < k; ++j) {
        better += (r[j] > own || (r[j] == own && j < i));
      }
      hit[i] = better < k;
    }
  });
  const auto hits = std::accumulate(hit.begin(), hit.end(), std::size_t{0});
  return static_cast<double>(hits) / static_cast<double>(s.n_src());
}

PairObservation pair_observation(const ParallelDataset& ds, const ScoreMatrix& cos_fwd,
                                 const ScoreMatrix& cos_bwd, const ObservationConfig& config) {
  PairObservation o;
  o.model = ds.src().model_id();
  o.pair = ds.pair_id();
  o.R = reciprocity(cos_fwd, cos_bwd);
  const double h_fwd = hub_mass(in_degree(cos_fwd), config.threshold);
  o.H = config.hub_direction == HubDirection::Forward
            ? h_fwd
            : 0.5 * (h_fwd + hub_mass(in_degree(cos_bwd), config.threshold));
  const auto a_src = anisotropy_detail(ds.src(), config.aniso);
  const auto a_tgt = anisotropy_detail(ds.tgt(), config.aniso);
  o.A = 0.5 * (a_src.value + a_tgt.value);
  o.spectral_clipped = a_src.clipped || a_tgt.clipped;
  o.D = centroid_drift(ds.src(), ds.tgt());
  o.dim = static_cast<int>(ds.src().dim());
  o.b = config.b;
  return o;
}

PairObservation pair_observation(const ParallelDataset& ds, const ObservationConfig& config) {
  const ScoreMatrix fwd = cosine_matrix(ds.src(), ds.tgt());
  const ScoreMatrix bwd = fwd.transposed();
  return pair_observation(ds, fwd, bwd, config);
}

PairObservation pair_observation(const FixtureRow& row) {
  PairObservation o;
  o.model = row.model;
  o.pair = row.pair;
  o.R = row.R;
  o.H = row.H;
  o.A = row.A;
  o.D = row.D;
  o.dim = row.dim;
  o.b = row.b;
  o.replay = true;
  return o;
}

}  // namespace hubscope
