#include "hubscope/rescoring.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "hubscope/error.hpp"
#include "hubscope/parallel.hpp"
#include "text_io.hpp"

namespace hubscope {

namespace {

// Keeps the k largest values seen so far in a min-heap.
class TopKValues {
 public:
  explicit TopKValues(std::size_t k) : k_(k) { heap_.reserve(k); }

  void push(double v) {
    if (heap_.size() < k_) {
      heap_.push_back(v);
      std::push_heap(heap_.begin(), heap_.end(), std::greater<>());
    } else if (v > heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end(), std::greater<>());
      heap_.back() = v;
      std::push_heap(heap_.begin(), heap_.end(), std::greater<>());
    }
  }

  // Mean of the kept values, summed largest first.
  double mean() {
    std::sort(heap_.begin(), heap_.end(), std::greater<>());
    double s = 0.0;
    for (double v : heap_) s += v;
    return s / static_cast<double>(heap_.size());
  }

  void clear() { heap_.clear(); }

 private:
  std::size_t k_;
  std::vector<double> heap_;
};

}  // namespace

NeighborhoodCache precompute_rk(const ScoreMatrix& cos, std::size_t k, const RkOptions& opt) {
  if (opt.exclude_self && !cos.square()) {
    throw ValidationError("self-exclusion needs a square score matrix");
  }
  const std::size_t limit = std::min(cos.n_src(), cos.n_tgt()) - (opt.exclude_self ? 1 : 0);
  if (k < 1 || k > limit) {
    throw ValidationError("CSLS k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(limit) + "]");
  }
  NeighborhoodCache cache;
  cache.k = k;
  cache.r_src.resize(cos.n_src());
  cache.r_tgt.resize(cos.n_tgt());

  parallel_for(cos.n_src(), [&](std::size_t b, std::size_t e) {
    TopKValues top(k);
    for (std::size_t i = b; i < e; ++i) {
      top.clear();
      const auto r = cos.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (!(opt.exclude_self && j == i)) top.push(r[j]);
      }
      cache.r_src[i] = top.mean();
    }
  });

  // Columns: stream rows in order, one heap per column in the chunk.
  parallel_for(cos.n_tgt(), [&](std::size_t b, std::size_t e) {
    std::vector<TopKValues> tops(e - b, TopKValues(k));
    for (std::size_t i = 0; i < cos.n_src(); ++i) {
      const auto r = cos.row(i);
      for (std::size_t j = b; j < e; ++j) {
        if (!(opt.exclude_self && j == i)) tops[j - b].push(r[j]);
      }
    }
    for (std::size_t j = b; j < e; ++j) cache.r_tgt[j] = tops[j - b].mean();
  });
  return cache;
}

NeighborhoodCache precompute_rk_streaming(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                                          std::size_t k, std::size_t block_rows) {
  if (src.dim() != tgt.dim()) throw ValidationError("r_k: dimension mismatch");
  const std::size_t limit = std::min(src.n(), tgt.n());
  if (k < 1 || k > limit) {
    throw ValidationError("CSLS k = " + std::to_string(k) + " outside [1, " + std::to_string(limit) + "]");
  }
  if (block_rows == 0) throw ValidationError("r_k: block_rows must be positive");
  NeighborhoodCache cache;
  cache.k = k;
  cache.r_src.assign(src.n(), 0.0);
  cache.r_tgt.assign(tgt.n(), 0.0);
  std::vector<TopKValues> cols(tgt.n(), TopKValues(k));
  const std::size_t dim = src.dim();
  for (std::size_t b0 = 0; b0 < src.n(); b0 += block_rows) {
    const std::size_t rows = std::min(block_rows, src.n() - b0);
    std::vector<double> part(src.data().begin() + static_cast<std::ptrdiff_t>(b0 * dim),
                             src.data().begin() + static_cast<std::ptrdiff_t>((b0 + rows) * dim));
    const ScoreMatrix block = cosine_matrix(EmbeddingMatrix(src.model_id(), src.lang(), rows, dim, std::move(part)), tgt);
    parallel_for(rows, [&](std::size_t b, std::size_t e) {
      TopKValues top(k);
      for (std::size_t i = b; i < e; ++i) {
        top.clear();
        for (double v : block.row(i)) top.push(v);
        cache.r_src[b0 + i] = top.mean();
      }
    });
    parallel_for(tgt.n(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = 0; i < rows; ++i) {
        const auto r = block.row(i);
        for (std::size_t j = b; j < e; ++j) cols[j].push(r[j]);
      }
    });
  }
  for (std::size_t j = 0; j < tgt.n(); ++j) cache.r_tgt[j] = cols[j].mean();
  return cache;
}

ScoreMatrix csls(const ScoreMatrix& cos, const NeighborhoodCache& cache) {
  if (cache.r_src.size() != cos.n_src() || cache.r_tgt.size() != cos.n_tgt()) {
    throw ValidationError("CSLS cache shape does not match the score matrix");
  }
  std::vector<double> out(cos.n_src() * cos.n_tgt());
  const std::size_t nt = cos.n_tgt();
  parallel_for(cos.n_src(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto r = cos.row(i);
      const double rs = cache.r_src[i];
      for (std::size_t j = 0; j < nt; ++j) out[i * nt + j] = 2.0 * r[j] - rs - cache.r_tgt[j];
    }
  });
  return ScoreMatrix(cos.n_src(), nt, std::move(out), ScoreMethod::Csls);
}

void save_cache(const NeighborhoodCache& cache, const std::filesystem::path& path) {
  std::string payload;
  payload.reserve(8 * (cache.r_src.size() + cache.r_tgt.size()));
  auto put = [&](double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) payload.push_back(static_cast<char>((u >> (8 * b)) & 0xFFu));
  };
  for (double v : cache.r_src) put(v);
  for (double v : cache.r_tgt) put(v);
  detail::write_file(path, payload);
  nlohmann::ordered_json h;
  h["k"] = cache.k;
  h["n_src"] = cache.r_src.size();
  h["n_tgt"] = cache.r_tgt.size();
  h["dtype"] = "float64";
  h["endianness"] = "little";
  h["layout"] = "r_src,r_tgt";
  std::filesystem::path hp = path;
  hp += ".json";
  detail::write_file(hp, h.dump(2) + "\n");
}

NeighborhoodCache load_cache(const std::filesystem::path& path) {
  std::filesystem::path hp = path;
  hp += ".json";
  NeighborhoodCache cache;
  std::size_t ns = 0, nt = 0;
  try {
    const auto h = nlohmann::json::parse(detail::read_file(hp));
    cache.k = h.at("k").get<std::size_t>();
    ns = h.at("n_src").get<std::size_t>();
    nt = h.at("n_tgt").get<std::size_t>();
    if (h.at("dtype").get<std::string>() != "float64") throw ValidationError("cache dtype must be float64");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad cache header " + hp.string() + ": " + e.what());
  }
  const std::string payload = detail::read_file(path);
  if (payload.size() != 8 * (ns + nt)) {
    throw ValidationError("cache payload size does not match its header: " + path.string());
  }
  auto get = [&](std::size_t idx) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) {
      u |= std::uint64_t(static_cast<unsigned char>(payload[8 * idx + b])) << (8 * b);
    }
    const double v = std::bit_cast<double>(u);
    if (!std::isfinite(v) || v < -1.0 - 1e-9 || v > 1.0 + 1e-9) {
      throw ValidationError("cache value out of range at position " + std::to_string(idx));
    }
    return v;
  };
  for (std::size_t i = 0; i < ns; ++i) cache.r_src.push_back(get(i));
  for (std::size_t j = 0; j < nt; ++j) cache.r_tgt.push_back(get(ns + j));
  return cache;
}

ScoreMatrix inverted_softmax(const ScoreMatrix& cos, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be positive");
  const std::size_t ns = cos.n_src(), nt = cos.n_tgt();
  std::vector<double> out(ns * nt);
  parallel_for(nt, [&](std::size_t b, std::size_t e) {
    const std::size_t w = e - b;
    std::vector<double> colmax(w, -INFINITY), colsum(w, 0.0);
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = b; j < e; ++j) colmax[j - b] = std::max(colmax[j - b], tau * cos(i, j));
    }
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = b; j < e; ++j) {
        const double v = std::exp(tau * cos(i, j) - colmax[j - b]);
        out[i * nt + j] = v;
        colsum[j - b] += v;
      }
    }
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = b; j < e; ++j) out[i * nt + j] /= colsum[j - b];
    }
  });
  return ScoreMatrix(ns, nt, std::move(out), ScoreMethod::InvSoftmax);
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

ScoreMatrix mutual_proximity(const ScoreMatrix& cos) {
  const std::size_t ns = cos.n_src(), nt = cos.n_tgt();
  if (ns < 2 || nt < 2) throw ValidationError("mutual proximity needs at least 2 rows and columns");
  constexpr double kSdFloor = 1e-12;
  // Means are shifted by the first entry so a constant sample yields exactly
  // that constant; any rounding residue would be blown up by the SD floor.
  std::vector<double> mu_r(ns), sd_r(ns), mu_c(nt, 0.0), sd_c(nt, 0.0);
  for (std::size_t i = 0; i < ns; ++i) {
    const auto r = cos.row(i);
    double s = 0.0;
    for (double v : r) s += v - r[0];
    const double m = r[0] + s / static_cast<double>(nt);
    double ss = 0.0;
    for (double v : r) ss += (v - m) * (v - m);
    mu_r[i] = m;
    sd_r[i] = std::max(std::sqrt(ss / static_cast<double>(nt - 1)), kSdFloor);
  }
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) mu_c[j] += cos(i, j) - cos(0, j);
  }
  for (std::size_t j = 0; j < nt; ++j) mu_c[j] = cos(0, j) + mu_c[j] / static_cast<double>(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) {
      const double d = cos(i, j) - mu_c[j];
      sd_c[j] += d * d;
    }
  }
  for (double& s : sd_c) s = std::max(std::sqrt(s / static_cast<double>(ns - 1)), kSdFloor);

  std::vector<double> out(ns * nt);
  parallel_for(ns, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t j = 0; j < nt; ++j) {
        const double c = cos(i, j);
        out[i * nt + j] = normal_cdf((c - mu_r[i]) / sd_r[i]) * normal_cdf((c - mu_c[j]) / sd_c[j]);
      }
    }
  });
  return ScoreMatrix(ns, nt, std::move(out), ScoreMethod::MutualProx);
}

std::string Transform::name() const {
  switch (kind) {
    case TransformKind::Center: return "center";
    case TransformKind::Abtt: return "abtt" + std::to_string(param);
    case TransformKind::Whiten: return "whiten" + std::to_string(param);
  }
  return "unknown";
}

namespace {

EmbeddingMatrix from_rows(const Eigen::MatrixXd& x, Eigen::Index first, Eigen::Index count,
                          const EmbeddingMatrix& like) {
  std::vector<double> data(static_cast<std::size_t>(count * x.cols()));
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      data[static_cast<std::size_t>(i * x.cols() + j)] = x(first + i, j);
    }
  }
  return EmbeddingMatrix(like.model_id(), like.lang(), static_cast<std::size_t>(count),
                         static_cast<std::size_t>(x.cols()), std::move(data));
}

}  // namespace

TransformedSpace transform_space(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                                 const Transform& t) {
  if (src.dim() != tgt.dim()) throw ValidationError("transform: dimension mismatch");
  const auto ns = static_cast<Eigen::Index>(src.n());
  const auto nt = static_cast<Eigen::Index>(tgt.n());
  const auto dim = static_cast<Eigen::Index>(src.dim());
  Eigen::MatrixXd joint(ns + nt, dim);
  joint.topRows(ns) = to_eigen(src);
  joint.bottomRows(nt) = to_eigen(tgt);
  const std::size_t n_joint = src.n() + tgt.n();
  const std::size_t rank_cap = std::min(n_joint - 1, src.dim());

  Eigen::VectorXd mean = joint.colwise().mean().transpose();
  Eigen::MatrixXd components(0, dim);
  std::vector<double> eigenvalues;
  Eigen::MatrixXd out;

  switch (t.kind) {
    case TransformKind::Center:
      out = joint.rowwise() - mean.transpose();
      break;
    case TransformKind::Abtt: {
      if (t.param < 1 || t.param >= rank_cap) {
        throw ValidationError("ABTT d = " + std::to_string(t.param) +
                              " must lie in [1, " + std::to_string(rank_cap) +
                              "); removing every direction leaves a degenerate space");
      }
      const Spectrum sp = spectral_decompose(joint, t.param);
      mean = sp.mean;
      components = sp.components;
      eigenvalues = sp.eigenvalues;
      const Eigen::MatrixXd xc = joint.rowwise() - mean.transpose();
      out = xc - (xc * components.transpose()) * components;
      break;
    }
    case TransformKind::Whiten: {
      if (t.param < 1 || t.param > std::min(n_joint, src.dim())) {
        throw ValidationError("whitening m = " + std::to_string(t.param) + " outside [1, " +
                              std::to_string(std::min(n_joint, src.dim())) + "]");
      }
      const Spectrum sp = spectral_decompose(joint, t.param);
      const double floor = 1e-12 * std::max(sp.eigenvalues.front(), 1e-300);
      for (std::size_t c = 0; c < sp.eigenvalues.size(); ++c) {
        if (!(sp.eigenvalues[c] > floor)) {
          throw NumericalError("whitening component " + std::to_string(c) +
                               " has near-zero variance; reduce m");
        }
      }
      mean = sp.mean;
      components = sp.components;
      eigenvalues = sp.eigenvalues;
      const Eigen::MatrixXd xc = joint.rowwise() - mean.transpose();
      out = xc * components.transpose();
      for (Eigen::Index c = 0; c < out.cols(); ++c) {
        out.col(c) /= std::sqrt(eigenvalues[static_cast<std::size_t>(c)]);
      }
      break;
    }
  }
  return TransformedSpace{from_rows(out, 0, ns, src), from_rows(out, ns, nt, tgt), t,
                          std::move(mean), std::move(components), std::move(eigenvalues)};
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown method '" + name + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Cosine: return "cosine";
    case Method::Csls: return "csls";
    case Method::InvSoftmax: return "inv-softmax";
    case Method::MutualProx: return "mutual-prox";
    case Method::Center: return "center";
    case Method::Abtt1: return "abtt1";
    case Method::Abtt3: return "abtt3";
    case Method::Whiten128: return "whiten128";
  }
  return "unknown";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::Cosine,     Method::Center,
                                           Method::Abtt1,      Method::Abtt3,
                                           Method::Csls,       Method::Whiten128,
                                           Method::InvSoftmax, Method::MutualProx};
  return methods;
}

namespace {

DirectedScores transformed_scores(const ParallelDataset& ds, const Transform& t) {
  const TransformedSpace ts = transform_space(ds.src(), ds.tgt(), t);
  ScoreMatrix fwd = cosine_matrix(ts.src, ts.tgt);
  ScoreMatrix bwd = fwd.transposed();
  return {std::move(fwd), std::move(bwd)};
}

}  // namespace

DirectedScores score_pair(const ParallelDataset& ds, const ScoreMatrix& cos_fwd, Method method,
                          const MethodOptions& opt) {
  switch (method) {
    case Method::Cosine:
      return {cos_fwd, cos_fwd.transposed()};
    case Method::Csls: {
      ScoreMatrix fwd = csls(cos_fwd, precompute_rk(cos_fwd, opt.k));
      ScoreMatrix bwd = fwd.transposed();
      return {std::move(fwd), std::move(bwd)};
    }
    case Method::InvSoftmax:
      return {inverted_softmax(cos_fwd, opt.tau), inverted_softmax(cos_fwd.transposed(), opt.tau)};
    case Method::MutualProx:
      return {mutual_proximity(cos_fwd), mutual_proximity(cos_fwd.transposed())};
    case Method::Center: return transformed_scores(ds, Transform::center());
    case Method::Abtt1: return transformed_scores(ds, Transform::abtt(1));
    case Method::Abtt3: return transformed_scores(ds, Transform::abtt(3));
    case Method::Whiten128: return transformed_scores(ds, Transform::whiten(opt.whiten_m));
  }
  throw ValidationError("unhandled method");
}

DirectedScores score_pair(const ParallelDataset& ds, Method method, const MethodOptions& opt) {
  return score_pair(ds, cosine_matrix(ds.src(), ds.tgt()), method, opt);
}

}  // namespace hubscope
