#include "hubscope/synth.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "hubscope/error.hpp"

namespace hubscope {

namespace {

void check_language(const SynthLanguage& l, std::size_t n) {
  if (!(l.noise >= 0.0) || !std::isfinite(l.noise)) throw ValidationError("synth: noise must be >= 0");
  if (!(l.hub_strength >= 0.0) || !std::isfinite(l.hub_strength)) {
    throw ValidationError("synth: hub_strength must be >= 0");
  }
  if (l.hub_count >= n) throw ValidationError("synth: hub_count must be below n");
  if (!std::isfinite(l.mean_offset) || l.mean_offset < 0.0 || l.mean_offset > M_PI) {
    throw ValidationError("synth: mean_offset must lie in [0, pi]");
  }
  if (l.lang.empty()) throw ValidationError("synth: empty language tag");
}

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(dim);
  for (Eigen::Index j = 0; j < dim; ++j) v(j) = nd(rng);
  return v;
}

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  }
  return m;
}

EmbeddingMatrix to_matrix(const Eigen::MatrixXd& x, const std::string& model,
                          const std::string& lang, bool float32) {
  std::vector<double> data(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      data[static_cast<std::size_t>(i * x.cols() + j)] =
          float32 ? static_cast<double>(static_cast<float>(v)) : v;
    }
  }
  return EmbeddingMatrix(model, lang, static_cast<std::size_t>(x.rows()),
                         static_cast<std::size_t>(x.cols()), std::move(data));
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.n < 2) throw ValidationError("synth: n must be >= 2");
  if (cfg.dim < 2) throw ValidationError("synth: dim must be >= 2");
  if (!(cfg.aniso_pull >= 0.0 && cfg.aniso_pull <= 1.0)) {
    throw ValidationError("synth: aniso_pull must lie in [0, 1]");
  }
  if (cfg.src_lang == cfg.tgt_lang) throw ValidationError("synth: languages must differ");
  check_language({cfg.tgt_lang, cfg.noise, cfg.hub_strength, cfg.hub_count, cfg.mean_offset},
                 cfg.n);
}

std::vector<EmbeddingMatrix> generate_languages(const SynthConfig& base,
                                                const std::vector<SynthLanguage>& derived) {
  validate(base);
  for (const auto& l : derived) check_language(l, base.n);

  const auto n = static_cast<Eigen::Index>(base.n);
  const auto dim = static_cast<Eigen::Index>(base.dim);
  const double sqrt_dim = std::sqrt(static_cast<double>(base.dim));
  std::mt19937_64 rng(base.seed);

  Eigen::VectorXd c = gaussian_vector(rng, dim);
  c.normalize();
  Eigen::MatrixXd u = gaussian_matrix(rng, n, dim);
  u.rowwise().normalize();
  const Eigen::MatrixXd x =
      (1.0 - base.aniso_pull) * u + base.aniso_pull * Eigen::MatrixXd::Ones(n, 1) * c.transpose();
  const Eigen::VectorXd ms = x.colwise().mean().transpose();
  const Eigen::VectorXd s_hat = ms.normalized();

  std::vector<EmbeddingMatrix> out;
  out.push_back(to_matrix(x, base.model_id, base.src_lang, base.float32));
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
  for (const auto& l : derived) {
    // Cayley map of a scaled skew-symmetric matrix: an exact rotation whose
    // angles grow with the noise level.
    const Eigen::MatrixXd g = gaussian_matrix(rng, dim, dim);
    const Eigen::MatrixXd k = l.noise * 0.5 * (g - g.transpose()) / std::sqrt(2.0 * static_cast<double>(base.dim));
    const Eigen::MatrixXd q = (I - k).partialPivLu().solve(I + k);
    Eigen::MatrixXd y = x * q.transpose() + (l.noise / sqrt_dim) * gaussian_matrix(rng, n, dim);

    std::vector<std::size_t> idx(base.n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < l.hub_count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, base.n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    const Eigen::VectorXd hub_dir = s_hat;
    for (std::size_t i = 0; i < l.hub_count; ++i) {
      y.row(static_cast<Eigen::Index>(idx[i])) += l.hub_strength * hub_dir.transpose();
    }

    Eigen::VectorXd o = gaussian_vector(rng, dim);
    o -= o.dot(s_hat) * s_hat;
    o.normalize();
    const Eigen::VectorXd target =
        (std::cos(l.mean_offset) * s_hat + std::sin(l.mean_offset) * o) * ms.norm();
    const Eigen::VectorXd mt = y.colwise().mean().transpose();
    y.rowwise() += (target - mt).transpose();
    out.push_back(to_matrix(y, base.model_id, l.lang, base.float32));
  }
  return out;
}

ParallelDataset generate_parallel(const SynthConfig& cfg) {
  auto m = generate_languages(
      cfg, {{cfg.tgt_lang, cfg.noise, cfg.hub_strength, cfg.hub_count, cfg.mean_offset}});
  return align(std::move(m[0]), std::move(m[1]), cfg.src_lang + "-" + cfg.tgt_lang);
}

SynthConfig calibrated_config(std::uint64_t seed) {
  SynthConfig c;
  c.n = 2000;
  c.dim = 256;
  c.noise = 1.5;
  c.hub_strength = 0.3;
  c.hub_count = 20;
  c.mean_offset = 0.3;
  c.aniso_pull = 0.3;
  c.seed = seed;
  return c;
}

namespace {

struct ModelPreset {
  const char* name;
  std::size_t dim;
  double noise;
  double hub_strength;
  double pull;
};

// Spread along the axes the experiments regress on: hub strength, pull
// (anisotropy) and dimension.
constexpr ModelPreset kModels[] = {
    {"synth-a", 192, 1.2, 0.10, 0.15},
    {"synth-b", 128, 1.5, 0.35, 0.45},
    {"synth-c", 192, 1.3, 0.20, 0.30},
    {"synth-d", 160, 1.6, 0.45, 0.25},
    {"synth-e", 256, 1.4, 0.30, 0.35},
};

struct LangPreset {
  const char* lang;
  double noise_scale;
  double theta;
  const char* glyph;  // UTF-8 letter used for the synthetic texts
};

constexpr LangPreset kLangs[] = {
    {"Hi", 1.0, 0.20, "\xE0\xA4\x95"},
    {"Bn", 1.1, 0.30, "\xE0\xA6\x95"},
    {"Ar", 1.2, 0.40, "\xD8\xA8"},
};

}  // namespace

Corpus synth_corpus(const SynthCorpusConfig& cfg) {
  if (cfg.n < 50) throw ValidationError("synth corpus needs n >= 50");
  Corpus corpus;
  for (std::size_t m = 0; m < std::size(kModels); ++m) {
    const auto& p = kModels[m];
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(m)};
    std::uint64_t model_seed = 0;
    {
      std::mt19937_64 mix(seq);
      model_seed = mix();
    }
    SynthConfig base;
    base.n = cfg.n;
    base.dim = p.dim;
    base.aniso_pull = p.pull;
    base.seed = model_seed;
    base.float32 = cfg.float32;
    base.model_id = p.name;
    base.src_lang = "En";
    base.tgt_lang = "Hi";
    std::vector<SynthLanguage> langs;
    for (const auto& l : kLangs) {
      langs.push_back({l.lang, p.noise * l.noise_scale, p.hub_strength,
                       std::max<std::size_t>(1, cfg.n / 100), l.theta});
    }
    auto mats = generate_languages(base, langs);
    ModelSpace space{p.name, {}};
    for (auto& mat : mats) {
      const std::string lang = mat.lang();
      space.langs.emplace(lang, std::make_shared<const EmbeddingMatrix>(std::move(mat)));
    }
    corpus.models.push_back(std::move(space));
  }

  // Texts: a shared per-item length in characters, rendered in each script.
  std::mt19937_64 rng(cfg.seed ^ 0x7465787473ULL);
  std::uniform_int_distribution<int> len(3, 24);
  std::vector<int> lengths(cfg.n);
  for (auto& l : lengths) l = len(rng);
  std::uniform_int_distribution<int> jitter(-2, 2);
  auto& en = corpus.texts["En"];
  for (std::size_t i = 0; i < cfg.n; ++i) en.push_back(std::string(static_cast<std::size_t>(lengths[i]), 'a'));
  for (const auto& l : kLangs) {
    auto& lines = corpus.texts[l.lang];
    for (std::size_t i = 0; i < cfg.n; ++i) {
      const int chars = std::max(1, lengths[i] + jitter(rng));
      std::string s;
      for (int c = 0; c < chars; ++c) s += l.glyph;
      lines.push_back(std::move(s));
    }
  }
  return corpus;
}

FeatureTable synth_feature_table(const Corpus& corpus, std::uint64_t seed) {
  const auto en = corpus.texts.find("En");
  if (en == corpus.texts.end()) throw ValidationError("synth features need English texts");
  FeatureTable ft;
  std::mt19937_64 rng(seed ^ 0x6665617475726573ULL);
  std::uniform_real_distribution<double> conc(1.0, 5.0);
  std::uniform_int_distribution<int> depth(2, 9);
  for (std::size_t i = 0; i < en->second.size(); ++i) {
    ft.item_id.push_back(i);
    ft.token_len.push_back(static_cast<double>(en->second[i].size()));
    ft.concreteness.push_back(conc(rng));
    ft.hypernym_depth.push_back(static_cast<double>(depth(rng)));
  }
  return ft;
}

}  // namespace hubscope
