#include "hubscope/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <array>

#include "hubscope/error.hpp"
#include "hubscope/reference.hpp"
#include "hubscope/stats.hpp"
#include "text_io.hpp"

namespace hubscope {

// ---- gap closure and phylogenetic gap --------------------------------------

std::vector<std::optional<double>> gap_closure(std::span<const double> r_cos,
                                               std::span<const double> r_csls) {
  if (r_cos.size() != r_csls.size()) throw ValidationError("gap_closure: length mismatch");
  if (r_cos.size() < 2) throw ValidationError("gap_closure needs at least 2 models");
  const double best = *std::max_element(r_cos.begin(), r_cos.end());
  std::vector<std::optional<double>> g(r_cos.size());
  for (std::size_t m = 0; m < r_cos.size(); ++m) {
    const double denom = best - r_cos[m];
    if (denom > 0.0) g[m] = (r_csls[m] - r_cos[m]) / denom;
  }
  return g;
}

std::vector<std::optional<double>> gap_closure_per_pair(
    const std::vector<std::vector<double>>& r_cos, const std::vector<std::vector<double>>& r_csls) {
  if (r_cos.size() != r_csls.size() || r_cos.size() < 2) {
    throw ValidationError("gap_closure_per_pair needs matching tables with at least 2 models");
  }
  const std::size_t pairs = r_cos.front().size();
  for (std::size_t m = 0; m < r_cos.size(); ++m) {
    if (r_cos[m].size() != pairs || r_csls[m].size() != pairs) {
      throw ValidationError("gap_closure_per_pair: ragged table");
    }
  }
  std::vector<double> sum(r_cos.size(), 0.0);
  std::vector<std::size_t> defined(r_cos.size(), 0);
  std::vector<double> col_cos(r_cos.size()), col_csls(r_cos.size());
  for (std::size_t p = 0; p < pairs; ++p) {
    for (std::size_t m = 0; m < r_cos.size(); ++m) {
      col_cos[m] = r_cos[m][p];
      col_csls[m] = r_csls[m][p];
    }
    const auto g = gap_closure(col_cos, col_csls);
    for (std::size_t m = 0; m < g.size(); ++m) {
      if (g[m]) {
        sum[m] += *g[m];
        ++defined[m];
      }
    }
  }
  std::vector<std::optional<double>> out(r_cos.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    if (defined[m] > 0) out[m] = sum[m] / static_cast<double>(defined[m]);
  }
  return out;
}

std::string to_string(DiagonalScore s) {
  switch (s) {
    case DiagonalScore::Cosine: return "cosine";
    case DiagonalScore::HubAblated: return "hub-ablated";
    case DiagonalScore::Csls: return "csls";
  }
  return "?";
}

namespace {

double diagonal_mean(const ScoreMatrix& cos, DiagonalScore score, const PhyloOptions& opt) {
  const std::size_t n = cos.n_src();
  switch (score) {
    case DiagonalScore::Cosine: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += cos(i, i);
      return s / static_cast<double>(n);
    }
    case DiagonalScore::HubAblated: {
      if (opt.ablation_k >= n) throw ValidationError("phylo_gap: ablation k must be below n");
      const auto removed = hubs_to_remove(cos, opt.ablation_k, HubRanking::Static);
      std::vector<char> gone(n, 0);
      for (auto j : removed) gone[j] = 1;
      double s = 0.0;
      std::size_t kept = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (gone[i]) continue;
        s += cos(i, i);
        ++kept;
      }
      return s / static_cast<double>(kept);
    }
    case DiagonalScore::Csls: {
      const ScoreMatrix c = csls(cos, precompute_rk(cos, opt.k));
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += c(i, i);
      return s / static_cast<double>(n);
    }
  }
  return 0.0;
}

}  // namespace

double mean_diagonal(const ParallelDataset& ds, DiagonalScore score, const PhyloOptions& opt) {
  return diagonal_mean(cosine_matrix(ds.src(), ds.tgt()), score, opt);
}

double phylo_gap(const ParallelDataset& first, const ParallelDataset& second, DiagonalScore score,
                 const PhyloOptions& opt) {
  if (first.n() != second.n()) {
    throw ValidationError("phylo_gap: datasets have " + std::to_string(first.n()) + " and " +
                          std::to_string(second.n()) + " items");
  }
  if (first.src().lang() != second.src().lang()) {
    throw ValidationError("phylo_gap: datasets must share the source language (" +
                          first.src().lang() + " vs " + second.src().lang() + ")");
  }
  return mean_diagonal(first, score, opt) - mean_diagonal(second, score, opt);
}

// ---- inputs ----------------------------------------------------------------

ExperimentInput fixture_input(const std::filesystem::path& path) {
  ExperimentInput in;
  in.kind = InputKind::Fixture;
  in.fixture = load_fixture(path);
  in.descriptor = "fixture:" + path.filename().string();
  return in;
}

ExperimentInput dataset_input(const std::filesystem::path& root,
                              const std::optional<std::filesystem::path>& features) {
  ExperimentInput in;
  in.kind = InputKind::Dataset;
  in.corpus = std::make_shared<const Corpus>(load_corpus(root));
  if (features) in.features = load_feature_table(*features);
  in.descriptor = "dataset:" + root.filename().string();
  return in;
}

ExperimentInput synth_input(const SynthCorpusConfig& cfg) {
  ExperimentInput in;
  in.kind = InputKind::Synth;
  auto corpus = std::make_shared<const Corpus>(synth_corpus(cfg));
  in.features = synth_feature_table(*corpus, cfg.seed);
  in.corpus = std::move(corpus);
  in.descriptor = "synth:n=" + std::to_string(cfg.n) + ",seed=" + std::to_string(cfg.seed);
  return in;
}

// ---- workspace -------------------------------------------------------------

struct Workspace::Entry {
  std::optional<ParallelDataset> ds;
  std::optional<ScoreMatrix> fwd;
  std::optional<ScoreMatrix> bwd;
  std::map<Method, DirectedScores> methods;
  std::map<std::size_t, DirectedScores> csls_k;
  std::map<std::size_t, double> ablated;
};

Workspace::Workspace(std::shared_ptr<const Corpus> corpus, ExperimentConfig cfg)
    : corpus_(std::move(corpus)), cfg_(std::move(cfg)) {
  if (!corpus_) throw ValidationError("workspace needs a corpus");
  for (const auto& space : corpus_->models) {
    for (const auto& pair : reference::kPairs) {
      const auto [s, t] = split_pair_id(pair);
      if (space.langs.count(s) && space.langs.count(t)) pairs_.push_back({space.model, pair});
    }
  }
  if (pairs_.empty()) throw ValidationError("corpus has no language pair to analyse");
}

Workspace::~Workspace() = default;

std::vector<std::string> Workspace::models() const {
  std::vector<std::string> out;
  for (const auto& key : pairs_) {
    if (out.empty() || out.back() != key.model) out.push_back(key.model);
  }
  return out;
}

Workspace::Entry& Workspace::entry(const PairKey& key) {
  auto it = entries_.find(key);
  if (it != entries_.end()) return *it->second;
  const ModelSpace* space = corpus_->find(key.model);
  if (!space) throw ValidationError("no model '" + key.model + "' in corpus");
  const auto [s, t] = split_pair_id(key.pair);
  const auto si = space->langs.find(s);
  const auto ti = space->langs.find(t);
  if (si == space->langs.end() || ti == space->langs.end()) {
    throw ValidationError("model '" + key.model + "' lacks a language of pair " + key.pair);
  }
  auto e = std::make_unique<Entry>();
  e->ds.emplace(align(si->second, ti->second, key.pair));
  return *entries_.emplace(key, std::move(e)).first->second;
}

const ParallelDataset& Workspace::dataset(const PairKey& key) { return *entry(key).ds; }

const ScoreMatrix& Workspace::cos_fwd(const PairKey& key) {
  Entry& e = entry(key);
  if (!e.fwd) e.fwd.emplace(cosine_matrix(e.ds->src(), e.ds->tgt()));
  return *e.fwd;
}

const ScoreMatrix& Workspace::cos_bwd(const PairKey& key) {
  Entry& e = entry(key);
  if (!e.bwd) e.bwd.emplace(cos_fwd(key).transposed());
  return *e.bwd;
}

const DirectedScores& Workspace::scores(const PairKey& key, Method method) {
  Entry& e = entry(key);
  auto it = e.methods.find(method);
  if (it != e.methods.end()) return it->second;
  DirectedScores s = method == Method::Cosine
                         ? DirectedScores{cos_fwd(key), cos_bwd(key)}
                         : score_pair(*e.ds, cos_fwd(key), method,
                                      MethodOptions{cfg_.k, cfg_.tau, 128});
  return e.methods.emplace(method, std::move(s)).first->second;
}

const DirectedScores& Workspace::csls_at(const PairKey& key, std::size_t k) {
  if (k == cfg_.k) return scores(key, Method::Csls);
  Entry& e = entry(key);
  auto it = e.csls_k.find(k);
  if (it != e.csls_k.end()) return it->second;
  DirectedScores s = score_pair(*e.ds, cos_fwd(key), Method::Csls, MethodOptions{k, cfg_.tau, 128});
  return e.csls_k.emplace(k, std::move(s)).first->second;
}

PairObservation Workspace::observation(const PairKey& key, double threshold,
                                       AnisotropyVariant aniso) {
  ObservationConfig oc;
  oc.threshold = threshold;
  oc.aniso = aniso;
  PairObservation o = pair_observation(dataset(key), cos_fwd(key), cos_bwd(key), oc);
  const auto [s, t] = split_pair_id(key.pair);
  const auto st = corpus_->texts.find(s);
  const auto tt = corpus_->texts.find(t);
  if (st != corpus_->texts.end() && tt != corpus_->texts.end()) {
    o.b = byte_ratio(st->second, tt->second);
  }
  return o;
}

double Workspace::ablated_R(const PairKey& key, std::size_t k) {
  Entry& e = entry(key);
  auto it = e.ablated.find(k);
  if (it != e.ablated.end()) return it->second;
  const double r = ablate_topk(cos_fwd(key), cos_bwd(key), k, cfg_.ablation);
  e.ablated.emplace(k, r);
  return r;
}

// ---- shared helpers --------------------------------------------------------

namespace {

using Key = Workspace::PairKey;

std::string fixed(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

double mean_of(const std::vector<double>& v) { return stats::mean(v); }

// Row indices grouped by model, models in first-appearance order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_model(
    const std::vector<PairObservation>& rows) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.first == rows[i].model; });
    if (it == out.end()) {
      out.push_back({rows[i].model, {}});
      it = std::prev(out.end());
    }
    it->second.push_back(i);
  }
  return out;
}

template <typename T>
const T* find_model(const std::vector<T>& table, const std::string& model) {
  for (const auto& row : table) {
    if (row.model == model) return &row;
  }
  return nullptr;
}

const reference::ModelRetrieval& published_retrieval(const std::string& model) {
  const auto* r = find_model(reference::retrieval_by_model(), model);
  if (!r) throw ValidationError("fixture model '" + model + "' has no published retrieval values");
  return *r;
}

Workspace& require_workspace(const ExperimentInput& in, Workspace* ws, const std::string& id) {
  if (in.kind == InputKind::Fixture || !ws) {
    throw ValidationError("experiment " + id + " needs embeddings (dataset or synth input)");
  }
  return *ws;
}

std::vector<Key> pairs_of(Workspace& ws, const std::string& model) {
  std::vector<Key> out;
  for (const auto& k : ws.pairs()) {
    if (k.model == model) out.push_back(k);
  }
  return out;
}

// Per-model aggregates used by E3, the validity tests and the correlation
// tables. Vectors are aligned with `models`.
struct ModelTable {
  std::vector<std::string> models;
  std::vector<double> H_bar;
  std::vector<double> R_cos;
  std::vector<double> R_abl;
  std::vector<double> R_csls;
  std::vector<std::vector<double>> pair_cos;   // per model, per pair
  std::vector<std::vector<double>> pair_abl;
  std::vector<std::vector<double>> pair_csls;  // empty in fixture mode
  bool replayed_treatments = false;            // R_abl / R_csls from the published table
};

// Pair-level table aligned with the observations.
struct PairTable {
  std::vector<PairObservation> obs;
  std::vector<double> R_csls;     // per pair; empty in fixture mode
  std::vector<double> csls_gain;  // per pair (fixture: model-level gain broadcast)
  std::vector<double> abl_gain;
};

ModelTable model_table(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg,
                       const std::vector<PairObservation>& obs) {
  ModelTable t;
  for (const auto& [model, idx] : group_by_model(obs)) {
    t.models.push_back(model);
    std::vector<double> h, rc;
    for (auto i : idx) {
      h.push_back(obs[i].H);
      rc.push_back(obs[i].R);
    }
    t.H_bar.push_back(mean_of(h));
    t.R_cos.push_back(mean_of(rc));
    t.pair_cos.push_back(rc);
    if (in.kind == InputKind::Fixture) {
      const auto& pub = published_retrieval(model);
      t.R_abl.push_back(pub.r_abl);
      t.R_csls.push_back(pub.r_csls);
      t.replayed_treatments = true;
    } else {
      std::vector<double> ab, cs;
      for (auto i : idx) {
        const Key key{obs[i].model, obs[i].pair};
        ab.push_back(ws->ablated_R(key, cfg.ablation_k));
        const auto& s = ws->scores(key, Method::Csls);
        cs.push_back(reciprocity(s.fwd, s.bwd));
      }
      t.R_abl.push_back(mean_of(ab));
      t.R_csls.push_back(mean_of(cs));
      t.pair_abl.push_back(ab);
      t.pair_csls.push_back(cs);
    }
  }
  return t;
}

PairTable pair_table(const ModelTable& mt, const std::vector<PairObservation>& obs) {
  PairTable p;
  p.obs = obs;
  const auto groups = group_by_model(obs);
  p.csls_gain.resize(obs.size());
  p.abl_gain.resize(obs.size());
  if (!mt.replayed_treatments) p.R_csls.resize(obs.size());
  for (std::size_t m = 0; m < groups.size(); ++m) {
    const auto& idx = groups[m].second;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto i = idx[j];
      if (mt.replayed_treatments) {
        p.csls_gain[i] = mt.R_csls[m] - mt.R_cos[m];
        p.abl_gain[i] = mt.R_abl[m] - mt.R_cos[m];
      } else {
        p.R_csls[i] = mt.pair_csls[m][j];
        p.csls_gain[i] = mt.pair_csls[m][j] - mt.pair_cos[m][j];
        p.abl_gain[i] = mt.pair_abl[m][j] - mt.pair_cos[m][j];
      }
    }
  }
  return p;
}

struct Predictors {
  stats::Design design;
  std::vector<double> y;
  bool has_b = false;
};

Predictors predictors(const std::vector<PairObservation>& rows, const E1Options& opt) {
  const bool all_b = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.b.has_value(); });
  const bool use_b = opt.use_b && all_b;
  std::vector<std::string> names{"H", "A", "D", "dim"};
  if (use_b) names.push_back("b");
  if (!opt.predictors.empty()) {
    for (const auto& p : opt.predictors) {
      if (std::find(names.begin(), names.end(), p) == names.end()) {
        throw ValidationError("predictor '" + p + "' is not available (have H, A, D, dim" +
                              std::string(all_b ? ", b" : "") + ")");
      }
    }
    names = opt.predictors;
  }
  std::vector<std::vector<double>> cols;
  for (const auto& name : names) {
    std::vector<double> c;
    for (const auto& r : rows) {
      if (name == "H") c.push_back(r.H);
      else if (name == "A") c.push_back(r.A);
      else if (name == "D") c.push_back(r.D);
      else if (name == "dim") c.push_back(static_cast<double>(r.dim));
      else c.push_back(*r.b);
    }
    cols.push_back(std::move(c));
  }
  Predictors p;
  p.design = stats::make_design(cols, names);
  for (const auto& r : rows) p.y.push_back(r.R);
  p.has_b = std::find(names.begin(), names.end(), "b") != names.end();
  return p;
}

std::string predictor_list(const stats::Design& d) {
  std::string s;
  for (const auto& n : d.names) s += (s.empty() ? "" : ",") + n;
  return s;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("missing predictor " + name);
  return static_cast<std::size_t>(it - names.begin());
}

// Mixes the run seed with a stream index so independent draws never share a
// generator state.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 g(seq);
  return g();
}

// ---- E1 --------------------------------------------------------------------

struct E1Fit {
  stats::RegressionResult fit;
  stats::DominanceResult dom;
  Predictors pred;
};

E1Fit fit_e1(const std::vector<PairObservation>& rows, const E1Options& opt) {
  if (rows.size() < 8) {
    throw ValidationError("joint regression needs at least 8 observations, got " +
                          std::to_string(rows.size()));
  }
  E1Fit f{{}, {}, predictors(rows, opt)};
  f.fit = stats::ols_standardized(f.pred.y, f.pred.design);
  f.dom = stats::dominance_analysis(f.pred.y, f.pred.design);
  return f;
}

}  // namespace

std::vector<PairObservation> observations(const ExperimentInput& in, Workspace* ws) {
  std::vector<PairObservation> out;
  if (in.kind == InputKind::Fixture) {
    for (const auto& r : in.fixture) out.push_back(pair_observation(r));
    return out;
  }
  Workspace& w = require_workspace(in, ws, "observations");
  for (const auto& key : w.pairs()) out.push_back(w.observation(key));
  return out;
}

ExperimentReport run_e1(const std::vector<PairObservation>& rows, const E1Options& opt,
                        const std::string& input_descriptor) {
  const E1Fit f = fit_e1(rows, opt);
  ExperimentReport rep("e1", "Joint regression of reciprocity on geometry", input_descriptor);
  rep.add_column("predictor");
  rep.add_column("beta", 3);
  rep.add_column("se", 3);
  rep.add_column("p", 3);
  rep.add_column("partial_r2", 3);
  rep.add_column("dominance_pct", 1);
  rep.add_column("published_beta", 3);
  rep.add_column("published_p", 3);
  rep.add_column("published_partial_r2", 3);
  rep.add_column("published_dominance_pct", 1);
  for (std::size_t j = 0; j < f.fit.names.size(); ++j) {
    const auto* pub = [&]() -> const reference::RegressionRow* {
      if (!opt.published_reference) return nullptr;
      for (const auto& r : reference::joint_regression()) {
        if (r.predictor == f.fit.names[j]) return &r;
      }
      return nullptr;
    }();
    auto ref = [&](double v) { return pub ? Cell::replay(v) : Cell::flagged("not published"); };
    rep.add_row({Cell::text(f.fit.names[j]), Cell::num(f.fit.betas[j]), Cell::num(f.fit.se[j]),
                 Cell::num(f.fit.p[j]), Cell::num(f.fit.partial_r2[j]), Cell::num(f.dom.shares[j]),
                 ref(pub ? pub->beta : 0), ref(pub ? pub->p : 0), ref(pub ? pub->partial_r2 : 0),
                 ref(pub ? pub->dominance_pct : 0)});
  }
  rep.add_row({Cell::text("R2"), Cell::num(f.fit.r2), Cell::flagged(""), Cell::flagged(""),
               Cell::flagged(""), Cell::num(std::accumulate(f.dom.shares.begin(), f.dom.shares.end(), 0.0)),
               opt.published_reference ? Cell::replay(reference::kJointR2) : Cell::flagged("not published"),
               Cell::flagged(""), Cell::flagged(""),
               opt.published_reference ? Cell::replay(100.0) : Cell::flagged("not published")});
  rep.add_note("n = " + std::to_string(f.fit.n) + ", predictors " + predictor_list(f.pred.design) +
               ", standardized OLS, R^2 = " + fixed(f.fit.r2) + ", adjusted R^2 = " + fixed(f.fit.adj_r2));
  if (!f.pred.has_b && opt.published_reference) {
    rep.add_note("byte ratio b unavailable: published values include b and are not directly comparable");
  }
  return rep;
}

namespace {

// ---- E2 --------------------------------------------------------------------

ExperimentReport run_e2(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg) {
  ExperimentReport rep("e2", "Reciprocity under top-k hub ablation", in.descriptor);
  rep.add_column("model");
  for (auto k : kAblationKs) rep.add_column("R_k" + std::to_string(k), 3);
  rep.add_column("monotone");
  rep.add_column("R_random_k" + std::to_string(cfg.ablation_k), 3);

  if (in.kind == InputKind::Fixture) {
    const auto obs = observations(in, nullptr);
    for (const auto& [model, idx] : group_by_model(obs)) {
      const auto* pub = find_model(reference::ablation_levels(), model);
      std::vector<double> r;
      for (auto i : idx) r.push_back(obs[i].R);
      std::vector<Cell> row{Cell::text(model), Cell::num(mean_of(r))};
      for (std::size_t j = 1; j < kAblationKs.size(); ++j) {
        row.push_back(pub ? Cell::replay(pub->R[j]) : Cell::flagged("not published"));
      }
      row.push_back(pub ? Cell::text(pub->monotone ? "yes" : "no", Provenance::Replay)
                        : Cell::flagged("not published"));
      row.push_back(Cell::flagged("not published"));
      rep.add_row(std::move(row));
    }
    rep.add_note("k = 0 is the fixture mean over pairs; ablated levels are replayed");
    return rep;
  }

  Workspace& w = require_workspace(in, ws, "e2");
  std::uint64_t stream = 0;
  for (const auto& model : w.models()) {
    const auto keys = pairs_of(w, model);
    std::vector<Cell> row{Cell::text(model)};
    std::vector<double> curve;
    for (auto k : kAblationKs) {
      const std::size_t n = w.dataset(keys.front()).n();
      if (k >= n) {
        row.push_back(Cell::flagged("k >= n"));
        continue;
      }
      std::vector<double> r;
      for (const auto& key : keys) r.push_back(w.ablated_R(key, k));
      curve.push_back(mean_of(r));
      row.push_back(Cell::num(curve.back()));
    }
    bool monotone = true;
    for (std::size_t j = 1; j < curve.size(); ++j) monotone = monotone && curve[j] <= curve[j - 1];
    row.push_back(Cell::text(monotone ? "yes" : "no"));
    std::vector<double> rnd;
    for (const auto& key : keys) {
      rnd.push_back(random_ablation_control(w.cos_fwd(key), w.cos_bwd(key), cfg.ablation_k,
                                            cfg.random_trials, stream_seed(cfg.seed, stream++),
                                            cfg.ablation.semantics));
    }
    row.push_back(Cell::num(mean_of(rnd)));
    rep.add_row(std::move(row));
  }
  rep.add_note("random control: mean over " + std::to_string(cfg.random_trials) +
               " uniform target subsets per pair, seed " + std::to_string(cfg.seed));
  return rep;
}

// ---- E3 --------------------------------------------------------------------

std::vector<ExperimentReport> run_e3(const ExperimentInput& in, Workspace* ws,
                                     const ExperimentConfig& cfg) {
  const bool fixture = in.kind == InputKind::Fixture;
  const auto obs = observations(in, ws);
  const ModelTable mt = model_table(in, ws, cfg, obs);
  const Provenance treat = fixture ? Provenance::Replay : Provenance::Computed;

  ExperimentReport rep("e3", "Retrieval regimes and gap closure", in.descriptor);
  rep.add_column("model");
  rep.add_column("R_cos", 3);
  rep.add_column("R_abl", 3);
  rep.add_column("R_csls", 3);
  rep.add_column("gap_model", 3);
  rep.add_column("gap_per_pair", 3);
  rep.add_column("published_gap_pct", 1);

  const auto g_model = gap_closure(mt.R_cos, mt.R_csls);
  std::vector<std::optional<double>> g_pair(mt.models.size());
  if (!fixture) g_pair = gap_closure_per_pair(mt.pair_cos, mt.pair_csls);
  for (std::size_t m = 0; m < mt.models.size(); ++m) {
    const auto* pub = find_model(reference::retrieval_by_model(), mt.models[m]);
    rep.add_row({Cell::text(mt.models[m]), Cell::num(mt.R_cos[m]), Cell::num(mt.R_abl[m], treat),
                 Cell::num(mt.R_csls[m], treat), Cell::maybe(g_model[m], "undefined"),
                 fixture ? Cell::flagged("needs per-pair CSLS") : Cell::maybe(g_pair[m], "undefined"),
                 fixture && pub ? Cell::replay(pub->gap_pct) : Cell::flagged("not published")});
  }
  auto mean_defined = [](const std::vector<std::optional<double>>& g) -> std::optional<double> {
    double s = 0.0;
    std::size_t c = 0;
    for (const auto& v : g) {
      if (v) {
        s += *v;
        ++c;
      }
    }
    return c ? std::optional<double>(s / static_cast<double>(c)) : std::nullopt;
  };
  rep.add_row({Cell::text("Mean"), Cell::num(mean_of(mt.R_cos)), Cell::num(mean_of(mt.R_abl), treat),
               Cell::num(mean_of(mt.R_csls), treat), Cell::maybe(mean_defined(g_model), "undefined"),
               fixture ? Cell::flagged("needs per-pair CSLS") : Cell::maybe(mean_defined(g_pair), "undefined"),
               fixture ? Cell::replay(reference::kMeanGapPct) : Cell::flagged("not published")});
  rep.add_note("R_abl removes the top " + std::to_string(cfg.ablation_k) +
               " cosine hubs; CSLS uses k = " + std::to_string(cfg.k));
  rep.add_note("gap_model: model-level closure on pair-averaged R, best model undefined; "
               "gap_per_pair: closure per pair against that pair's best model, then averaged");

  // Effect sizes against the per-pair cosine baseline.
  ExperimentReport eff("e3_effect", "Within-model effect sizes of CSLS and hub ablation", in.descriptor);
  eff.add_column("model");
  eff.add_column("d_csls", 2);
  eff.add_column("d_abl", 2);
  eff.add_column("ratio", 0);
  eff.add_column("published_d_csls", 2);
  eff.add_column("published_d_abl", 2);
  eff.add_column("published_ratio", 0);
  std::vector<double> dc, da, ratios;
  for (std::size_t m = 0; m < mt.models.size(); ++m) {
    const double d_csls = stats::cohens_d_within(mt.pair_cos[m], mt.R_csls[m]);
    const double d_abl = stats::cohens_d_within(mt.pair_cos[m], mt.R_abl[m]);
    const auto* pub = find_model(reference::effect_sizes(), mt.models[m]);
    // The fixture carries no per-pair ablation R, so the ratio divides by the
    // published d_abl there.
    const double denom = fixture && pub ? pub->d_abl : d_abl;
    std::optional<double> ratio;
    if (std::abs(denom) > 1e-12) ratio = std::abs(d_csls / denom);
    dc.push_back(d_csls);
    da.push_back(d_abl);
    if (ratio) ratios.push_back(*ratio);
    auto ref = [&](double v) { return fixture && pub ? Cell::replay(v) : Cell::flagged("not published"); };
    eff.add_row({Cell::text(mt.models[m]), Cell::num(d_csls), Cell::num(d_abl),
                 Cell::maybe(ratio, "undefined"), ref(pub ? pub->d_csls : 0), ref(pub ? pub->d_abl : 0),
                 ref(pub ? pub->ratio : 0)});
  }
  eff.add_row({Cell::text("Mean"), Cell::num(mean_of(dc)), Cell::num(mean_of(da)),
               ratios.empty() ? Cell::flagged("undefined") : Cell::num(mean_of(ratios)),
               fixture ? Cell::replay(2.38) : Cell::flagged("not published"),
               fixture ? Cell::replay(0.03) : Cell::flagged("not published"),
               fixture ? Cell::replay(reference::kEffectRatioTableMean) : Cell::flagged("not published")});
  eff.add_note("d = (treated mean - mean cosine R) / SD of the model's per-pair cosine R");
  if (fixture) {
    eff.add_note("fixture mode: treated means are the published model-level R_csls and R_abl; "
                 "ratio = |d_csls / published d_abl|");
  }

  ExperimentReport rec("e3_recall", "Recall at 1 and 5 under cosine and CSLS", in.descriptor);
  rec.add_column("model");
  rec.add_column("R1_cos", 3);
  rec.add_column("R5_cos", 3);
  rec.add_column("R1_csls", 3);
  rec.add_column("R5_csls", 3);
  if (fixture) {
    for (const auto& model : mt.models) {
      const auto* pub = find_model(reference::recall_by_model(), model);
      auto ref = [&](double v) { return pub ? Cell::replay(v) : Cell::flagged("not published"); };
      rec.add_row({Cell::text(model), ref(pub ? pub->r1_cos : 0), ref(pub ? pub->r5_cos : 0),
                   ref(pub ? pub->r1_csls : 0), ref(pub ? pub->r5_csls : 0)});
    }
  } else {
    for (const auto& model : mt.models) {
      std::vector<double> r1c, r5c, r1s, r5s;
      for (const auto& key : pairs_of(*ws, model)) {
        r1c.push_back(recall_at_k(ws->cos_fwd(key), 1));
        r5c.push_back(recall_at_k(ws->cos_fwd(key), 5));
        const auto& s = ws->scores(key, Method::Csls);
        r1s.push_back(recall_at_k(s.fwd, 1));
        r5s.push_back(recall_at_k(s.fwd, 5));
      }
      rec.add_row({Cell::text(model), Cell::num(mean_of(r1c)), Cell::num(mean_of(r5c)),
                   Cell::num(mean_of(r1s)), Cell::num(mean_of(r5s))});
    }
  }
  rec.add_note("recall of the aligned target among the forward top k, averaged over pairs");
  return {std::move(rep), std::move(eff), std::move(rec)};
}

// ---- E4 --------------------------------------------------------------------

ExperimentReport run_e4(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg) {
  ExperimentReport rep("e4", "Phylogenetic gap Hi-Bn minus Hi-Ar", in.descriptor);
  rep.add_column("model");
  rep.add_column("dphi_cos", 3);
  rep.add_column("dphi_abl", 3);
  rep.add_column("dphi_csls", 3);
  if (in.kind == InputKind::Fixture) {
    std::vector<std::string> models;
    for (const auto& r : in.fixture) {
      if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    }
    for (const auto& model : models) {
      const auto* pub = find_model(reference::phylo_gaps(), model);
      auto ref = [&](double v) { return pub ? Cell::replay(v) : Cell::flagged("not published"); };
      rep.add_row({Cell::text(model), ref(pub ? pub->cos : 0), ref(pub ? pub->abl : 0),
                   ref(pub ? pub->csls : 0)});
    }
    rep.add_note("the fixture has no diagonal similarities; all cells are replayed");
    return rep;
  }
  Workspace& w = require_workspace(in, ws, "e4");
  const PhyloOptions po{cfg.k, cfg.ablation_k};
  for (const auto& space : w.corpus().models) {
    const Key bn{space.model, "Hi-Bn"}, ar{space.model, "Hi-Ar"};
    if (!space.langs.count("Hi") || !space.langs.count("Bn") || !space.langs.count("Ar")) {
      rep.add_row({Cell::text(space.model), Cell::flagged("needs Hi, Bn, Ar"),
                   Cell::flagged("needs Hi, Bn, Ar"), Cell::flagged("needs Hi, Bn, Ar")});
      continue;
    }
    std::vector<Cell> row{Cell::text(space.model)};
    for (auto s : {DiagonalScore::Cosine, DiagonalScore::HubAblated, DiagonalScore::Csls}) {
      row.push_back(Cell::num(diagonal_mean(w.cos_fwd(bn), s, po) - diagonal_mean(w.cos_fwd(ar), s, po)));
    }
    rep.add_row(std::move(row));
  }
  rep.add_note("mean corresponding-pair score; abl drops the top " + std::to_string(cfg.ablation_k) +
               " cosine hubs, csls uses k = " + std::to_string(cfg.k));
  return rep;
}

// ---- E5 --------------------------------------------------------------------

ExperimentReport run_e5(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg) {
  ExperimentReport rep("e5", "Lexical features of English hubs versus non-hubs", in.descriptor);
  rep.add_column("model");
  rep.add_column("feature");
  rep.add_column("hub_mean", 2);
  rep.add_column("nonhub_mean", 2);
  rep.add_column("U", 1);
  rep.add_column("p", 3);
  if (in.kind == InputKind::Fixture) {
    for (const auto& c : reference::hub_feature_contrasts()) {
      rep.add_row({Cell::text(c.model), Cell::text(c.feature), Cell::replay(c.hub), Cell::replay(c.nonhub),
                   Cell::flagged("not published"),
                   c.p_bound ? Cell::text("<" + fixed(c.p), Provenance::Replay) : Cell::replay(c.p)});
    }
    rep.add_note("the fixture has no item-level features; all cells are replayed");
    return rep;
  }
  Workspace& w = require_workspace(in, ws, "e5");
  if (!in.features) throw ValidationError("experiment e5 needs a feature table (--features)");
  const FeatureTable& ft = *in.features;
  std::map<std::size_t, std::size_t> pos;
  for (std::size_t r = 0; r < ft.size(); ++r) pos[ft.item_id[r]] = r;

  std::uint64_t stream = 1000;
  for (const auto& space : w.corpus().models) {
    if (!space.langs.count("En")) continue;
    const std::size_t n = space.langs.at("En")->n();
    ft.check_items(n);
    std::vector<char> hub(n, 0);
    std::vector<std::size_t> hubs;
    if (const auto it = ft.is_hub.find(space.model); it != ft.is_hub.end()) {
      for (std::size_t r = 0; r < ft.size(); ++r) {
        if (it->second[r]) hubs.push_back(ft.item_id[r]);
      }
    } else {
      // In-degree of English targets pooled over the non-English queries.
      InDegreeProfile pooled{std::vector<std::size_t>(n, 0), 0};
      for (const char* lang : {"Bn", "Hi", "Ar"}) {
        if (!space.langs.count(lang)) continue;
        const auto p = in_degree(w.cos_bwd({space.model, std::string("En-") + lang}));
        for (std::size_t j = 0; j < n; ++j) pooled.counts[j] += p.counts[j];
        pooled.total += p.total;
      }
      if (pooled.total == 0) throw ValidationError("e5: model " + space.model + " has no Bn/Hi/Ar queries");
      const auto ranked = rank_hubs(pooled);
      const std::size_t top = std::min(cfg.hub_top, n / 2);
      hubs.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top));
    }
    for (auto h : hubs) hub[h] = 1;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      if (!hub[i]) rest.push_back(i);
    }
    // Size-matched random non-hub sample (partial Fisher-Yates).
    std::mt19937_64 rng(stream_seed(cfg.seed, stream++));
    const std::size_t take = std::min(hubs.size(), rest.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, rest.size() - 1);
      std::swap(rest[i], rest[pick(rng)]);
    }
    rest.resize(take);
    std::sort(rest.begin(), rest.end());

    const std::pair<const char*, const std::vector<double>*> features[] = {
        {"token_len", &ft.token_len}, {"concreteness", &ft.concreteness}, {"hypernym_depth", &ft.hypernym_depth}};
    for (const auto& [name, values] : features) {
      std::vector<double> xs, ys;
      for (auto h : hubs) {
        if (auto it = pos.find(h); it != pos.end()) xs.push_back((*values)[it->second]);
      }
      for (auto r : rest) {
        if (auto it = pos.find(r); it != pos.end()) ys.push_back((*values)[it->second]);
      }
      if (xs.empty() || ys.empty()) {
        rep.add_row({Cell::text(space.model), Cell::text(name), Cell::flagged("no feature rows"),
                     Cell::flagged("no feature rows"), Cell::flagged(""), Cell::flagged("")});
        continue;
      }
      const auto mw = stats::mann_whitney_u(xs, ys);
      rep.add_row({Cell::text(space.model), Cell::text(name), Cell::num(mean_of(xs)), Cell::num(mean_of(ys)),
                   Cell::num(mw.u), Cell::num(mw.p)});
    }
  }
  rep.add_note("hubs: top " + std::to_string(cfg.hub_top) +
               " English targets by in-degree pooled over Bn, Hi, Ar queries; two-sided Mann-Whitney U");
  return rep;
}

// ---- S1 --------------------------------------------------------------------

constexpr double kThresholds[] = {0.005, 0.01, 0.02};
constexpr AnisotropyVariant kVariants[] = {AnisotropyVariant::CosCentroid, AnisotropyVariant::Frac1,
                                           AnisotropyVariant::Spectral};

ExperimentReport run_s1(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg) {
  ExperimentReport rep("s1", "Sensitivity of the joint regression to threshold and anisotropy", in.descriptor);
  rep.add_column("threshold", 3);
  rep.add_column("aniso");
  rep.add_column("predictors");
  rep.add_column("r2", 3);
  rep.add_column("beta_H", 4);
  rep.add_column("p_H", 4);
  rep.add_column("dom_H_pct", 1);
  auto add_fit = [&](double thr, AnisotropyVariant v, const std::vector<PairObservation>& rows) {
    const E1Fit f = fit_e1(rows, E1Options{cfg.use_b, {}});
    const auto h = index_of(f.fit.names, "H");
    rep.add_row({Cell::num(thr), Cell::text(to_string(v)), Cell::text(predictor_list(f.pred.design)),
                 Cell::num(f.fit.r2), Cell::num(f.fit.betas[h]), Cell::num(f.fit.p[h]),
                 Cell::num(f.dom.shares[h])});
  };
  if (in.kind == InputKind::Fixture) {
    for (const auto& r : reference::sensitivity_grid()) {
      rep.add_row({Cell::num(r.threshold, Provenance::Replay), Cell::text(r.aniso, Provenance::Replay),
                   Cell::text("H,A,D,dim,b", Provenance::Replay), Cell::replay(r.r2), Cell::replay(r.beta_h),
                   Cell::replay(r.p_h), Cell::replay(r.dom_h)});
    }
    add_fit(0.01, AnisotropyVariant::CosCentroid, observations(in, nullptr));
    rep.add_note("the fixture fixes threshold 0.01 and cos-centroid anisotropy; the other variants are replayed");
    return rep;
  }
  Workspace& w = require_workspace(in, ws, "s1");
  for (double thr : kThresholds) {
    for (auto v : kVariants) {
      std::vector<PairObservation> rows;
      for (const auto& key : w.pairs()) rows.push_back(w.observation(key, thr, v));
      add_fit(thr, v, rows);
    }
  }
  return rep;
}

// ---- S2 --------------------------------------------------------------------

constexpr std::size_t kSweepKs[] = {1, 5, 10, 20, 50, 100};

ExperimentReport run_s2(const ExperimentInput& in, Workspace* ws, const ExperimentConfig&) {
  ExperimentReport rep("s2", "CSLS neighborhood size sweep", in.descriptor);
  rep.add_column("method");
  rep.add_column("k");
  rep.add_column("mean_R", 3);
  rep.add_column("delta_R", 3);
  rep.add_column("mean_R1", 3);
  if (in.kind == InputKind::Fixture) {
    const auto obs = observations(in, nullptr);
    std::vector<double> r;
    for (const auto& o : obs) r.push_back(o.R);
    for (const auto& row : reference::csls_k_sweep()) {
      const bool cos = row.k == 0;
      rep.add_row({Cell::text(cos ? "cosine" : "csls"),
                   cos ? Cell::flagged("") : Cell::integer(static_cast<std::int64_t>(row.k), Provenance::Replay),
                   cos ? Cell::num(mean_of(r)) : Cell::replay(row.mean_R),
                   row.delta ? Cell::replay(*row.delta) : Cell::flagged(""), Cell::replay(row.mean_R1)});
    }
    rep.add_note("cosine mean R is computed from the fixture; the sweep is replayed");
    return rep;
  }
  Workspace& w = require_workspace(in, ws, "s2");
  std::vector<double> r0, r1;
  for (const auto& key : w.pairs()) {
    r0.push_back(reciprocity(w.cos_fwd(key), w.cos_bwd(key)));
    r1.push_back(recall_at_k(w.cos_fwd(key), 1));
  }
  const double base = mean_of(r0);
  rep.add_row({Cell::text("cosine"), Cell::flagged(""), Cell::num(base), Cell::flagged(""), Cell::num(mean_of(r1))});
  const std::size_t n = w.dataset(w.pairs().front()).n();
  for (auto k : kSweepKs) {
    if (k > n) {
      rep.add_row({Cell::text("csls"), Cell::integer(static_cast<std::int64_t>(k)), Cell::flagged("k > n"),
                   Cell::flagged("k > n"), Cell::flagged("k > n")});
      continue;
    }
    std::vector<double> rk, rk1;
    for (const auto& key : w.pairs()) {
      const auto& s = w.csls_at(key, k);
      rk.push_back(reciprocity(s.fwd, s.bwd));
      rk1.push_back(recall_at_k(s.fwd, 1));
    }
    const double m = mean_of(rk);
    rep.add_row({Cell::text("csls"), Cell::integer(static_cast<std::int64_t>(k)), Cell::num(m),
                 Cell::num(m - base), Cell::num(mean_of(rk1))});
  }
  rep.add_note("means over all (model, pair) observations; R1 is forward recall at 1");
  return rep;
}

// ---- S3 --------------------------------------------------------------------

double whitening_covariance_error(const ParallelDataset& ds, std::size_t m) {
  const TransformedSpace t = transform_space(ds.src(), ds.tgt(), Transform::whiten(m));
  Eigen::MatrixXd joint(static_cast<Eigen::Index>(t.src.n() + t.tgt.n()), static_cast<Eigen::Index>(m));
  joint.topRows(static_cast<Eigen::Index>(t.src.n())) = to_eigen(t.src);
  joint.bottomRows(static_cast<Eigen::Index>(t.tgt.n())) = to_eigen(t.tgt);
  const Eigen::MatrixXd xc = joint.rowwise() - joint.colwise().mean();
  const Eigen::MatrixXd cov = xc.transpose() * xc / static_cast<double>(joint.rows() - 1);
  return (cov - Eigen::MatrixXd::Identity(cov.rows(), cov.cols())).norm();
}

ExperimentReport run_s3(const ExperimentInput& in, Workspace* ws, const ExperimentConfig&) {
  ExperimentReport rep("s3", "Reciprocity under eight retrieval methods", in.descriptor);
  rep.add_column("model");
  for (auto m : all_methods()) rep.add_column(to_string(m), 3);
  rep.add_column("whiten_cov_err", 3);

  auto pub_value = [](const reference::MethodRow& r, Method m) -> std::optional<double> {
    switch (m) {
      case Method::Cosine: return r.cos;
      case Method::Center: return r.center;
      case Method::Abtt1: return r.abtt1;
      case Method::Abtt3: return std::nullopt;
      case Method::Csls: return r.csls;
      case Method::Whiten128: return r.whiten;
      case Method::InvSoftmax: return r.inv_softmax;
      case Method::MutualProx: return r.mutual_prox;
    }
    return std::nullopt;
  };

  if (in.kind == InputKind::Fixture) {
    const auto obs = observations(in, nullptr);
    std::vector<double> all_r;
    for (const auto& [model, idx] : group_by_model(obs)) {
      const auto* pub = find_model(reference::methods_by_model(), model);
      std::vector<double> r;
      for (auto i : idx) r.push_back(obs[i].R);
      all_r.insert(all_r.end(), r.begin(), r.end());
      std::vector<Cell> row{Cell::text(model)};
      for (auto m : all_methods()) {
        if (m == Method::Cosine) row.push_back(Cell::num(mean_of(r)));
        else if (auto v = pub ? pub_value(*pub, m) : std::nullopt) row.push_back(Cell::replay(*v));
        else row.push_back(Cell::flagged("not published"));
      }
      row.push_back(Cell::flagged("needs embeddings"));
      rep.add_row(std::move(row));
    }
    const auto mean_row = reference::methods_mean();
    std::vector<Cell> row{Cell::text("Mean")};
    for (auto m : all_methods()) {
      if (m == Method::Cosine) row.push_back(Cell::num(mean_of(all_r)));
      else if (auto v = pub_value(mean_row, m)) row.push_back(Cell::replay(*v));
      else row.push_back(Cell::flagged("not published"));
    }
    row.push_back(Cell::flagged("needs embeddings"));
    rep.add_row(std::move(row));
    rep.add_note("cosine is computed from the fixture; the other methods are replayed");
    return rep;
  }

  Workspace& w = require_workspace(in, ws, "s3");
  std::map<Method, std::vector<double>> totals;
  for (const auto& model : w.models()) {
    std::vector<Cell> row{Cell::text(model)};
    const auto keys = pairs_of(w, model);
    for (auto m : all_methods()) {
      try {
        std::vector<double> r;
        for (const auto& key : keys) {
          const auto& s = w.scores(key, m);
          r.push_back(reciprocity(s.fwd, s.bwd));
        }
        totals[m].push_back(mean_of(r));
        row.push_back(Cell::num(mean_of(r)));
      } catch (const ValidationError& e) {
        row.push_back(Cell::flagged("n/a"));
      }
    }
    try {
      double worst = 0.0;
      for (const auto& key : keys) worst = std::max(worst, whitening_covariance_error(w.dataset(key), 128));
      row.push_back(Cell::num(worst));
    } catch (const ValidationError&) {
      row.push_back(Cell::flagged("n/a"));
    }
    rep.add_row(std::move(row));
  }
  std::vector<Cell> row{Cell::text("Mean")};
  for (auto m : all_methods()) {
    row.push_back(totals[m].size() == w.models().size() ? Cell::num(mean_of(totals[m])) : Cell::flagged("n/a"));
  }
  row.push_back(Cell::flagged(""));
  rep.add_row(std::move(row));
  rep.add_note("whiten_cov_err: worst Frobenius distance of the whitened joint covariance from identity");
  return rep;
}

// ---- S4 --------------------------------------------------------------------

ExperimentReport run_s4(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg) {
  const bool fixture = in.kind == InputKind::Fixture;
  const auto obs = observations(in, ws);
  const E1Fit f = fit_e1(obs, E1Options{cfg.use_b, {}});
  std::vector<std::string> by_model, by_pair;
  for (const auto& o : obs) {
    by_model.push_back(o.model);
    by_pair.push_back(o.pair);
  }
  const auto cr_model = stats::cluster_robust_se(f.fit, by_model);
  const auto cr_pair = stats::cluster_robust_se(f.fit, by_pair);

  ExperimentReport rep("s4", "Inference under alternative error structures", in.descriptor);
  rep.add_column("predictor");
  rep.add_column("beta", 3);
  rep.add_column("p_ols", 4);
  rep.add_column("p_cr_model", 4);
  rep.add_column("p_cr_pair", 4);
  rep.add_column("dominance_pct", 1);
  rep.add_column("published_p_ols", 4);
  rep.add_column("published_p_cr_model", 4);
  rep.add_column("published_p_cr_pair", 4);
  rep.add_column("published_p_lme", 4);
  rep.add_column("published_dominance_pct", 1);
  for (std::size_t j = 0; j < f.fit.names.size(); ++j) {
    const reference::InferenceRow* pub = nullptr;
    for (const auto& r : reference::inference_frameworks()) {
      if (r.predictor == f.fit.names[j]) pub = &r;
    }
    const bool show = fixture && pub;
    auto ref = [&](double v) { return show ? Cell::replay(v) : Cell::flagged("not published"); };
    Cell lme = !show ? Cell::flagged("out of scope")
               : pub->lme_bound ? Cell::text("<" + fixed(pub->p_lme, 4), Provenance::Replay)
                                : Cell::replay(pub->p_lme);
    rep.add_row({Cell::text(f.fit.names[j]), Cell::num(f.fit.betas[j]), Cell::num(f.fit.p[j]),
                 Cell::num(cr_model.p[j + 1]), Cell::num(cr_pair.p[j + 1]), Cell::num(f.dom.shares[j]),
                 ref(show ? pub->p_ols : 0), ref(show ? pub->p_cr_model : 0), ref(show ? pub->p_cr_pair : 0),
                 std::move(lme), ref(show ? pub->dominance_pct : 0)});
  }
  rep.add_note("CR1 sandwich, clusters by model (G = " + std::to_string(cr_model.clusters) + ") and by pair (G = " +
               std::to_string(cr_pair.clusters) + "), t(G-1) reference; the mixed-model column is a published "
               "annotation only");
  if (!f.pred.has_b) rep.add_note("byte ratio b unavailable; published values include b");
  return rep;
}

// ---- validity tests --------------------------------------------------------

std::string verdict(bool pass) { return pass ? "pass" : "fail"; }

ExperimentReport run_validity(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg) {
  const bool fixture = in.kind == InputKind::Fixture;
  const auto obs = observations(in, ws);
  const ModelTable mt = model_table(in, ws, cfg, obs);
  const PairTable pt = pair_table(mt, obs);
  std::vector<double> H, A, R;
  for (const auto& o : obs) {
    H.push_back(o.H);
    A.push_back(o.A);
    R.push_back(o.R);
  }

  ExperimentReport rep("validity", "Formal validity tests", in.descriptor);
  rep.add_column("test");
  rep.add_column("claim");
  rep.add_column("level");
  rep.add_column("n");
  rep.add_column("statistic", 3);
  rep.add_column("p", 3);
  rep.add_column("verdict");
  rep.add_column("published_statistic");
  rep.add_column("published_p");
  rep.add_column("published_verdict");

  auto published = [&](const std::string& id) -> std::array<Cell, 3> {
    if (!fixture) return {Cell::flagged("not published"), Cell::flagged(""), Cell::flagged("")};
    for (const auto& r : reference::validity_tests()) {
      if (r.id == id) {
        return {Cell::text(r.observed, Provenance::Replay),
                r.p.empty() ? Cell::flagged("") : Cell::text(r.p, Provenance::Replay),
                Cell::text(r.verdict, Provenance::Replay)};
      }
    }
    return {Cell::flagged(""), Cell::flagged(""), Cell::flagged("")};
  };
  auto add = [&](const std::string& id, const std::string& claim, const std::string& level, std::size_t n,
                 Cell stat, Cell p, std::string v, const std::string& pub_id) {
    auto pub = published(pub_id);
    rep.add_row({Cell::text(id), Cell::text(claim), Cell::text(level),
                 Cell::integer(static_cast<std::int64_t>(n)), std::move(stat), std::move(p), Cell::text(std::move(v)),
                 std::move(pub[0]), std::move(pub[1]), std::move(pub[2])});
  };
  auto corr = [&](std::span<const double> x, std::span<const double> y, stats::CorrMode mode,
                  const Eigen::MatrixXd& controls = {}) -> std::optional<stats::CorrelationResult> {
    try {
      return stats::correlation(x, y, mode, controls);
    } catch (const ValidationError&) {
      return std::nullopt;  // zero variance
    }
  };
  auto corr_row = [&](const std::string& id, const std::string& claim, const std::string& level,
                      std::span<const double> x, std::span<const double> y, stats::CorrMode mode,
                      const Eigen::MatrixXd& controls, auto pass) {
    const auto c = corr(x, y, mode, controls);
    if (!c) {
      add(id, claim, level, x.size(), Cell::flagged("undefined"), Cell::flagged("undefined"), "undefined", id);
      return;
    }
    add(id, claim, level, c->n, Cell::num(c->r), Cell::num(c->p), pass(*c), id);
  };

  const Eigen::MatrixXd none;
  Eigen::MatrixXd h_ctrl(static_cast<Eigen::Index>(H.size()), 1);
  for (std::size_t i = 0; i < H.size(); ++i) h_ctrl(static_cast<Eigen::Index>(i), 0) = H[i];

  corr_row("T1", "r(H, CSLS gain) > 0", "pairs", H, pt.csls_gain, stats::CorrMode::Pearson, none,
           [](const auto& c) { return verdict(c.r > 0 && c.p < 0.05); });
  corr_row("T2", "|partial r(A, CSLS gain | H)| < 0.30", "pairs", A, pt.csls_gain, stats::CorrMode::Pearson,
           h_ctrl, [](const auto& c) { return verdict(std::abs(c.r) < 0.30); });

  // T3a: gap closure per model. Fixture mode uses the published closure
  // column, since model-level closure is undefined for the best model.
  std::vector<double> closure;
  std::string closure_source;
  if (fixture) {
    for (const auto& m : mt.models) closure.push_back(published_retrieval(m).gap_pct);
    closure_source = "published closure";
  } else {
    std::vector<std::optional<double>> g = gap_closure_per_pair(mt.pair_cos, mt.pair_csls);
    if (std::all_of(g.begin(), g.end(), [](const auto& v) { return v.has_value(); })) {
      for (const auto& v : g) closure.push_back(*v);
      closure_source = "per-pair closure";
    } else {
      for (std::size_t m = 0; m < mt.models.size(); ++m) closure.push_back(mt.R_csls[m] - mt.R_cos[m]);
      closure_source = "CSLS gain (closure undefined for some model)";
    }
  }
  corr_row("T3a", "rho(H-bar, gap closure) > 0 [" + closure_source + "]", "models", mt.H_bar, closure,
           stats::CorrMode::Spearman, none, [](const auto& c) { return verdict(c.r > 0 && c.p < 0.05); });
  std::vector<double> model_gain, model_abl_gain;
  for (std::size_t m = 0; m < mt.models.size(); ++m) {
    model_gain.push_back(mt.R_csls[m] - mt.R_cos[m]);
    model_abl_gain.push_back(mt.R_abl[m] - mt.R_cos[m]);
  }
  corr_row("T3a-gain", "rho(H-bar, CSLS gain) > 0", "models", mt.H_bar, model_gain, stats::CorrMode::Spearman,
           none, [](const auto& c) { return verdict(c.r > 0 && c.p < 0.05); });
  corr_row("T3b", "rho(H-bar, R_cos) < 0", "models", mt.H_bar, mt.R_cos, stats::CorrMode::Spearman, none,
           [](const auto& c) { return verdict(c.r < 0 && c.p < 0.05); });
  corr_row("T3c", "|rho(CSLS gain, ablation gain)| < 0.70", "models", model_gain, model_abl_gain,
           stats::CorrMode::Spearman, none, [](const auto& c) {
             const double a = std::abs(c.r);
             if (std::abs(a - 0.70) < 1e-9) return std::string("borderline");
             return verdict(a < 0.70);
           });
  corr_row("r(H-bar, gain)", "Pearson r(H-bar, CSLS gain)", "models", mt.H_bar, model_gain,
           stats::CorrMode::Pearson, none, [](const auto&) { return std::string("info"); });

  // T4: H -> CSLS gain -> R_cos.
  {
    try {
      const auto a_fit = stats::ols_standardized(pt.csls_gain, stats::make_design({H}, {"H"}));
      const auto b_fit = stats::ols_standardized(R, stats::make_design({pt.csls_gain, H}, {"gain", "H"}));
      const auto s = stats::sobel(a_fit.betas[0], a_fit.se[0], b_fit.betas[0], b_fit.se[0]);
      add("T4", "Sobel H -> CSLS gain -> R_cos, p < 0.05", "pairs", H.size(), Cell::num(s.z), Cell::num(s.p),
          verdict(s.p < 0.05), "T4");
    } catch (const ValidationError&) {
      add("T4", "Sobel H -> CSLS gain -> R_cos, p < 0.05", "pairs", H.size(), Cell::flagged("undefined"),
          Cell::flagged("undefined"), "undefined", "T4");
    }
  }

  // T5: mean |d_csls / d_abl| over models.
  {
    std::vector<double> ratios;
    for (std::size_t m = 0; m < mt.models.size(); ++m) {
      const double d_csls = stats::cohens_d_within(mt.pair_cos[m], mt.R_csls[m]);
      double d_abl = stats::cohens_d_within(mt.pair_cos[m], mt.R_abl[m]);
      if (fixture) {
        if (const auto* pub = find_model(reference::effect_sizes(), mt.models[m])) d_abl = pub->d_abl;
      }
      if (std::abs(d_abl) > 1e-12) ratios.push_back(std::abs(d_csls / d_abl));
    }
    if (ratios.empty()) {
      add("T5", "d_CSLS / d_abl > 2", "models", 0, Cell::flagged("undefined"), Cell::flagged(""), "undefined", "T5");
    } else {
      const double r = mean_of(ratios);
      add("T5", "d_CSLS / d_abl > 2", "models", ratios.size(), Cell::num(r), Cell::flagged(""), verdict(r > 2.0),
          "T5");
    }
  }

  if (fixture) {
    rep.add_note("fixture mode: per-pair CSLS R is not published, so the pair-level CSLS gain is the model-level "
                 "gain (published R_csls minus published R_cos) repeated over the model's pairs");
    rep.add_note("fixture mode: T5 divides computed d_CSLS by the published d_abl");
  }
  return rep;
}

// ---- correlation tables ----------------------------------------------------

ExperimentReport run_t6(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg) {
  const bool fixture = in.kind == InputKind::Fixture;
  const auto obs = observations(in, ws);
  std::vector<std::vector<double>> cols(5);
  for (const auto& o : obs) {
    cols[0].push_back(o.H);
    cols[1].push_back(o.A);
    cols[2].push_back(o.D);
    cols[3].push_back(o.R);
  }
  if (!fixture) {
    const PairTable pt = pair_table(model_table(in, ws, cfg, obs), obs);
    cols[4] = pt.R_csls;
  }
  const auto& names = reference::construct_names();
  const auto& pub = reference::construct_correlations();

  ExperimentReport rep("t6", "Pair-level correlations among constructs", in.descriptor);
  rep.add_column("x");
  rep.add_column("y");
  rep.add_column("r", 3);
  rep.add_column("p", 3);
  rep.add_column("n");
  rep.add_column("published_r", 2);
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      Cell ref = fixture ? Cell::replay(pub[i][j]) : Cell::flagged("not published");
      if (cols[i].empty() || cols[j].empty()) {
        rep.add_row({Cell::text(names[i]), Cell::text(names[j]), Cell::flagged("needs per-pair CSLS"),
                     Cell::flagged("needs per-pair CSLS"), Cell::integer(0), std::move(ref)});
        continue;
      }
      try {
        const auto c = stats::correlation(cols[i], cols[j], stats::CorrMode::Pearson);
        rep.add_row({Cell::text(names[i]), Cell::text(names[j]), Cell::num(c.r), Cell::num(c.p),
                     Cell::integer(static_cast<std::int64_t>(c.n)), std::move(ref)});
      } catch (const ValidationError&) {
        rep.add_row({Cell::text(names[i]), Cell::text(names[j]), Cell::flagged("undefined"),
                     Cell::flagged("undefined"), Cell::integer(static_cast<std::int64_t>(cols[i].size())),
                     std::move(ref)});
      }
    }
  }
  return rep;
}

ExperimentReport run_cv(const ExperimentInput& in, Workspace* ws, const ExperimentConfig& cfg) {
  const bool fixture = in.kind == InputKind::Fixture;
  const auto obs = observations(in, ws);
  ExperimentReport rep("cv", "Construct validity diagnostics", in.descriptor);
  rep.add_column("diagnostic");
  rep.add_column("value", 3);
  rep.add_column("p", 4);
  rep.add_column("published", 3);
  auto pub = [&](const std::string& name) {
    if (!fixture) return Cell::flagged("not published");
    for (const auto& d : reference::validity_diagnostics()) {
      if (d.name == name) return Cell::replay(d.value);
    }
    return Cell::flagged("not published");
  };
  std::vector<double> H, R, A;
  for (const auto& o : obs) {
    H.push_back(o.H);
    R.push_back(o.R);
    A.push_back(o.A);
  }

  // H against each anisotropy variant.
  const std::pair<AnisotropyVariant, std::string> variants[] = {
      {AnisotropyVariant::CosCentroid, "r(H, A_cos)"},
      {AnisotropyVariant::Frac1, "r(H, A_frac1)"},
      {AnisotropyVariant::Spectral, "r(H, A_spec)"}};
  double max_abs = 0.0;
  for (const auto& [v, name] : variants) {
    if (fixture && v != AnisotropyVariant::CosCentroid) {
      rep.add_row({Cell::text(name), Cell::flagged("fixture has cos-centroid only"), Cell::flagged(""), pub(name)});
      continue;
    }
    std::vector<double> av;
    if (fixture) av = A;
    else for (const auto& key : ws->pairs()) av.push_back(ws->observation(key, cfg.threshold, v).A);
    const auto c = stats::correlation(H, av, stats::CorrMode::Pearson);
    rep.add_row({Cell::text(name), Cell::num(c.r), Cell::num(c.p), pub(name)});
  }
  if (fixture) {
    rep.add_row({Cell::text("max |r(H_i, A_j)|"), Cell::flagged("fixture has one variant"), Cell::flagged(""),
                 pub("max |r(H_i, A_j)|")});
  } else {
    for (double thr : kThresholds) {
      for (auto v : kVariants) {
        std::vector<double> h, a;
        for (const auto& key : ws->pairs()) {
          const auto o = ws->observation(key, thr, v);
          h.push_back(o.H);
          a.push_back(o.A);
        }
        max_abs = std::max(max_abs, std::abs(stats::correlation(h, a, stats::CorrMode::Pearson).r));
      }
    }
    rep.add_row({Cell::text("max |r(H_i, A_j)|"), Cell::num(max_abs), Cell::flagged(""), Cell::flagged("")});
  }

  const Predictors p = predictors(obs, E1Options{cfg.use_b, {}});
  const auto v = stats::vif(p.design);
  for (const std::string name : {"H", "dim", "b", "A", "D"}) {
    const auto it = std::find(p.design.names.begin(), p.design.names.end(), name);
    const std::string label = "VIF(" + name + ")";
    if (it == p.design.names.end()) {
      rep.add_row({Cell::text(label), Cell::flagged("b unavailable"), Cell::flagged(""), pub(label)});
      continue;
    }
    const auto j = static_cast<std::size_t>(it - p.design.names.begin());
    rep.add_row({Cell::text(label), Cell::num(v[j]), Cell::flagged(""), pub(label)});
  }

  // Partial correlations controlling for the nuisance predictors.
  std::vector<std::string> ctrl_names{"dim", "D"};
  if (p.has_b) ctrl_names.push_back("b");
  Eigen::MatrixXd ctrl(static_cast<Eigen::Index>(obs.size()), static_cast<Eigen::Index>(ctrl_names.size()));
  for (std::size_t c = 0; c < ctrl_names.size(); ++c) {
    ctrl.col(static_cast<Eigen::Index>(c)) = p.design.X.col(static_cast<Eigen::Index>(index_of(p.design.names, ctrl_names[c])));
  }
  const std::string ctrl_label = p.has_b ? "dim, D, b" : "dim, D";
  const std::tuple<std::string, const std::vector<double>*, const std::vector<double>*> partials[] = {
      {"r(R, H | dim, D, b)", &R, &H}, {"r(R, A | dim, D, b)", &R, &A}, {"r(H, A | dim, D, b)", &H, &A}};
  for (const auto& [pub_name, x, y] : partials) {
    const auto c = stats::correlation(*x, *y, stats::CorrMode::Pearson, ctrl);
    std::string label = pub_name;
    label.replace(label.find("dim, D, b"), 9, ctrl_label);
    rep.add_row({Cell::text(label), Cell::num(c.r), Cell::num(c.p), pub(pub_name)});
  }
  if (!p.has_b) rep.add_note("byte ratio b unavailable: controls are dim and D only");
  return rep;
}

}  // namespace

DirectionalResult synth_direction(const SynthConfig& synth, const ExperimentConfig& cfg) {
  const ParallelDataset ds = generate_parallel(synth);
  const ScoreMatrix fwd = cosine_matrix(ds.src(), ds.tgt());
  const ScoreMatrix bwd = fwd.transposed();
  DirectionalResult r;
  r.R_cos = reciprocity(fwd, bwd);
  const auto cs = score_pair(ds, fwd, Method::Csls, MethodOptions{cfg.k, cfg.tau, 128});
  r.R_csls = reciprocity(cs.fwd, cs.bwd);
  r.R_hub_ablated = ablate_topk(fwd, bwd, cfg.ablation_k, cfg.ablation);
  r.R_random = random_ablation_control(fwd, bwd, cfg.ablation_k, cfg.random_trials,
                                       stream_seed(synth.seed, 0x72616e64ULL), cfg.ablation.semantics);
  r.hub_mass = hub_mass(in_degree(fwd), cfg.threshold);
  return r;
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"e1", "e2", "e3", "e4", "e5", "s1", "s2", "s3", "s4",
                                            "validity", "t6", "cv"};
  return ids;
}

std::vector<ExperimentReport> run_experiment(const std::string& id, const ExperimentInput& in,
                                             const ExperimentConfig& cfg, Workspace* shared) {
  if (std::find(experiment_ids().begin(), experiment_ids().end(), id) == experiment_ids().end()) {
    throw ValidationError("unknown experiment id '" + id + "'");
  }
  std::unique_ptr<Workspace> own;
  Workspace* ws = shared;
  if (in.kind != InputKind::Fixture && !ws) {
    own = std::make_unique<Workspace>(in.corpus, cfg);
    ws = own.get();
  }
  if (id == "e1") {
    return {run_e1(observations(in, ws), E1Options{cfg.use_b, {}, in.kind == InputKind::Fixture}, in.descriptor)};
  }
  if (id == "e2") return {run_e2(in, ws, cfg)};
  if (id == "e3") return run_e3(in, ws, cfg);
  if (id == "e4") return {run_e4(in, ws, cfg)};
  if (id == "e5") return {run_e5(in, ws, cfg)};
  if (id == "s1") return {run_s1(in, ws, cfg)};
  if (id == "s2") return {run_s2(in, ws, cfg)};
  if (id == "s3") return {run_s3(in, ws, cfg)};
  if (id == "s4") return {run_s4(in, ws, cfg)};
  if (id == "validity") return {run_validity(in, ws, cfg)};
  if (id == "t6") return {run_t6(in, ws, cfg)};
  return {run_cv(in, ws, cfg)};
}

}  // namespace hubscope
