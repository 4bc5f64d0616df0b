#include "hubscope/corpus_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "hubscope/error.hpp"
#include "text_io.hpp"

namespace hubscope {

namespace fs = std::filesystem;
using detail::format_double;
using detail::parse_double;
using detail::split_csv_line;

EmbeddingMatrix::EmbeddingMatrix(std::string model_id, std::string lang, std::size_t n,
                                 std::size_t dim, std::vector<double> data)
    : model_id_(std::move(model_id)), lang_(std::move(lang)), n_(n), dim_(dim),
      data_(std::move(data)) {
  if (n_ == 0 || dim_ == 0) throw ValidationError("embedding matrix needs n >= 1 and dim >= 1");
  if (data_.size() != n_ * dim_) {
    throw ValidationError("shape mismatch: declared " + std::to_string(n_) + "x" +
                          std::to_string(dim_) + " but data has " +
                          std::to_string(data_.size()) + " values");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    bool nonzero = false;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double v = data_[i * dim_ + j];
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite entry at row " + std::to_string(i) + ", column " +
                              std::to_string(j));
      }
      nonzero = nonzero || v != 0.0;
    }
    if (!nonzero) throw ValidationError("zero row at row " + std::to_string(i));
  }
}

ParallelDataset::ParallelDataset(MatrixPtr src, MatrixPtr tgt, std::string pair_id)
    : src_(std::move(src)), tgt_(std::move(tgt)), pair_id_(std::move(pair_id)) {
  if (!src_ || !tgt_) throw ValidationError("dataset needs both matrices");
  if (src_->n() != tgt_->n()) {
    throw ValidationError("length mismatch in " + pair_id_ + ": " + std::to_string(src_->n()) +
                          " vs " + std::to_string(tgt_->n()));
  }
  if (src_->model_id() != tgt_->model_id()) {
    throw ValidationError("model mismatch in " + pair_id_ + ": " + src_->model_id() + " vs " +
                          tgt_->model_id());
  }
}

MatrixFormat parse_matrix_format(const std::string& name) {
  if (name == "raw-f32" || name == "f32") return MatrixFormat::RawF32;
  if (name == "csv") return MatrixFormat::Csv;
  throw ValidationError("unknown matrix format '" + name + "' (expected raw-f32 or csv)");
}

namespace {

fs::path header_path(const fs::path& payload) {
  fs::path h = payload;
  h += ".json";
  return h;
}

EmbeddingMatrix load_raw_f32(const fs::path& path, const std::optional<MatrixLabels>& labels) {
  const fs::path hp = header_path(path);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(detail::read_file(hp));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad header " + hp.string() + ": " + e.what());
  }
  std::string model, lang;
  std::size_t n = 0, dim = 0;
  try {
    model = h.at("model_id").get<std::string>();
    lang = h.at("lang").get<std::string>();
    n = h.at("n").get<std::size_t>();
    dim = h.at("dim").get<std::size_t>();
    const auto dtype = h.at("dtype").get<std::string>();
    const auto layout = h.at("layout").get<std::string>();
    if (dtype != "float32") throw ValidationError("unsupported dtype '" + dtype + "' in " + hp.string());
    if (layout != "row-major") {
      throw ValidationError("unsupported layout '" + layout + "' in " + hp.string());
    }
    if (h.contains("endianness") && h["endianness"].get<std::string>() != "little") {
      throw ValidationError("only little-endian payloads are supported: " + hp.string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad header " + hp.string() + ": " + e.what());
  }
  if (labels) {
    model = labels->model_id;
    lang = labels->lang;
  }

  const std::string payload = detail::read_file(path);
  if (payload.size() % 4 != 0 || payload.size() / 4 != n * dim) {
    throw ValidationError("shape mismatch in " + path.string() + ": header declares " +
                          std::to_string(n) + "x" + std::to_string(dim) + " = " +
                          std::to_string(n * dim) + " floats, payload has " +
                          std::to_string(payload.size() / 4) +
                          (payload.size() % 4 ? " (plus trailing bytes)" : ""));
  }
  std::vector<double> data(n * dim);
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const unsigned char* b = bytes + 4 * i;
    const std::uint32_t u = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
                            (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
    data[i] = static_cast<double>(std::bit_cast<float>(u));
  }
  return EmbeddingMatrix(std::move(model), std::move(lang), n, dim, std::move(data));
}

EmbeddingMatrix load_csv(const fs::path& path, const std::optional<MatrixLabels>& labels) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw ValidationError("empty CSV " + path.string());
  const std::size_t dim = split_csv_line(lines[0]).size();
  std::vector<double> data;
  std::size_t n = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (detail::trim(lines[li]).empty()) continue;
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != dim) {
      throw ValidationError("shape mismatch at row " + std::to_string(n) + " of " +
                            path.string() + ": " + std::to_string(cells.size()) +
                            " values, header has " + std::to_string(dim));
    }
    for (const auto& c : cells) data.push_back(parse_double(c, path.string()));
    ++n;
  }
  MatrixLabels l = labels.value_or(
      MatrixLabels{path.parent_path().filename().string(), path.stem().string()});
  return EmbeddingMatrix(std::move(l.model_id), std::move(l.lang), n, dim, std::move(data));
}

}  // namespace

EmbeddingMatrix load_embeddings(const fs::path& path, MatrixFormat format,
                                const std::optional<MatrixLabels>& labels) {
  if (!fs::exists(path)) throw ValidationError("no such file: " + path.string());
  return format == MatrixFormat::RawF32 ? load_raw_f32(path, labels) : load_csv(path, labels);
}

void save_embeddings(const EmbeddingMatrix& m, const fs::path& path, MatrixFormat format) {
  if (format == MatrixFormat::RawF32) {
    std::string payload(m.data().size() * 4, '\0');
    for (std::size_t i = 0; i < m.data().size(); ++i) {
      const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(m.data()[i]));
      for (int b = 0; b < 4; ++b) payload[4 * i + b] = static_cast<char>((u >> (8 * b)) & 0xFFu);
    }
    detail::write_file(path, payload);
    nlohmann::ordered_json h;
    h["model_id"] = m.model_id();
    h["lang"] = m.lang();
    h["n"] = m.n();
    h["dim"] = m.dim();
    h["dtype"] = "float32";
    h["layout"] = "row-major";
    h["endianness"] = "little";
    detail::write_file(header_path(path), h.dump(2) + "\n");
    return;
  }
  std::string out;
  for (std::size_t j = 0; j < m.dim(); ++j) {
    if (j) out += ',';
    out += "v" + std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out += ',';
      out += format_double(r[j]);
    }
    out += '\n';
  }
  detail::write_file(path, out);
}

ParallelDataset align(MatrixPtr src, MatrixPtr tgt, std::string pair_id) {
  return ParallelDataset(std::move(src), std::move(tgt), std::move(pair_id));
}

ParallelDataset align(EmbeddingMatrix src, EmbeddingMatrix tgt, std::string pair_id) {
  return align(std::make_shared<const EmbeddingMatrix>(std::move(src)),
               std::make_shared<const EmbeddingMatrix>(std::move(tgt)), std::move(pair_id));
}

double byte_ratio(std::span<const std::string> src_texts, std::span<const std::string> tgt_texts) {
  if (src_texts.empty() || tgt_texts.empty()) throw ValidationError("byte_ratio: empty input");
  if (src_texts.size() != tgt_texts.size()) {
    throw ValidationError("byte_ratio: text lists differ in length");
  }
  double src_bytes = 0.0, tgt_bytes = 0.0;
  for (const auto& s : src_texts) src_bytes += static_cast<double>(s.size());
  for (const auto& t : tgt_texts) tgt_bytes += static_cast<double>(t.size());
  if (src_bytes == 0.0) throw ValidationError("byte_ratio: zero mean source length");
  // Equal counts, so the ratio of means is the ratio of totals.
  return tgt_bytes / src_bytes;
}

std::vector<FixtureRow> load_fixture(const fs::path& path, const FixtureLoadOptions& options) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw ValidationError("empty fixture " + path.string());
  const auto header = split_csv_line(lines[0]);
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (detail::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const char* required[] = {"model", "pair", "R", "H", "A", "D", "dim"};
  std::size_t idx[7];
  for (int i = 0; i < 7; ++i) {
    auto c = col(required[i]);
    if (!c) throw ValidationError(std::string("fixture missing column '") + required[i] + "'");
    idx[i] = *c;
  }
  const auto b_col = col("b");

  std::vector<FixtureRow> rows;
  std::set<std::pair<std::string, std::string>> keys;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (detail::trim(lines[li]).empty()) continue;
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != header.size()) {
      throw ValidationError("fixture line " + std::to_string(li + 1) + " has " +
                            std::to_string(cells.size()) + " fields, expected " +
                            std::to_string(header.size()));
    }
    const std::string where = "fixture line " + std::to_string(li + 1);
    FixtureRow r;
    r.model = detail::trim(cells[idx[0]]);
    r.pair = detail::trim(cells[idx[1]]);
    r.R = parse_double(cells[idx[2]], where);
    r.H = parse_double(cells[idx[3]], where);
    r.A = parse_double(cells[idx[4]], where);
    r.D = parse_double(cells[idx[5]], where);
    r.dim = static_cast<int>(detail::parse_int(cells[idx[6]], where));
    if (b_col && !detail::trim(cells[*b_col]).empty()) r.b = parse_double(cells[*b_col], where);
    auto in = [](double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; };
    if (!in(r.R, 0, 1) || !in(r.H, 0, 1) || !in(r.A, -1, 1) || !in(r.D, 0, 2) || r.dim < 1 ||
        (r.b && !std::isfinite(*r.b))) {
      throw ValidationError(where + ": value out of range");
    }
    if (!keys.emplace(r.model, r.pair).second) {
      throw ValidationError("duplicate key (" + r.model + ", " + r.pair + ") at " + where);
    }
    rows.push_back(std::move(r));
  }
  if (options.expected_rows && rows.size() != *options.expected_rows) {
    throw ValidationError("fixture has " + std::to_string(rows.size()) + " rows, expected " +
                          std::to_string(*options.expected_rows));
  }
  return rows;
}

fs::path default_fixture_path() {
#ifdef HUBSCOPE_DATA_DIR
  return fs::path(HUBSCOPE_DATA_DIR) / "fixture" / "appendix_obs.csv";
#else
  return {};
#endif
}

void FeatureTable::check_items(std::size_t n) const {
  for (std::size_t i = 0; i < item_id.size(); ++i) {
    if (item_id[i] >= n) {
      throw ValidationError("feature row " + std::to_string(i) + ": item_id " +
                            std::to_string(item_id[i]) + " >= n = " + std::to_string(n));
    }
  }
}

FeatureTable load_feature_table(const fs::path& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw ValidationError("empty feature table " + path.string());
  const auto header = split_csv_line(lines[0]);
  std::optional<std::size_t> c_id, c_len, c_conc, c_depth;
  std::vector<std::pair<std::size_t, std::string>> hub_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = detail::trim(header[i]);
    if (h == "item_id") c_id = i;
    else if (h == "token_len") c_len = i;
    else if (h == "concreteness") c_conc = i;
    else if (h == "hypernym_depth") c_depth = i;
    else if (h.rfind("is_hub:", 0) == 0) hub_cols.emplace_back(i, h.substr(7));
  }
  if (!c_id || !c_len || !c_conc || !c_depth) {
    throw ValidationError(
        "feature table needs columns item_id, token_len, concreteness, hypernym_depth");
  }
  FeatureTable t;
  for (const auto& [_, model] : hub_cols) t.is_hub[model];
  std::set<std::size_t> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (detail::trim(lines[li]).empty()) continue;
    const auto cells = split_csv_line(lines[li]);
    const std::string where = "feature table line " + std::to_string(li + 1);
    if (cells.size() != header.size()) throw ValidationError(where + ": wrong field count");
    const long long id = detail::parse_int(cells[*c_id], where);
    if (id < 0) throw ValidationError(where + ": negative item_id");
    if (!seen.insert(static_cast<std::size_t>(id)).second) {
      throw ValidationError(where + ": duplicate item_id " + std::to_string(id));
    }
    const double len = parse_double(cells[*c_len], where);
    const double conc = parse_double(cells[*c_conc], where);
    const double depth = parse_double(cells[*c_depth], where);
    if (!std::isfinite(len) || !std::isfinite(conc) || !std::isfinite(depth)) {
      throw ValidationError(where + ": non-finite feature value");
    }
    if (len <= 0) throw ValidationError(where + ": token_len must be positive");
    t.item_id.push_back(static_cast<std::size_t>(id));
    t.token_len.push_back(len);
    t.concreteness.push_back(conc);
    t.hypernym_depth.push_back(depth);
    for (const auto& [c, model] : hub_cols) {
      const long long f = detail::parse_int(cells[c], where);
      if (f != 0 && f != 1) throw ValidationError(where + ": is_hub flags must be 0 or 1");
      t.is_hub[model].push_back(static_cast<std::uint8_t>(f));
    }
  }
  return t;
}

const ModelSpace* Corpus::find(const std::string& model) const {
  for (const auto& m : models) {
    if (m.model == model) return &m;
  }
  return nullptr;
}

Corpus load_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw ValidationError("input is not a directory: " + root.string());
  Corpus corpus;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    const std::string name = dir.filename().string();
    if (name == "texts") {
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".txt") {
          auto lines = detail::read_lines(e.path());
          corpus.texts[e.path().stem().string()] = std::move(lines);
        }
      }
      continue;
    }
    ModelSpace space{name, {}};
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto& p = e.path();
      const std::string lang = p.stem().string();
      std::optional<EmbeddingMatrix> m;
      if (p.extension() == ".f32") {
        m = load_embeddings(p, MatrixFormat::RawF32);
      } else if (p.extension() == ".csv") {
        m = load_embeddings(p, MatrixFormat::Csv, MatrixLabels{name, lang});
      } else {
        continue;
      }
      if (m->model_id() != name) {
        throw ValidationError(p.string() + " declares model '" + m->model_id() +
                              "' but sits under '" + name + "'");
      }
      if (!space.langs.emplace(lang, std::make_shared<const EmbeddingMatrix>(std::move(*m))).second) {
        throw ValidationError("language " + lang + " stored twice under " + dir.string());
      }
    }
    if (!space.langs.empty()) corpus.models.push_back(std::move(space));
  }
  if (corpus.models.empty()) throw ValidationError("no embeddings found under " + root.string());
  return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& root, MatrixFormat format) {
  const char* ext = format == MatrixFormat::RawF32 ? ".f32" : ".csv";
  for (const auto& space : corpus.models) {
    for (const auto& [lang, m] : space.langs) {
      save_embeddings(*m, root / space.model / (lang + ext), format);
    }
  }
  for (const auto& [lang, lines] : corpus.texts) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    detail::write_file(root / "texts" / (lang + ".txt"), out);
  }
}

std::pair<std::string, std::string> split_pair_id(const std::string& pair_id) {
  const auto dash = pair_id.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == pair_id.size() ||
      pair_id.find('-', dash + 1) != std::string::npos) {
    throw ValidationError("pair id must look like 'En-Bn', got '" + pair_id + "'");
  }
  return {pair_id.substr(0, dash), pair_id.substr(dash + 1)};
}

}  // namespace hubscope
