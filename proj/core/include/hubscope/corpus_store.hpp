#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hubscope {

// One (model, language) block of n item vectors of dimension dim, row-major.
// Every entry is finite and no row is all-zero; the constructor enforces this
// and reports the first offending row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::string model_id, std::string lang, std::size_t n, std::size_t dim,
                  std::vector<double> data);

  const std::string& model_id() const { return model_id_; }
  const std::string& lang() const { return lang_; }
  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> data() const { return data_; }
  double at(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::string model_id_;
  std::string lang_;
  std::size_t n_;
  std::size_t dim_;
  std::vector<double> data_;
};

using MatrixPtr = std::shared_ptr<const EmbeddingMatrix>;

// Index-aligned pair of matrices from the same model: row i of src and row i
// of tgt are the same expression. Matrices are shared, never copied.
class ParallelDataset {
 public:
  ParallelDataset(MatrixPtr src, MatrixPtr tgt, std::string pair_id);

  const EmbeddingMatrix& src() const { return *src_; }
  const EmbeddingMatrix& tgt() const { return *tgt_; }
  const MatrixPtr& src_ptr() const { return src_; }
  const MatrixPtr& tgt_ptr() const { return tgt_; }
  const std::string& pair_id() const { return pair_id_; }
  std::size_t n() const { return src_->n(); }

 private:
  MatrixPtr src_;
  MatrixPtr tgt_;
  std::string pair_id_;
};

enum class MatrixFormat { RawF32, Csv };

MatrixFormat parse_matrix_format(const std::string& name);

struct MatrixLabels {
  std::string model_id;
  std::string lang;
};

// raw-f32: `path` is the little-endian row-major float payload; the JSON
// header lives next to it at `path` + ".json". CSV: one header row
// (v0..v{dim-1}) then one row per item; labels default to the parent
// directory name (model) and the file stem (language).
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, MatrixFormat format,
                                const std::optional<MatrixLabels>& labels = std::nullopt);

// Writes the matrix in the given format. raw-f32 narrows to float, so the
// round trip is bit-exact for float-representable matrices (everything loaded
// from raw-f32 and everything the synth module produces). CSV uses shortest
// round-trip decimal and is always bit-exact.
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path,
                     MatrixFormat format);

ParallelDataset align(MatrixPtr src, MatrixPtr tgt, std::string pair_id);
ParallelDataset align(EmbeddingMatrix src, EmbeddingMatrix tgt, std::string pair_id);

// Mean UTF-8 byte length of tgt_texts divided by that of src_texts.
double byte_ratio(std::span<const std::string> src_texts, std::span<const std::string> tgt_texts);

struct FixtureRow {
  std::string model;
  std::string pair;
  double R = 0.0;
  double H = 0.0;
  double A = 0.0;
  double D = 0.0;
  int dim = 0;
  std::optional<double> b;
};

struct FixtureLoadOptions {
  // Row count the file must contain; the shipped per-pair fixture has 20.
  std::optional<std::size_t> expected_rows = 20;
};

// CSV with header model,pair,R,H,A,D,dim and an optional b column.
std::vector<FixtureRow> load_fixture(const std::filesystem::path& path,
                                     const FixtureLoadOptions& options = {});

// Location of the shipped fixture relative to the source tree, as configured
// at build time. Empty when not configured.
std::filesystem::path default_fixture_path();

struct FeatureTable {
  std::vector<std::size_t> item_id;
  std::vector<double> token_len;
  std::vector<double> concreteness;
  std::vector<double> hypernym_depth;
  // Optional precomputed hub flags, keyed by model id.
  std::map<std::string, std::vector<std::uint8_t>> is_hub;

  std::size_t size() const { return item_id.size(); }
  // Throws ValidationError if any item_id >= n.
  void check_items(std::size_t n) const;
};

// CSV with header item_id,token_len,concreteness,hypernym_depth and any
// number of extra `is_hub:<model>` 0/1 columns.
FeatureTable load_feature_table(const std::filesystem::path& path);

// A directory of embeddings: <root>/<model>/<lang>.f32 (+ .f32.json) or
// <root>/<model>/<lang>.csv, plus optional <root>/texts/<lang>.txt with one
// expression per line.
struct ModelSpace {
  std::string model;
  std::map<std::string, MatrixPtr> langs;
};

struct Corpus {
  std::vector<ModelSpace> models;  // sorted by model name
  std::map<std::string, std::vector<std::string>> texts;

  const ModelSpace* find(const std::string& model) const;
};

Corpus load_corpus(const std::filesystem::path& root);
void save_corpus(const Corpus& corpus, const std::filesystem::path& root, MatrixFormat format);

// Splits "En-Bn" into {"En", "Bn"}.
std::pair<std::string, std::string> split_pair_id(const std::string& pair_id);

}  // namespace hubscope
