#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hubscope {

enum class Provenance { Computed, Replay };

// One table cell. Empty cells carry an optional flag ("undefined",
// "not published", ...) instead of a value.
struct Cell {
  std::variant<std::monostate, double, std::int64_t, std::string> value;
  Provenance provenance = Provenance::Computed;
  std::string flag;

  static Cell num(double v, Provenance p = Provenance::Computed) { return {v, p, {}}; }
  static Cell integer(std::int64_t v, Provenance p = Provenance::Computed) { return {v, p, {}}; }
  static Cell text(std::string s, Provenance p = Provenance::Computed) { return {std::move(s), p, {}}; }
  static Cell replay(double v) { return {v, Provenance::Replay, {}}; }
  static Cell flagged(std::string why, Provenance p = Provenance::Computed) {
    return {std::monostate{}, p, std::move(why)};
  }
  static Cell maybe(const std::optional<double>& v, const std::string& why_missing) {
    return v ? num(*v) : flagged(why_missing);
  }

  bool empty() const { return std::holds_alternative<std::monostate>(value); }
  std::optional<double> as_double() const;
};

struct Column {
  std::string name;
  int decimals = 3;  // markdown rendering only; CSV and JSON are lossless
};

enum class EmitFormat { Csv, Json, Markdown };

EmitFormat parse_emit_format(const std::string& s);
std::string extension(EmitFormat f);

class ExperimentReport {
 public:
  ExperimentReport(std::string id, std::string title, std::string input);

  const std::string& id() const { return id_; }
  const std::string& title() const { return title_; }
  const std::string& input() const { return input_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  const std::vector<std::string>& notes() const { return notes_; }
  const std::string& manifest() const { return manifest_; }

  void add_column(std::string name, int decimals = 3);
  void add_row(std::vector<Cell> row);
  void add_note(std::string note);
  void set_manifest(std::string manifest_name) { manifest_ = std::move(manifest_name); }

  std::size_t column_index(const std::string& name) const;
  const Cell& at(std::size_t row, const std::string& column) const;

  std::string to_csv() const;
  std::string to_json() const;
  std::string to_markdown() const;
  std::string render(EmitFormat f) const;

  // Writes <dir>/<id>.<ext>; returns the path.
  std::filesystem::path write(const std::filesystem::path& dir, EmitFormat f) const;

 private:
  std::string id_;
  std::string title_;
  std::string input_;
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::string> notes_;
  std::string manifest_;
};

}  // namespace hubscope
