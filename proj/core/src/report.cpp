#include "hubscope/report.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "hubscope/error.hpp"
#include "text_io.hpp"

namespace hubscope {

std::optional<double> Cell::as_double() const {
  if (const auto* d = std::get_if<double>(&value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  return std::nullopt;
}

EmitFormat parse_emit_format(const std::string& s) {
  if (s == "csv") return EmitFormat::Csv;
  if (s == "json") return EmitFormat::Json;
  if (s == "md" || s == "markdown") return EmitFormat::Markdown;
  throw ValidationError("unknown emit format '" + s + "' (expected csv, json or md)");
}

std::string extension(EmitFormat f) {
  switch (f) {
    case EmitFormat::Csv: return "csv";
    case EmitFormat::Json: return "json";
    case EmitFormat::Markdown: return "md";
  }
  return "txt";
}

ExperimentReport::ExperimentReport(std::string id, std::string title, std::string input)
    : id_(std::move(id)), title_(std::move(title)), input_(std::move(input)) {}

void ExperimentReport::add_column(std::string name, int decimals) {
  if (!rows_.empty()) throw std::logic_error("columns must be declared before rows");
  columns_.push_back({std::move(name), decimals});
}

void ExperimentReport::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw std::logic_error("report " + id_ + ": row has " + std::to_string(row.size()) +
                           " cells, table has " + std::to_string(columns_.size()) + " columns");
  }
  rows_.push_back(std::move(row));
}

void ExperimentReport::add_note(std::string note) { notes_.push_back(std::move(note)); }

std::size_t ExperimentReport::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].name == name) return c;
  }
  throw std::out_of_range("report " + id_ + " has no column '" + name + "'");
}

const Cell& ExperimentReport::at(std::size_t row, const std::string& column) const {
  return rows_.at(row).at(column_index(column));
}

namespace {

std::string plain(const Cell& c) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return c.flag;
        else if constexpr (std::is_same_v<T, double>) return detail::format_double(v);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else return v;
      },
      c.value);
}

std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return detail::format_double(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  // Avoid "-0.000".
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string md_escape(std::string s) {
  for (std::size_t i = 0; (i = s.find('|', i)) != std::string::npos; i += 2) s.insert(i, 1, '\\');
  return s;
}

nlohmann::ordered_json json_value(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, double>) {
          if (std::isfinite(v)) return v;
          return detail::format_double(v);
        } else {
          return v;
        }
      },
      c.value);
}

}  // namespace

std::string ExperimentReport::to_csv() const {
  std::string out;
  out += "# experiment: " + id_ + "\n";
  out += "# input: " + input_ + "\n";
  if (!manifest_.empty()) out += "# manifest: " + manifest_ + "\n";
  for (const auto& col : columns_) out += detail::csv_quote(col.name) + ",";
  out += "replay\n";
  for (const auto& row : rows_) {
    std::string replayed;
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += detail::csv_quote(plain(row[c])) + ",";
      if (row[c].provenance == Provenance::Replay) {
        if (!replayed.empty()) replayed += ';';
        replayed += columns_[c].name;
      }
    }
    out += detail::csv_quote(replayed) + "\n";
  }
  return out;
}

std::string ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = id_;
  j["title"] = title_;
  j["input"] = input_;
  j["manifest"] = manifest_;
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& col : columns_) j["columns"].push_back(col.name);
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows_) {
    nlohmann::ordered_json r;
    nlohmann::ordered_json replayed = nlohmann::ordered_json::array();
    nlohmann::ordered_json flags = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      r[columns_[c].name] = json_value(row[c]);
      if (row[c].provenance == Provenance::Replay) replayed.push_back(columns_[c].name);
      if (!row[c].flag.empty()) flags[columns_[c].name] = row[c].flag;
    }
    r["replay"] = replayed;
    if (!flags.empty()) r["flags"] = flags;
    j["rows"].push_back(r);
  }
  j["notes"] = notes_;
  return j.dump(2) + "\n";
}

std::string ExperimentReport::to_markdown() const {
  std::string out = "## " + id_ + ": " + title_ + "\n\n";
  out += "Input: " + input_ + "\n\n";
  std::string header = "|", rule = "|";
  for (const auto& col : columns_) {
    header += " " + md_escape(col.name) + " |";
    rule += "---|";
  }
  out += header + "\n" + rule + "\n";
  bool any_replay = false;
  for (const auto& row : rows_) {
    out += "|";
    for (std::size_t c = 0; c < row.size(); ++c) {
      const Cell& cell = row[c];
      std::string s;
      if (const auto* d = std::get_if<double>(&cell.value)) s = fixed(*d, columns_[c].decimals);
      else if (cell.empty()) s = cell.flag.empty() ? "" : "*" + md_escape(cell.flag) + "*";
      else s = md_escape(plain(cell));
      if (cell.provenance == Provenance::Replay) {
        s += " †";
        any_replay = true;
      }
      out += " " + s + " |";
    }
    out += "\n";
  }
  if (any_replay) out += "\n† replayed from published values, not computed.\n";
  if (!notes_.empty()) {
    out += "\n";
    for (const auto& n : notes_) out += "- " + n + "\n";
  }
  if (!manifest_.empty()) out += "\nManifest: " + manifest_ + "\n";
  return out;
}

std::string ExperimentReport::render(EmitFormat f) const {
  switch (f) {
    case EmitFormat::Csv: return to_csv();
    case EmitFormat::Json: return to_json();
    case EmitFormat::Markdown: return to_markdown();
  }
  return {};
}

std::filesystem::path ExperimentReport::write(const std::filesystem::path& dir, EmitFormat f) const {
  const auto path = dir / (id_ + "." + extension(f));
  detail::write_file(path, render(f));
  return path;
}

}  // namespace hubscope
