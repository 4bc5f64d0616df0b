#pragma once

// Small CSV and number-formatting helpers shared by the loaders and the
// report writers. Internal to the library.

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hubscope::detail {

// Splits one CSV record. Handles double-quoted fields with "" escapes; does
// not support newlines inside quotes (none of our inputs need them).
std::vector<std::string> split_csv_line(std::string_view line);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_quote(std::string_view field);

// Reads all lines, stripping a trailing CR and a leading UTF-8 BOM.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Strict full-field parses; throw ValidationError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

std::string trim(std::string_view s);

}  // namespace hubscope::detail
