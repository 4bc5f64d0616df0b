#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hubscope::cli {

// One manifest per CLI invocation; every report it emits names it.
struct RunManifest {
  std::string command;
  std::string config;       // canonical option string the hash is taken over
  std::string config_hash;  // 16 hex digits, FNV-1a 64
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // recorded, not hashed
  std::vector<std::pair<std::string, double>> stage_ms;
  std::vector<std::string> reports;

  std::string file_name() const { return "manifest-" + config_hash + ".json"; }
  std::string to_json() const;
  std::filesystem::path write(const std::filesystem::path& dir) const;
};

std::string fnv1a_hex(const std::string& s);

// Library and toolchain versions, in a fixed order.
std::vector<std::pair<std::string, std::string>> artifact_versions();

}  // namespace hubscope::cli
