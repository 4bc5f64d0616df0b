#include "hubscope_cli/manifest.hpp"

#include <cstdio>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "hubscope/error.hpp"

namespace hubscope::cli {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::pair<std::string, std::string>> artifact_versions() {
  return {
      {"hubscope", HUBSCOPE_VERSION},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
      {"compiler", __VERSION__},
  };
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["config"] = config;
  j["inputs"] = inputs;
  j["seed"] = seed;
  j["threads"] = threads;
  nlohmann::ordered_json v = nlohmann::ordered_json::object();
  for (const auto& [name, ver] : artifact_versions()) v[name] = ver;
  j["versions"] = v;
  nlohmann::ordered_json st = nlohmann::ordered_json::array();
  for (const auto& [name, ms] : stage_ms) st.push_back({{"stage", name}, {"ms", ms}});
  j["stage_ms"] = st;
  j["reports"] = reports;
  return j.dump(2) + "\n";
}

std::filesystem::path RunManifest::write(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / file_name();
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ValidationError("cannot write " + path.string());
  const std::string s = to_json();
  std::fwrite(s.data(), 1, s.size(), f);
  std::fclose(f);
  return path;
}

}  // namespace hubscope::cli
