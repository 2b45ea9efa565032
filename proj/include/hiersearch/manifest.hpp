#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

namespace hiersearch {

inline constexpr const char* kToolVersion = "hiersearch 0.1.0";

// Provenance record written next to every artifact. The hash covers
// everything except the timestamp, so reruns with identical inputs produce
// identical artifact fingerprints.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> input_hashes;
  std::string tool_version = kToolVersion;
  uint64_t seed = 0;
  std::string timestamp;  // ISO 8601 UTC; excluded from hash()

  nlohmann::json to_json() const;
  std::string hash() const;
  void write(const std::string& path) const;
};

std::string iso8601_utc_now();

// Flat key/value config files for the CLI: JSON always, plus a TOML subset
// (scalar and numeric-array values, no tables) chosen by .toml extension.
nlohmann::json load_config_file(const std::string& path);

}  // namespace hiersearch
