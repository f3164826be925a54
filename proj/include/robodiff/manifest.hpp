#pragma once

#include <map>
#include <string>

#include <json.hpp>

namespace robodiff {

inline constexpr const char* kToolVersion = "1.0.0";

// Reproducibility record written (atomically) into every command's output
// directory before any results. The output directory itself is stored as the
// placeholder "<out>" so reruns into a different directory produce
// byte-identical manifests.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> args;  // resolved flag/config snapshot
  std::string checkpoint_hash;              // hash of the input checkpoint, if any
  nlohmann::json conditions;                // per-frame conditions for sample runs
  std::string tool_version = kToolVersion;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  void write_atomic(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

}  // namespace robodiff
