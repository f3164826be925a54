#include "robodiff/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace robodiff {

json RunManifest::to_json() const {
  json j;
  j["tool"] = "robodiff";
  j["version"] = tool_version;
  j["command"] = command;
  j["args"] = args;
  if (!checkpoint_hash.empty()) j["checkpoint_hash"] = checkpoint_hash;
  if (!conditions.is_null()) j["conditions"] = conditions;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.tool_version = j.at("version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.args = j.at("args").get<std::map<std::string, std::string>>();
    if (j.contains("checkpoint_hash")) m.checkpoint_hash = j["checkpoint_hash"].get<std::string>();
    if (j.contains("conditions")) m.conditions = j["conditions"];
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void RunManifest::write_atomic(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest " + tmp);
    out << to_json().dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for manifest " + tmp);
  }
  fs::rename(tmp, path);
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace robodiff
