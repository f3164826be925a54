#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace robodiff {

// Plain `key = value` text, one pair per line; '#' starts a comment. Used for
// train configs and dataset metadata. Keys are kept sorted so serialization
// is deterministic.
class KeyValues {
 public:
  static KeyValues parse_text(const std::string& text, const std::string& origin = "<string>") {
    KeyValues out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
      out.kv_[key] = val;
    }
    return out;
  }

  static KeyValues parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::runtime_error("missing config key: " + key);
    return it->second;
  }
  std::string get_str(const std::string& key, const std::string& def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
  }

  int get_int(const std::string& key) const { return to_int(key, get_str(key)); }
  int get_int(const std::string& key, int def) const {
    return has(key) ? get_int(key) : def;
  }

  double get_real(const std::string& key) const { return to_real(key, get_str(key)); }
  double get_real(const std::string& key, double def) const {
    return has(key) ? get_real(key) : def;
  }

  bool get_bool(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string v = get_str(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::runtime_error("config key " + key + ": not a boolean: " + v);
  }

  void set(const std::string& key, const std::string& val) { kv_[key] = val; }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }
  static int to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      int x = std::stoi(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + key + ": not an integer: " + v);
    }
  }
  static double to_real(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + key + ": not a number: " + v);
    }
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace robodiff
