#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "bdml/error.hpp"
#include "bdml/io/csv.hpp"

namespace bdml::io {

/// Flat `key = value` settings. `#` starts a comment; keys are
/// case-sensitive and use underscores or dashes interchangeably.
class ConfigMap {
 public:
  static std::string normalize(std::string key) {
    for (char& c : key) {
      if (c == '-') c = '_';
    }
    return key;
  }

  static ConfigMap parse(const std::string& text, const std::string& source) {
    ConfigMap m;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      const std::string key = normalize(detail::trim(t.substr(0, eq)));
      const std::string value = detail::trim(t.substr(eq + 1));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
      if (m.values_.count(key)) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      }
      m.values_[key] = value;
    }
    return m;
  }

  static ConfigMap load(const std::string& path) {
    std::string text;
    try {
      text = read_file(path);
    } catch (const DataError&) {
      throw ConfigError("cannot open config file '" + path + "'");
    }
    return parse(text, path);
  }

  void set(const std::string& key, const std::string& value) { values_[normalize(key)] = value; }
  bool has(const std::string& key) const { return values_.count(normalize(key)) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(normalize(key));
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key, "");
    try {
      return parse_number(v, "setting '" + key + "'");
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }

  std::uint64_t get_count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key, "");
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("setting '" + key + "': '" + v + "' is not a non-negative integer");
    }
    return out;
  }

  bool get_flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key, "");
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("setting '" + key + "': '" + v + "' is not a boolean");
  }

  /// Fails on any key outside `known`, which catches typos early.
  void require_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_) {
      if (!known.count(k)) throw ConfigError("unknown setting '" + k + "'");
    }
  }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace bdml::io
