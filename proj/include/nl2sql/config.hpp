#pragma once

// Minimal TOML-style configuration: [section] headers, key = value lines,
// '#' comments, quoted or bare values. The key set is closed — anything
// unrecognized is rejected at load so typos cannot silently no-op.

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nl2sql/schema.hpp"

namespace nl2sql {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "schema.tables",       "schema.flat",
        "dataset.spider_train", "dataset.spider_dev",
        "dataset.custom",      "dataset.dbs",
        "backend.kind",        "backend.endpoint",
        "backend.predictions", "repair.enabled",
        "repair.threshold",    "repair.qualifiers",
        "prompt.schema",       "coverage.min",
        "evaluate.parallelism", "evaluate.timeout_ms",
        "evaluate.report",
    };
    return keys;
  }

  static Config parse(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::string section;
    auto bad = [&](const std::string& why) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
      ++lineno;
      std::string body = strip_comment(line);
      std::string trimmed = trim(body);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']') bad("unterminated section header");
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section.empty()) bad("empty section name");
        continue;
      }
      std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) bad("expected key = value");
      std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) bad("empty key");
      if (section.empty()) bad("key '" + key + "' outside any section");
      if (!value.empty() && value.front() == '"') {
        if (value.size() < 2 || value.back() != '"')
          bad("unterminated string value");
        value = value.substr(1, value.size() - 2);
      }
      std::string full = section + "." + key;
      if (!known_keys().count(full)) bad("unknown key '" + full + "'");
      if (config.values_.count(full)) bad("duplicate key '" + full + "'");
      config.values_[full] = value;
    }
    return config;
  }

  static Config load(const std::string& path) {
    return parse(detail::read_file(path));
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback = "") const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      int value = std::stoi(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(it->second);
      return value;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + it->second +
                        "' is not an integer");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = detail::ascii_lower(it->second);
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ConfigError("config key '" + key + "': '" + it->second +
                      "' is not a boolean");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
  }

  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace nl2sql
