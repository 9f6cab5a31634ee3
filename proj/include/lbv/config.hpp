#pragma once

// Flat key-value config with optional [section] headers. '#' starts a
// comment. Values keep everything after the first '='.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lbv {

class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  // Keys are addressed as "section.key"; keys before any section header
  // live in the "" section and are addressed bare.
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Comma-separated list, items trimmed, empty items dropped.
  std::vector<std::string> get_list(const std::string& key) const;

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& source_text() const { return source_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

std::vector<std::string> split_list(const std::string& s);

}  // namespace lbv
