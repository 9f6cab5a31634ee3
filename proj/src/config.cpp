#include "lbv/config.hpp"

#include <fstream>
#include <sstream>

#include "lbv/csv.hpp"
#include "lbv/errors.hpp"

namespace lbv {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t pos = s.find(',', start);
    std::string_view item = pos == std::string::npos
                                ? std::string_view(s).substr(start)
                                : std::string_view(s).substr(start, pos - start);
    item = trim(item);
    if (!item.empty()) out.emplace_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  cfg.source_ = text;
  std::istringstream in(text);
  std::string line;
  std::string section;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ValidationError("config line " + std::to_string(line_no) + ": malformed section header");
      section = std::string(trim(s.substr(1, s.size() - 2)));
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key(trim(s.substr(0, eq)));
    std::string value(trim(s.substr(eq + 1)));
    if (key.empty())
      throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    cfg.values_[full] = value;
  }
  return cfg;
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

std::string Config::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw ValidationError("config missing required key: " + key);
  return *v;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto d = parse_double(*v);
  if (!d) throw ValidationError("config key " + key + ": not a number: " + *v);
  return *d;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto d = parse_int(*v);
  if (!d) throw ValidationError("config key " + key + ": not an integer: " + *v);
  return *d;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ValidationError("config key " + key + ": not a boolean: " + *v);
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  auto v = get(key);
  if (!v) return {};
  return split_list(*v);
}

}  // namespace lbv
