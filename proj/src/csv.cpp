#include "lbv/csv.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace lbv {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string fmt_double(double v) {
  std::array<char, 40> buf;
  auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

std::string fmt_double_fixed(double v, int precision) {
  if (!std::isfinite(v)) return fmt_double(v);
  std::array<char, 64> buf;
  int n = std::snprintf(buf.data(), buf.size(), "%.*f", precision, v);
  return std::string(buf.data(), static_cast<size_t>(n));
}

DelimReader::DelimReader(const std::string& path) : path_(path), in_(path) {
  if (!in_) throw IoError("cannot open file: " + path);
  if (!std::getline(in_, line_)) throw ValidationError("empty file, header row required: " + path);
  ++line_no_;
  // Tab wins if present in the header; otherwise comma.
  delim_ = line_.find('\t') != std::string::npos ? '\t' : ',';
  std::string_view rest(line_);
  while (true) {
    size_t pos = rest.find(delim_);
    std::string_view f = pos == std::string_view::npos ? rest : rest.substr(0, pos);
    header_.emplace_back(trim(f));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
}

std::optional<size_t> DelimReader::column(std::string_view name) const {
  for (size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  return std::nullopt;
}

bool DelimReader::next_row() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (trim(line_).empty()) continue;
    fields_.clear();
    std::string_view rest(line_);
    while (true) {
      size_t pos = rest.find(delim_);
      if (pos == std::string_view::npos) {
        fields_.push_back(rest);
        break;
      }
      fields_.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    return true;
  }
  return false;
}

DelimWriter::DelimWriter(const std::string& path, char delim) : path_(path), out_(path), delim_(delim) {
  if (!out_) throw IoError("cannot open file for writing: " + path);
}

void DelimWriter::write_row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.put(delim_);
    out_ << fields[i];
  }
  out_.put('\n');
  if (!out_) throw IoError("write failed: " + path_);
}

void DelimWriter::close() {
  out_.close();
  if (out_.fail()) throw IoError("close failed: " + path_);
}

}  // namespace lbv
