#pragma once

// Streaming delimited-text reader/writer. Delimiter (comma or tab) is
// auto-detected from the header line. Fields are exposed as string_views
// into an internal line buffer, valid until the next call to next_row().

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lbv/errors.hpp"

namespace lbv {

class DelimReader {
 public:
  explicit DelimReader(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  char delimiter() const { return delim_; }

  // Column index for an exact header name, or nullopt.
  std::optional<size_t> column(std::string_view name) const;

  // Advances to the next data row. Returns false at end of file.
  // Blank lines are skipped. Fields are split on the delimiter with no
  // quoting rules (the interchange formats never embed delimiters).
  bool next_row();

  const std::vector<std::string_view>& fields() const { return fields_; }
  size_t line_number() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::string line_;
  std::vector<std::string_view> fields_;
  std::vector<std::string> header_;
  char delim_ = ',';
  size_t line_no_ = 0;
};

class DelimWriter {
 public:
  DelimWriter(const std::string& path, char delim = ',');
  void write_row(const std::vector<std::string>& fields);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
  char delim_;
};

// Shortest round-trip decimal form (to_chars). Deterministic; reads back
// to the identical double.
std::string fmt_double(double v);
std::string fmt_double_fixed(double v, int precision);

std::optional<double> parse_double(std::string_view s);
std::optional<int64_t> parse_int(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace lbv
