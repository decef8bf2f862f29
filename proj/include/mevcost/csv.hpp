#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mevcost::csv {

// Header-indexed reader for plain comma-separated files (no quoting; the
// upstream exports never quote). Rows shorter than the header are padded
// with empty fields so column access stays total.
class Reader {
 public:
  // Throws std::runtime_error when the file cannot be opened or is empty.
  explicit Reader(const std::string& path);

  // Column index for `name`; throws std::runtime_error (configuration
  // error) when the header lacks it.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;

  // Reads the next data row into `out` (cleared first). False at EOF.
  bool next(std::vector<std::string>& out);

  std::size_t row_number() const { return row_number_; }
  const std::vector<std::string>& header() const { return header_; }

 private:
  std::ifstream in_;
  std::string path_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t row_number_ = 0;
};

void split_line(const std::string& line, std::vector<std::string>& out);

// Strict numeric parsers: the whole field must parse, otherwise nullopt.
std::optional<double> parse_double(const std::string& s);
std::optional<std::int64_t> parse_int(const std::string& s);

// Fixed-precision decimal formatting. All emitted report numbers go through
// here so golden-file comparisons are byte-stable.
std::string fixed(double value, int decimals);

// Writer with one formatting call per cell; rows end with '\n' only.
class Writer {
 public:
  Writer(const std::string& path, const std::vector<std::string>& header);
  void comment(const std::string& text);  // "# ..." line
  void row(const std::vector<std::string>& cells);
  std::size_t rows_written() const { return rows_; }
  void close();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

}  // namespace mevcost::csv
