#include "mevcost/csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <stdexcept>

namespace mevcost::csv {

void split_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

Reader::Reader(const std::string& path) : in_(path), path_(path) {
  if (!in_) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in_, line)) throw std::runtime_error("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  split_line(line, header_);
  for (std::size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = i;
}

std::size_t Reader::column(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::runtime_error("missing required column '" + name + "' in " + path_);
  }
  return it->second;
}

bool Reader::has_column(const std::string& name) const {
  return index_.count(name) > 0;
}

bool Reader::next(std::vector<std::string>& out) {
  std::string line;
  if (!std::getline(in_, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++row_number_;
  split_line(line, out);
  while (out.size() < header_.size()) out.emplace_back();
  return true;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return static_cast<std::int64_t>(v);
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  // Normalize the IEEE negative zero so output never depends on sign bits.
  if (buf[0] == '-') {
    bool all_zero = true;
    for (const char* p = buf + 1; *p; ++p) {
      if (*p != '0' && *p != '.') {
        all_zero = false;
        break;
      }
    }
    if (all_zero) return buf + 1;
  }
  return buf;
}

Writer::Writer(const std::string& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open file for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void Writer::comment(const std::string& text) { out_ << "# " << text << '\n'; }

void Writer::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw std::logic_error("csv row width mismatch");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  ++rows_;
}

void Writer::close() { out_.close(); }

}  // namespace mevcost::csv
