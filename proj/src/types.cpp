#include "mevcost/types.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace mevcost {

UtcDay day_from_timestamp(std::int64_t utc_seconds) {
  // Floor division so pre-1970 timestamps land on the correct day.
  std::int64_t d = utc_seconds / 86400;
  if (utc_seconds % 86400 < 0) --d;
  return d;
}

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yr + (m <= 2));
}

}  // namespace

UtcDay parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) != 3 || m < 1 || m > 12 ||
      d < 1 || d > 31) {
    throw std::invalid_argument("bad date (expected YYYY-MM-DD): " + s);
  }
  return days_from_civil(y, m, d);
}

std::string format_date(UtcDay day) {
  int y;
  unsigned m, d;
  civil_from_days(day, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::string format_date_compact(UtcDay day) {
  int y;
  unsigned m, d;
  civil_from_days(day, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u", y, m, d);
  return buf;
}

std::string normalize_hex(const std::string& hex, std::size_t nibbles) {
  std::size_t start = 0;
  if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) start = 2;
  if (hex.size() - start != nibbles) {
    throw std::invalid_argument("bad hex identifier (expected " +
                                std::to_string(nibbles) + " digits): " + hex);
  }
  std::string out;
  out.reserve(nibbles);
  for (std::size_t i = start; i < hex.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(hex[i]);
    if (!std::isxdigit(c)) throw std::invalid_argument("bad hex identifier: " + hex);
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string label_name(AddressLabel label) {
  switch (label) {
    case AddressLabel::kDex: return "DEX";
    case AddressLabel::kCex: return "CEX";
    case AddressLabel::kMevBuilder: return "MEV_BUILDER";
  }
  return "?";
}

std::optional<AddressLabel> parse_label(const std::string& name) {
  if (name == "DEX") return AddressLabel::kDex;
  if (name == "CEX") return AddressLabel::kCex;
  if (name == "MEV_BUILDER") return AddressLabel::kMevBuilder;
  return std::nullopt;
}

void LabelRegistry::add(const std::string& addr, const LabelSet& labels) {
  auto& set = entries_[normalize_address(addr)];
  set.insert(labels.begin(), labels.end());
}

LabelRegistry::LabelSet LabelRegistry::lookup(const std::string& addr) const {
  auto it = entries_.find(normalize_address(addr));
  return it == entries_.end() ? LabelSet{} : it->second;
}

bool LabelRegistry::has_label(const std::string& addr, AddressLabel label) const {
  // Expects an already-normalized address (hot path for design-row building).
  auto it = entries_.find(addr);
  return it != entries_.end() && it->second.count(label) > 0;
}

bool PriceTable::insert(UtcDay day, DailyPrice price) {
  if (!(price.avg_gas_price_gwei > 0) || !(price.eth_close_usd > 0)) {
    throw std::invalid_argument("price table values must be positive for " +
                                format_date(day));
  }
  bool existed = rows_.count(day) > 0;
  rows_[day] = price;
  return existed;
}

const DailyPrice& PriceTable::at(UtcDay day) const {
  auto it = rows_.find(day);
  if (it == rows_.end()) {
    throw std::out_of_range("no price row for " + format_date(day));
  }
  return it->second;
}

}  // namespace mevcost
