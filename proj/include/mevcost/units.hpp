#pragma once

#include <cstdint>
#include <string>

namespace mevcost {

// Monetary units are carried as doubles in their native scale (Gwei, ETH,
// Wei, USD). Conversions are explicit; quantities here are statistical
// aggregates, not ledger balances, so 64-bit floats are sufficient.
inline constexpr double kGweiPerEth = 1e9;
inline constexpr double kWeiPerEth = 1e18;
inline constexpr double kWeiPerGwei = 1e9;

inline double gwei_to_eth(double gwei) { return gwei / kGweiPerEth; }
inline double wei_to_eth(double wei) { return wei / kWeiPerEth; }
inline double eth_to_gwei(double eth) { return eth * kGweiPerEth; }

// Days since the Unix epoch, UTC. Used as the canonical daily grouping key.
using UtcDay = std::int64_t;

UtcDay day_from_timestamp(std::int64_t utc_seconds);

// "YYYY-MM-DD" <-> days since epoch (proleptic Gregorian).
UtcDay parse_date(const std::string& yyyy_mm_dd);
std::string format_date(UtcDay day);

// Compact form used in per-day file names: "YYYYMMDD".
std::string format_date_compact(UtcDay day);

}  // namespace mevcost
