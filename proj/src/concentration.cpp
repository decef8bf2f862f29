#include "mevcost/concentration.hpp"

#include <algorithm>
#include <unordered_map>

#include "mevcost/units.hpp"

namespace mevcost::concentration {

namespace {
bool in_window(std::int64_t timestamp, UtcDay from_day, UtcDay to_day) {
  const UtcDay d = day_from_timestamp(timestamp);
  return d >= from_day && d <= to_day;
}

bool is_mev_built(const BlockMeta& block, const LabelRegistry& registry) {
  return block.builder_addr &&
         registry.has_label(*block.builder_addr, AddressLabel::kMevBuilder);
}
}  // namespace

std::map<std::string, BuilderShare> builder_shares(
    const std::vector<BlockMeta>& blocks, const LabelRegistry& registry,
    UtcDay from_day, UtcDay to_day) {
  std::map<std::string, BuilderShare> shares;
  std::int64_t total = 0;
  for (const auto& block : blocks) {
    if (!in_window(block.timestamp, from_day, to_day)) continue;
    ++total;
    const std::string key =
        is_mev_built(block, registry) ? *block.builder_addr : kNonMevBucket;
    auto& entry = shares[key];
    ++entry.block_count;
    entry.mev_eth += block.mev_payment;
  }
  for (auto& [key, entry] : shares) {
    entry.block_share =
        total > 0 ? static_cast<double>(entry.block_count) / static_cast<double>(total)
                  : 0.0;
  }
  return shares;
}

double herfindahl(const std::vector<double>& shares) {
  double hhi = 0;
  for (double s : shares) hhi += (100.0 * s) * (100.0 * s);
  return hhi;
}

HhiReport herfindahl_report(const std::map<std::string, BuilderShare>& shares) {
  HhiReport report;
  std::vector<double> all, mev;
  std::int64_t mev_blocks = 0;
  for (const auto& [key, entry] : shares) {
    all.push_back(entry.block_share);
    if (key != kNonMevBucket) mev_blocks += entry.block_count;
  }
  for (const auto& [key, entry] : shares) {
    if (key == kNonMevBucket || mev_blocks == 0) continue;
    mev.push_back(static_cast<double>(entry.block_count) /
                  static_cast<double>(mev_blocks));
  }
  report.all_blocks = herfindahl(all);
  report.mev_only = herfindahl(mev);
  return report;
}

double mev_block_share(const std::vector<BlockMeta>& blocks,
                       const LabelRegistry& registry, UtcDay from_day, UtcDay to_day) {
  std::int64_t total = 0, mev = 0;
  for (const auto& block : blocks) {
    if (!in_window(block.timestamp, from_day, to_day)) continue;
    ++total;
    if (is_mev_built(block, registry)) ++mev;
  }
  return total > 0 ? static_cast<double>(mev) / static_cast<double>(total) : 0.0;
}

RevenueSeries validator_revenue(const std::vector<BlockMeta>& blocks,
                                const std::vector<TxRecord>& txs, UtcDay from_day,
                                UtcDay to_day, const std::set<UtcDay>& exclusions) {
  std::unordered_map<std::int64_t, const BlockMeta*> block_meta;
  block_meta.reserve(blocks.size());
  for (const auto& b : blocks) block_meta[b.block_number] = &b;

  std::map<UtcDay, DailyRevenue> by_day;
  std::set<UtcDay> excluded_hit;
  for (const auto& block : blocks) {
    const UtcDay d = day_from_timestamp(block.timestamp);
    if (d < from_day || d > to_day) continue;
    if (exclusions.count(d)) {
      excluded_hit.insert(d);
      continue;
    }
    auto& day = by_day[d];
    day.day = d;
    ++day.block_count;
    day.mev_payments_eth += block.mev_payment;
  }
  for (const auto& tx : txs) {
    auto it = block_meta.find(tx.block_number);
    if (it == block_meta.end()) continue;
    const BlockMeta& block = *it->second;
    const UtcDay d = day_from_timestamp(block.timestamp);
    if (d < from_day || d > to_day || exclusions.count(d)) continue;
    const double tip_gwei = tx.gas_used * (tx.effective_gas_price - block.base_fee_per_gas);
    by_day[d].net_gas_eth += gwei_to_eth(tip_gwei);
  }

  RevenueSeries series;
  for (auto& [day, rev] : by_day) {
    rev.day = day;
    series.days.push_back(rev);
  }
  series.excluded.assign(excluded_hit.begin(), excluded_hit.end());
  return series;
}

}  // namespace mevcost::concentration
