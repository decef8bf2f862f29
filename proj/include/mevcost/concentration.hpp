#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mevcost/types.hpp"

namespace mevcost::concentration {

// Key used for blocks without a labeled MEV builder.
inline const std::string kNonMevBucket = "(non-mev)";

struct BuilderShare {
  std::int64_t block_count = 0;
  double block_share = 0;  // of all blocks in the window
  double mev_eth = 0;      // summed MEV payments
};

// Blocks per builder over [from_day, to_day]; a block counts as MEV-built
// when its builder_addr carries the MEV_BUILDER label. Shares sum to 1
// including the non-MEV bucket.
std::map<std::string, BuilderShare> builder_shares(
    const std::vector<BlockMeta>& blocks, const LabelRegistry& registry,
    UtcDay from_day, UtcDay to_day);

// Herfindahl index on the 0..10,000 point scale: sum of (100 * share)^2.
double herfindahl(const std::vector<double>& shares);

// Both HHI variants (the source text is ambiguous about the base):
// all_blocks treats the non-MEV bucket as one participant; mev_only
// renormalizes over MEV-built blocks.
struct HhiReport {
  double all_blocks = 0;
  double mev_only = 0;
};
HhiReport herfindahl_report(const std::map<std::string, BuilderShare>& shares);

// Fraction of blocks in the window completed by a labeled MEV builder.
double mev_block_share(const std::vector<BlockMeta>& blocks,
                       const LabelRegistry& registry, UtcDay from_day, UtcDay to_day);

struct DailyRevenue {
  UtcDay day = 0;
  double net_gas_eth = 0;       // gas_used * (effective - base fee), Gwei -> ETH
  double mev_payments_eth = 0;
  std::int64_t block_count = 0;
};

struct RevenueSeries {
  std::vector<DailyRevenue> days;  // ascending, excluded dates omitted
  std::vector<UtcDay> excluded;
};

RevenueSeries validator_revenue(const std::vector<BlockMeta>& blocks,
                                const std::vector<TxRecord>& txs, UtcDay from_day,
                                UtcDay to_day, const std::set<UtcDay>& exclusions);

}  // namespace mevcost::concentration
