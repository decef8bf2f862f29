#pragma once

#include <set>
#include <string>
#include <vector>

#include "mevcost/types.hpp"

namespace mevcost {

// Offline-file sources for one run. Paths may be empty when a subcommand
// does not need that source; loaders themselves require an existing file.
struct IngestConfig {
  std::string transactions_path;
  std::string blocks_path;
  std::string mempool_path;
  std::string labels_path;
  std::string sandwiches_path;
  std::string prices_path;
  UtcDay from_day = 0;
  UtcDay to_day = 0;
  std::set<UtcDay> exclusion_dates;
};

// Loaders skip (and count) rows that fail type parsing or violate record
// invariants; structural problems (missing column, unreadable file) throw.
template <typename T>
struct LoadResult {
  std::vector<T> records;
  std::size_t rows_read = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// CSV with header tx_hash,block_number,block_index,from_addr,to_addr,
// max_fee_per_gas_gwei,max_priority_fee_per_gas_gwei,effective_gas_price_gwei,
// gas_used,value_wei,block_timestamp. Output sorted by (block_number,
// block_index). Empty to_addr means contract creation.
LoadResult<TxRecord> load_transactions(const std::string& path);

// CSV with header block_number,timestamp,tx_count,builder_addr,
// base_fee_per_gas_gwei,mev_payment_eth. Empty builder_addr = not MEV-built.
LoadResult<BlockMeta> load_blocks(const std::string& path);

// Line-delimited JSON objects {tx_hash, first_seen_ms, region}, deduplicated
// to the earliest first_seen per hash across regions.
LoadResult<MempoolObs> load_mempool(const std::string& path);

// JSON object mapping address -> list of label names; duplicate addresses
// merge label sets, unknown label names are skipped with a warning.
struct LabelLoadResult {
  LabelRegistry registry;
  std::size_t rows_read = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};
LabelLoadResult load_labels(const std::string& path);

// CSV block_number,front_hash,victim_hash,back_hash,cost_usd,profit_usd.
// Rows whose three hashes are not distinct are rejected and counted.
LoadResult<SandwichRecord> load_sandwiches(const std::string& path);

// CSV date,avg_gas_price_gwei,eth_close_usd. Duplicate dates: last row wins
// with a warning.
struct PriceLoadResult {
  PriceTable table;
  std::size_t rows_read = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};
PriceLoadResult load_prices(const std::string& path);

}  // namespace mevcost
