#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mevcost/units.hpp"

namespace mevcost {

// Hashes and addresses are normalized lowercase hex strings ("0x..."-prefixed
// input accepted, prefix stripped). Lowercase keeps a single canonical join
// key across sources that use mixed-case checksums.
using TxHash = std::string;
using Address = std::string;

// Throws std::invalid_argument unless `hex` is (optionally 0x-prefixed) hex
// of exactly `nibbles` digits. Returns the lowercase unprefixed form.
std::string normalize_hex(const std::string& hex, std::size_t nibbles);
inline Address normalize_address(const std::string& a) { return normalize_hex(a, 40); }
inline TxHash normalize_hash(const std::string& h) { return normalize_hex(h, 64); }

// One finalized transaction. Fee fields in Gwei per gas unit, value in Wei.
struct TxRecord {
  TxHash tx_hash;
  std::int64_t block_number = 0;
  std::int64_t block_index = 0;  // 0-based position within the block
  Address from_addr;
  std::optional<Address> to_addr;  // absent for contract creation
  double max_fee_per_gas = 0;
  double max_priority_fee_per_gas = 0;
  double effective_gas_price = 0;
  double gas_used = 0;
  double value_wei = 0;
  std::int64_t block_timestamp = 0;  // UTC seconds

  // gas_used * effective_gas_price, converted to ETH.
  double gas_fee_eth() const { return gwei_to_eth(gas_used * effective_gas_price); }
};

struct BlockMeta {
  std::int64_t block_number = 0;
  std::int64_t timestamp = 0;  // UTC seconds
  std::int64_t tx_count = 0;
  std::optional<Address> builder_addr;  // absent if not MEV-built
  double base_fee_per_gas = 0;  // Gwei
  double mev_payment = 0;       // ETH paid builder -> validator, 0 if none
};

// First public-mempool sighting of a transaction hash.
struct MempoolObs {
  TxHash tx_hash;
  std::int64_t first_seen = 0;  // UTC milliseconds
  std::string region;
};

enum class AddressLabel { kDex, kCex, kMevBuilder };

std::string label_name(AddressLabel label);
std::optional<AddressLabel> parse_label(const std::string& name);

// Address -> label set. Immutable after loading; lookups of unknown
// addresses yield the empty set.
class LabelRegistry {
 public:
  using LabelSet = std::set<AddressLabel>;

  // Merges `labels` into the entry for `addr` (normalizes the address).
  void add(const std::string& addr, const LabelSet& labels);

  // Label set for `addr`; empty set if unknown.
  // Throws std::invalid_argument for malformed addresses.
  LabelSet lookup(const std::string& addr) const;

  bool has_label(const std::string& addr, AddressLabel label) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Address, LabelSet> entries_;
};

inline LabelRegistry::LabelSet classify_address(const LabelRegistry& registry,
                                                const std::string& addr) {
  return registry.lookup(addr);
}

struct DailyPrice {
  double avg_gas_price_gwei = 0;
  double eth_close_usd = 0;
};

// UTC date -> (average gas price, ETH close). Both values must be positive.
class PriceTable {
 public:
  // Returns true if the date was already present (last-wins overwrite).
  bool insert(UtcDay day, DailyPrice price);

  // Throws std::out_of_range when the date is absent.
  const DailyPrice& at(UtcDay day) const;

  bool contains(UtcDay day) const { return rows_.count(day) > 0; }
  std::size_t size() const { return rows_.size(); }
  const std::map<UtcDay, DailyPrice>& rows() const { return rows_; }

 private:
  std::map<UtcDay, DailyPrice> rows_;
};

// Front/victim/back transaction triple as delivered by the sandwich vendor
// feed (or the built-in heuristic detector).
struct SandwichRecord {
  std::int64_t block_number = 0;
  TxHash front_hash;
  TxHash victim_hash;
  TxHash back_hash;
  double cost_usd = 0;    // attack volume / cost
  double profit_usd = 0;
};

}  // namespace mevcost
