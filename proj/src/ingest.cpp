#include "mevcost/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "mevcost/csv.hpp"

namespace mevcost {

namespace {
using nlohmann::json;
}

LoadResult<TxRecord> load_transactions(const std::string& path) {
  csv::Reader reader(path);
  const std::size_t c_hash = reader.column("tx_hash");
  const std::size_t c_block = reader.column("block_number");
  const std::size_t c_index = reader.column("block_index");
  const std::size_t c_from = reader.column("from_addr");
  const std::size_t c_to = reader.column("to_addr");
  const std::size_t c_maxfee = reader.column("max_fee_per_gas_gwei");
  const std::size_t c_prio = reader.column("max_priority_fee_per_gas_gwei");
  const std::size_t c_eff = reader.column("effective_gas_price_gwei");
  const std::size_t c_gas = reader.column("gas_used");
  const std::size_t c_value = reader.column("value_wei");
  const std::size_t c_ts = reader.column("block_timestamp");

  LoadResult<TxRecord> result;
  std::vector<std::string> cells;
  while (reader.next(cells)) {
    ++result.rows_read;
    TxRecord tx;
    auto block = csv::parse_int(cells[c_block]);
    auto index = csv::parse_int(cells[c_index]);
    auto maxfee = csv::parse_double(cells[c_maxfee]);
    auto prio = csv::parse_double(cells[c_prio]);
    auto eff = csv::parse_double(cells[c_eff]);
    auto gas = csv::parse_double(cells[c_gas]);
    auto value = csv::parse_double(cells[c_value]);
    auto ts = csv::parse_int(cells[c_ts]);
    if (!block || !index || !maxfee || !prio || !eff || !gas || !value || !ts) {
      ++result.skipped;
      continue;
    }
    try {
      tx.tx_hash = normalize_hash(cells[c_hash]);
      tx.from_addr = normalize_address(cells[c_from]);
      if (!cells[c_to].empty()) tx.to_addr = normalize_address(cells[c_to]);
    } catch (const std::invalid_argument&) {
      ++result.skipped;
      continue;
    }
    tx.block_number = *block;
    tx.block_index = *index;
    tx.max_fee_per_gas = *maxfee;
    tx.max_priority_fee_per_gas = *prio;
    tx.effective_gas_price = *eff;
    tx.gas_used = *gas;
    tx.value_wei = *value;
    tx.block_timestamp = *ts;

    bool invariant_ok = tx.block_index >= 0 && tx.max_fee_per_gas >= 0 &&
                        tx.max_priority_fee_per_gas >= 0 &&
                        tx.effective_gas_price >= 0 && tx.gas_used >= 0 &&
                        tx.value_wei >= 0 &&
                        tx.max_priority_fee_per_gas <= tx.max_fee_per_gas;
    if (!invariant_ok) {
      ++result.skipped;
      continue;
    }
    result.records.push_back(std::move(tx));
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const TxRecord& a, const TxRecord& b) {
                     return std::tie(a.block_number, a.block_index) <
                            std::tie(b.block_number, b.block_index);
                   });
  return result;
}

LoadResult<BlockMeta> load_blocks(const std::string& path) {
  csv::Reader reader(path);
  const std::size_t c_block = reader.column("block_number");
  const std::size_t c_ts = reader.column("timestamp");
  const std::size_t c_count = reader.column("tx_count");
  const std::size_t c_builder = reader.column("builder_addr");
  const std::size_t c_base = reader.column("base_fee_per_gas_gwei");
  const std::size_t c_mev = reader.column("mev_payment_eth");

  LoadResult<BlockMeta> result;
  std::vector<std::string> cells;
  while (reader.next(cells)) {
    ++result.rows_read;
    BlockMeta meta;
    auto block = csv::parse_int(cells[c_block]);
    auto ts = csv::parse_int(cells[c_ts]);
    auto count = csv::parse_int(cells[c_count]);
    auto base = csv::parse_double(cells[c_base]);
    auto mev = csv::parse_double(cells[c_mev]);
    if (!block || !ts || !count || !base || !mev) {
      ++result.skipped;
      continue;
    }
    try {
      if (!cells[c_builder].empty())
        meta.builder_addr = normalize_address(cells[c_builder]);
    } catch (const std::invalid_argument&) {
      ++result.skipped;
      continue;
    }
    meta.block_number = *block;
    meta.timestamp = *ts;
    meta.tx_count = *count;
    meta.base_fee_per_gas = *base;
    meta.mev_payment = *mev;
    if (meta.tx_count < 0 || meta.base_fee_per_gas < 0 || meta.mev_payment < 0) {
      ++result.skipped;
      continue;
    }
    result.records.push_back(std::move(meta));
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const BlockMeta& a, const BlockMeta& b) {
                     return a.block_number < b.block_number;
                   });
  return result;
}

LoadResult<MempoolObs> load_mempool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  LoadResult<MempoolObs> result;
  std::unordered_map<TxHash, MempoolObs> earliest;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++result.rows_read;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("tx_hash") ||
        !obj.contains("first_seen_ms")) {
      ++result.skipped;
      continue;
    }
    MempoolObs obs;
    try {
      obs.tx_hash = normalize_hash(obj.at("tx_hash").get<std::string>());
      obs.first_seen = obj.at("first_seen_ms").get<std::int64_t>();
      obs.region = obj.value("region", std::string{});
    } catch (const std::exception&) {
      ++result.skipped;
      continue;
    }
    if (obs.first_seen <= 0) {
      ++result.skipped;
      continue;
    }
    auto [it, inserted] = earliest.emplace(obs.tx_hash, obs);
    if (!inserted && obs.first_seen < it->second.first_seen) it->second = obs;
  }
  result.records.reserve(earliest.size());
  for (auto& [hash, obs] : earliest) result.records.push_back(std::move(obs));
  std::sort(result.records.begin(), result.records.end(),
            [](const MempoolObs& a, const MempoolObs& b) {
              return std::tie(a.first_seen, a.tx_hash) <
                     std::tie(b.first_seen, b.tx_hash);
            });
  return result;
}

LabelLoadResult load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw std::runtime_error("label file is not a JSON object: " + path);
  }
  LabelLoadResult result;
  for (auto& [addr, names] : doc.items()) {
    ++result.rows_read;
    if (!names.is_array()) {
      ++result.skipped;
      result.warnings.push_back("label entry is not a list: " + addr);
      continue;
    }
    LabelRegistry::LabelSet labels;
    for (const auto& name : names) {
      if (!name.is_string()) continue;
      auto label = parse_label(name.get<std::string>());
      if (label) {
        labels.insert(*label);
      } else {
        result.warnings.push_back("unknown label '" + name.get<std::string>() +
                                  "' for " + addr);
      }
    }
    try {
      result.registry.add(addr, labels);
    } catch (const std::invalid_argument&) {
      ++result.skipped;
      result.warnings.push_back("malformed address in label file: " + addr);
    }
  }
  return result;
}

LoadResult<SandwichRecord> load_sandwiches(const std::string& path) {
  csv::Reader reader(path);
  const std::size_t c_block = reader.column("block_number");
  const std::size_t c_front = reader.column("front_hash");
  const std::size_t c_victim = reader.column("victim_hash");
  const std::size_t c_back = reader.column("back_hash");
  const std::size_t c_cost = reader.column("cost_usd");
  const std::size_t c_profit = reader.column("profit_usd");

  LoadResult<SandwichRecord> result;
  std::vector<std::string> cells;
  while (reader.next(cells)) {
    ++result.rows_read;
    auto block = csv::parse_int(cells[c_block]);
    auto cost = csv::parse_double(cells[c_cost]);
    auto profit = csv::parse_double(cells[c_profit]);
    if (!block || !cost || !profit) {
      ++result.skipped;
      continue;
    }
    SandwichRecord rec;
    try {
      rec.front_hash = normalize_hash(cells[c_front]);
      rec.victim_hash = normalize_hash(cells[c_victim]);
      rec.back_hash = normalize_hash(cells[c_back]);
    } catch (const std::invalid_argument&) {
      ++result.skipped;
      continue;
    }
    rec.block_number = *block;
    rec.cost_usd = *cost;
    rec.profit_usd = *profit;
    bool distinct = rec.front_hash != rec.victim_hash &&
                    rec.front_hash != rec.back_hash &&
                    rec.victim_hash != rec.back_hash;
    if (!distinct) {
      ++result.skipped;
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

PriceLoadResult load_prices(const std::string& path) {
  csv::Reader reader(path);
  const std::size_t c_date = reader.column("date");
  const std::size_t c_gas = reader.column("avg_gas_price_gwei");
  const std::size_t c_usd = reader.column("eth_close_usd");

  PriceLoadResult result;
  std::vector<std::string> cells;
  while (reader.next(cells)) {
    ++result.rows_read;
    auto gas = csv::parse_double(cells[c_gas]);
    auto usd = csv::parse_double(cells[c_usd]);
    if (!gas || !usd || *gas <= 0 || *usd <= 0) {
      ++result.skipped;
      continue;
    }
    UtcDay day;
    try {
      day = parse_date(cells[c_date]);
    } catch (const std::invalid_argument&) {
      ++result.skipped;
      continue;
    }
    if (result.table.insert(day, DailyPrice{*gas, *usd})) {
      result.warnings.push_back("duplicate price row for " + cells[c_date] +
                                ", keeping the later one");
    }
  }
  return result;
}

}  // namespace mevcost
