#include "mevcost/position.hpp"

#include <algorithm>
#include <stdexcept>

#include "mevcost/csv.hpp"

namespace mevcost {

std::unordered_map<TxHash, double> normalize_block_positions(
    const std::vector<TxRecord>& block) {
  std::unordered_map<TxHash, double> out;
  const std::size_t n = block.size();
  if (n == 0) return out;
  std::vector<bool> seen(n, false);
  for (const auto& tx : block) {
    if (tx.block_index < 0 || static_cast<std::size_t>(tx.block_index) >= n ||
        seen[tx.block_index]) {
      throw std::invalid_argument(
          "block " + std::to_string(tx.block_number) +
          ": indices are not a permutation of 0.." + std::to_string(n - 1));
    }
    seen[tx.block_index] = true;
  }
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  out.reserve(n);
  for (const auto& tx : block) {
    out.emplace(tx.tx_hash, static_cast<double>(tx.block_index) / denom);
  }
  return out;
}

std::unordered_map<TxHash, double> mempool_positions(
    const std::vector<TxRecord>& block,
    const std::unordered_map<TxHash, std::int64_t>& first_seen) {
  std::vector<std::pair<std::int64_t, TxHash>> observed;
  observed.reserve(block.size());
  for (const auto& tx : block) {
    auto it = first_seen.find(tx.tx_hash);
    if (it != first_seen.end()) observed.emplace_back(it->second, tx.tx_hash);
  }
  std::sort(observed.begin(), observed.end());
  std::unordered_map<TxHash, double> out;
  out.reserve(observed.size());
  const std::size_t m = observed.size();
  const double denom = m > 1 ? static_cast<double>(m - 1) : 1.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    out.emplace(observed[rank].second, static_cast<double>(rank) / denom);
  }
  return out;
}

int bucket_of(double position, int n_buckets) {
  if (position < 0 || position > 1) {
    throw std::invalid_argument("position outside [0,1]");
  }
  if (n_buckets < 2) throw std::invalid_argument("need >= 2 buckets");
  for (int b = 1; b < n_buckets; ++b) {
    if (position <= static_cast<double>(b) / n_buckets) return b;
  }
  return n_buckets;
}

DesignBuildResult build_design_rows(
    const std::vector<TxRecord>& day_txs,
    const std::unordered_map<TxHash, std::int64_t>& mempool_first_seen,
    const LabelRegistry& registry,
    const std::vector<SandwichRecord>& sandwiches,
    const DesignOptions& options) {
  DesignBuildResult result;
  if (day_txs.empty()) {
    result.warnings.push_back("day has zero blocks; emitting no design rows");
    return result;
  }

  // Sort a copy so the emitted rows do not depend on input order.
  std::vector<TxRecord> sorted = day_txs;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TxRecord& a, const TxRecord& b) {
                     return std::tie(a.block_number, a.block_index) <
                            std::tie(b.block_number, b.block_index);
                   });

  std::unordered_set<TxHash> front_hashes, back_hashes;
  if (options.extended) {
    for (const auto& s : sandwiches) {
      front_hashes.insert(s.front_hash);
      back_hashes.insert(s.back_hash);
    }
  }

  result.rows.reserve(sorted.size());
  std::size_t begin = 0;
  while (begin < sorted.size()) {
    std::size_t end = begin + 1;
    while (end < sorted.size() &&
           sorted[end].block_number == sorted[begin].block_number) {
      ++end;
    }
    std::vector<TxRecord> block(sorted.begin() + begin, sorted.begin() + end);
    auto block_pos = normalize_block_positions(block);
    auto pool_pos = mempool_positions(block, mempool_first_seen);

    for (const auto& tx : block) {
      DesignRow row;
      row.tx_hash = tx.tx_hash;
      row.block_position = block_pos.at(tx.tx_hash);
      row.block_bucket = bucket_of(row.block_position, options.n_buckets);
      auto mp = pool_pos.find(tx.tx_hash);
      if (mp != pool_pos.end()) {
        row.mempool_position = mp->second;
        row.mempool_bucket = bucket_of(mp->second, options.n_buckets);
      }
      row.max_fee_per_gas = tx.max_fee_per_gas;
      if (tx.to_addr) {
        row.to_dex = registry.has_label(*tx.to_addr, AddressLabel::kDex);
        row.to_mev = registry.has_label(*tx.to_addr, AddressLabel::kMevBuilder);
        row.from_dex = registry.has_label(tx.from_addr, AddressLabel::kDex);
        row.from_mev = registry.has_label(tx.from_addr, AddressLabel::kMevBuilder);
      }
      // Contract creations (absent to_addr) keep all four indicators at 0.
      if (options.extended) {
        row.front_run = front_hashes.count(tx.tx_hash) > 0;
        row.back_run = back_hashes.count(tx.tx_hash) > 0;
      }
      result.rows.push_back(std::move(row));
    }
    begin = end;
  }
  return result;
}

std::optional<std::size_t> DesignMatrix::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

DesignMatrix design_matrix(const std::vector<DesignRow>& rows,
                           const DesignOptions& options) {
  DesignMatrix dm;
  dm.n_buckets = options.n_buckets;
  const int n_pool_dummies = options.n_buckets - 1;
  for (int b = 1; b <= n_pool_dummies; ++b) {
    dm.names.push_back("mempool_q" + std::to_string(b));
    dm.kinds.push_back(RegressorKind::kIndicator);
  }
  dm.names.push_back("max_fee_per_gas");
  dm.kinds.push_back(RegressorKind::kContinuous);
  for (const char* name : {"to_dex", "to_mev", "from_dex", "from_mev"}) {
    dm.names.push_back(name);
    dm.kinds.push_back(RegressorKind::kIndicator);
  }
  if (options.extended) {
    dm.names.push_back("front_run");
    dm.kinds.push_back(RegressorKind::kIndicator);
    dm.names.push_back("back_run");
    dm.kinds.push_back(RegressorKind::kIndicator);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(dm.names.size());
  dm.x = Eigen::MatrixXd::Zero(n, k);
  dm.category.resize(n);
  dm.hashes.reserve(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const DesignRow& row = rows[i];
    Eigen::Index c = 0;
    for (int b = 1; b <= n_pool_dummies; ++b) {
      dm.x(i, c++) = row.mempool_bucket == b ? 1.0 : 0.0;
    }
    dm.x(i, c++) = row.max_fee_per_gas;
    dm.x(i, c++) = row.to_dex ? 1.0 : 0.0;
    dm.x(i, c++) = row.to_mev ? 1.0 : 0.0;
    dm.x(i, c++) = row.from_dex ? 1.0 : 0.0;
    dm.x(i, c++) = row.from_mev ? 1.0 : 0.0;
    if (options.extended) {
      dm.x(i, c++) = row.front_run ? 1.0 : 0.0;
      dm.x(i, c++) = row.back_run ? 1.0 : 0.0;
    }
    dm.category(i) = row.block_bucket;
    dm.hashes.push_back(row.tx_hash);
  }
  return dm;
}

void write_design_rows(const std::string& path, const std::vector<DesignRow>& rows) {
  csv::Writer writer(path,
                     {"tx_hash", "block_bucket", "mempool_bucket", "max_fee_per_gas",
                      "to_dex", "to_mev", "from_dex", "from_mev", "front_run",
                      "back_run", "block_position", "mempool_position", "in_mempool"});
  for (const auto& r : rows) {
    writer.row({r.tx_hash, std::to_string(r.block_bucket),
                std::to_string(r.mempool_bucket), csv::fixed(r.max_fee_per_gas, 6),
                std::to_string(r.to_dex ? 1 : 0), std::to_string(r.to_mev ? 1 : 0),
                std::to_string(r.from_dex ? 1 : 0), std::to_string(r.from_mev ? 1 : 0),
                std::to_string(r.front_run ? 1 : 0), std::to_string(r.back_run ? 1 : 0),
                csv::fixed(r.block_position, 8),
                r.mempool_position ? csv::fixed(*r.mempool_position, 8) : "",
                std::to_string(r.in_mempool() ? 1 : 0)});
  }
}

}  // namespace mevcost
