#include "mevcost/validate.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace mevcost {

ValidationReport validate_dataset(const std::vector<TxRecord>& txs,
                                  const std::vector<BlockMeta>& blocks) {
  ValidationReport report;
  report.n_transactions = txs.size();
  report.n_blocks = blocks.size();

  std::unordered_set<std::string> seen_hashes;
  seen_hashes.reserve(txs.size());
  std::map<std::int64_t, std::vector<std::int64_t>> indices_by_block;
  std::unordered_set<const TxRecord*> dirty;

  for (const auto& tx : txs) {
    if (!seen_hashes.insert(tx.tx_hash).second) {
      ++report.duplicate_hashes;
      dirty.insert(&tx);
    }
    bool fee_ok = tx.max_fee_per_gas >= 0 && tx.max_priority_fee_per_gas >= 0 &&
                  tx.effective_gas_price >= 0 && tx.gas_used >= 0 &&
                  tx.max_priority_fee_per_gas <= tx.max_fee_per_gas;
    if (!fee_ok) {
      ++report.fee_violations;
      dirty.insert(&tx);
    }
    indices_by_block[tx.block_number].push_back(tx.block_index);
  }

  for (auto& [block_number, idx] : indices_by_block) {
    std::sort(idx.begin(), idx.end());
    bool contiguous = true;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] != static_cast<std::int64_t>(i)) {
        contiguous = false;
        break;
      }
    }
    if (!contiguous) {
      ++report.index_violations;
      report.notes.push_back("block " + std::to_string(block_number) +
                             ": indices not 0.." + std::to_string(idx.size() - 1));
    }
  }

  for (const auto& block : blocks) {
    auto it = indices_by_block.find(block.block_number);
    std::size_t present = it == indices_by_block.end() ? 0 : it->second.size();
    if (static_cast<std::size_t>(block.tx_count) != present) {
      ++report.block_gaps;
      report.notes.push_back("block " + std::to_string(block.block_number) +
                             ": tx_count=" + std::to_string(block.tx_count) +
                             " but " + std::to_string(present) + " present");
    }
  }

  for (const auto& tx : txs) {
    if (!dirty.count(&tx)) ++report.clean_transactions;
  }
  return report;
}

std::string to_text(const ValidationReport& r) {
  std::ostringstream os;
  os << "transactions: " << r.n_transactions << "\n"
     << "blocks: " << r.n_blocks << "\n"
     << "duplicate_hashes: " << r.duplicate_hashes << "\n"
     << "fee_violations: " << r.fee_violations << "\n"
     << "index_violations: " << r.index_violations << "\n"
     << "block_gaps: " << r.block_gaps << "\n"
     << "clean_transactions: " << r.clean_transactions << "\n";
  for (const auto& note : r.notes) os << "note: " << note << "\n";
  return os.str();
}

}  // namespace mevcost
