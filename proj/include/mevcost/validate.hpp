#pragma once

#include <string>
#include <vector>

#include "mevcost/types.hpp"

namespace mevcost {

// Dataset health report. Problems are collected, never thrown: upstream
// files routinely carry a few bad rows and the caller decides what to do.
struct ValidationReport {
  std::size_t n_transactions = 0;
  std::size_t n_blocks = 0;
  std::size_t duplicate_hashes = 0;
  std::size_t fee_violations = 0;    // negative fee fields or priority > max
  std::size_t index_violations = 0;  // per-block indices not exactly 0..n-1
  std::size_t block_gaps = 0;        // block tx_count != transactions present
  std::size_t clean_transactions = 0;
  std::vector<std::string> notes;

  bool clean() const {
    return duplicate_hashes == 0 && fee_violations == 0 &&
           index_violations == 0 && block_gaps == 0;
  }
};

ValidationReport validate_dataset(const std::vector<TxRecord>& txs,
                                  const std::vector<BlockMeta>& blocks);

std::string to_text(const ValidationReport& report);

}  // namespace mevcost
