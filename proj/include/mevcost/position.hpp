#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "mevcost/types.hpp"

namespace mevcost {

// One estimation observation for the block-placement model. block_bucket is
// the dependent variable (1..n_buckets); mempool_bucket is 0 when the
// transaction was never seen in the public mempool.
struct DesignRow {
  TxHash tx_hash;
  int block_bucket = 0;
  int mempool_bucket = 0;  // 0 = not observed in mempool
  double max_fee_per_gas = 0;
  bool to_dex = false, from_dex = false;
  bool to_mev = false, from_mev = false;
  bool front_run = false, back_run = false;  // extended model only
  // Diagnostics.
  double block_position = 0;
  std::optional<double> mempool_position;
  bool in_mempool() const { return mempool_bucket > 0; }
  bool mempool_q1() const { return mempool_bucket == 1; }
  bool mempool_q2() const { return mempool_bucket == 2; }
  bool mempool_q3() const { return mempool_bucket == 3; }
};

// Ex-post position of each transaction in its fully constructed block,
// normalized to [0,1]: index/(n-1), 0 for a single-transaction block.
// Throws std::invalid_argument unless indices are exactly 0..n-1.
std::unordered_map<TxHash, double> normalize_block_positions(
    const std::vector<TxRecord>& block);

// First-arrival mempool position of the block's transactions, ranked within
// the cohort that landed in this block and normalized to [0,1]. Ties on
// first_seen break by hash order. Unobserved transactions are absent.
std::unordered_map<TxHash, double> mempool_positions(
    const std::vector<TxRecord>& block,
    const std::unordered_map<TxHash, std::int64_t>& first_seen);

// Closed-upper bucketing of a [0,1] position: with 4 buckets, 1 for
// p <= 0.25, 2 for p <= 0.5, 3 for p <= 0.75, else 4.
int bucket_of(double position, int n_buckets);
inline int quartile(double position) { return bucket_of(position, 4); }

struct DesignOptions {
  int n_buckets = 4;       // 4 = quartiles, 10 = decile robustness variant
  bool extended = false;   // add front_run/back_run indicators
};

struct DesignBuildResult {
  std::vector<DesignRow> rows;
  std::vector<std::string> warnings;
};

// Builds one DesignRow per transaction of a UTC day. `day_txs` must hold
// complete blocks sorted by (block_number, block_index). Registry dummies
// come from to_addr/from_addr; contract creations carry all four as 0.
DesignBuildResult build_design_rows(
    const std::vector<TxRecord>& day_txs,
    const std::unordered_map<TxHash, std::int64_t>& mempool_first_seen,
    const LabelRegistry& registry,
    const std::vector<SandwichRecord>& sandwiches,
    const DesignOptions& options = {});

enum class RegressorKind { kContinuous, kIndicator };

struct DesignMatrix {
  Eigen::MatrixXd x;            // n x k regressors
  Eigen::VectorXi category;     // n, values 1..n_buckets
  std::vector<std::string> names;
  std::vector<RegressorKind> kinds;
  int n_buckets = 4;
  std::vector<TxHash> hashes;   // row identity, parallel to x

  std::optional<std::size_t> column_index(const std::string& name) const;
};

// Expands DesignRows into the Eq.-1 regressor matrix: mempool bucket
// dummies 1..n_buckets-1 (last bucket omitted as baseline), max fee per gas
// in raw Gwei, the four DEX/MEV indicators, then front/back run when
// extended.
DesignMatrix design_matrix(const std::vector<DesignRow>& rows,
                           const DesignOptions& options = {});

// Audit dump of design rows (delimiter-separated).
void write_design_rows(const std::string& path, const std::vector<DesignRow>& rows);

}  // namespace mevcost
