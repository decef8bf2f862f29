#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "mevcost/stats.hpp"
#include "mevcost/types.hpp"

namespace mevcost::sandwich {

// A vendor sandwich record joined against finalized block data.
struct LegInfo {
  TxHash hash;
  double block_position = 0;
  std::optional<double> mempool_position;
  double gas_fee_eth = 0;           // gas_used * effective_gas_price
  double max_priority_fee_gwei = 0;
  double gas_used = 0;
};

struct EnrichedSandwich {
  SandwichRecord record;
  LegInfo front, victim, back;
  std::int64_t block_sandwich_count = 0;
  double block_mev_payment_eth = 0;
  UtcDay day = 0;
};

struct JoinResult {
  std::vector<EnrichedSandwich> enriched;
  std::size_t dropped = 0;  // records with any unmatched leg
};

// Resolves the three leg hashes of every record to TxRecords, computes leg
// positions within their block, per-block sandwich counts, and the block's
// MEV payment. Records with a missing leg are dropped and counted.
JoinResult join_sandwiches(
    const std::vector<SandwichRecord>& records, const std::vector<TxRecord>& txs,
    const std::vector<BlockMeta>& blocks,
    const std::unordered_map<TxHash, std::int64_t>& mempool_first_seen);

// Welch t-test of gas fees (ETH): back-run legs vs all other transactions.
stats::TTestResult backrun_gas_test(const std::vector<EnrichedSandwich>& enriched,
                                    const std::vector<TxRecord>& all_txs,
                                    int sides = 2);

// count * mean_fee_eth * eth_usd; monthly back-run fee aggregation.
double aggregate_fee_usd(std::size_t count, double mean_fee_eth, double eth_usd);

enum class Leg { kFront, kVictim, kBack };
std::string leg_name(Leg leg);

struct DisplacementRow {
  Leg leg;
  double mean_mempool_position = 0;
  double mean_block_position = 0;
  double t_stat = 0;
  double p_value = 1;
  std::size_t n = 0;  // legs with both positions observed
};

// Paired comparison (mempool vs block position) per leg category.
std::vector<DisplacementRow> position_displacement(
    const std::vector<EnrichedSandwich>& enriched);

struct SandwichCandidate {
  SandwichRecord record;
  std::int64_t front_index = 0, victim_index = 0, back_index = 0;
  std::string note;
};

// Advisory vendor-data substitute: flags triples i<j<k within `window`
// where front and back share a sender, all three hit the same venue
// address, the victim comes from someone else, and the attacker's ETH value
// reverses (front commits value, back returns tokens).
std::vector<SandwichCandidate> detect_sandwiches_heuristic(
    const std::vector<TxRecord>& block_txs, std::int64_t window = 6);

// Constant-product pool inference from the front and victim swaps of a
// Table-4 style attack (both swaps ETH -> token, sequential).
struct AmmCounterfactual {
  double reserve_eth = 0;    // pre-front reserves
  double reserve_token = 0;
  double counterfactual_out = 0;  // victim swap at pre-front reserves
  double harm = 0;                // counterfactual_out - actual victim_out
  // Victim re-priced at the front run's realized average price; this is the
  // published Table-4 arithmetic and differs from the pool evaluation.
  double front_price_out = 0;
  double front_price_harm = 0;
  bool degenerate = false;  // front_in == 0: nothing to undo
};

// Solves out = y*in*(1-f)/(x + in*(1-f)) applied sequentially for (x, y) by
// bisection on x (relative tolerance 1e-9). Throws std::domain_error when
// no positive-reserve solution exists within tolerance.
AmmCounterfactual amm_counterfactual(double front_in, double front_out,
                                     double victim_in, double victim_out,
                                     double fee_rate);

struct ProfitBreakdown {
  double revenue_eth = 0;  // back_out - front_in
  double revenue_usd = 0;
  double costs_usd = 0;
  double net_usd = 0;
};

ProfitBreakdown sandwich_profit(double front_in_eth, double back_out_eth,
                                double costs_usd, double eth_usd);

struct FilterResult {
  std::vector<double> kept;
  std::vector<std::size_t> kept_indices;
  double retention = 0;
};

// Keeps effects >= threshold and reports the retained fraction.
FilterResult filter_high_effects(const std::vector<double>& per_obs_effects,
                                 double threshold);

struct OLSFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;         // classical
  Eigen::VectorXd robust_std_errors;  // heteroskedasticity-consistent (HC1)
  Eigen::VectorXd residuals;
  double r_squared = 0;
  std::int64_t n_obs = 0;
  std::vector<std::string> names;
};

// OLS with intercept. Throws std::domain_error naming the collinear
// columns when the design is rank deficient.
OLSFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
           const std::vector<std::string>& names);

// One estimation row of the daily marginal-effect regression: the front- or
// back-run effect of a sandwich leg against attack economics.
struct EffectRegressionRow {
  double effect = 0;
  double sandwich_cost_usd = 0;
  double gas_fee_eth = 0;  // gas used in the transaction, not the fee cap
  double block_sandwich_count = 0;
  double max_priority_fee_gwei = 0;
  double sandwich_profit_usd = 0;
  double mev_payment_eth = 0;
};

OLSFit fit_effect_regression(const std::vector<EffectRegressionRow>& rows);

using stats::skewness_ci;
using stats::skewness_reduction_test;
using stats::SkewnessCi;

}  // namespace mevcost::sandwich
