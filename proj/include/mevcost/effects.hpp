#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mevcost/probit.hpp"
#include "mevcost/types.hpp"

namespace mevcost::effects {

// Marginal effects are reported as the change in the probability of landing
// in the FIRST block quartile, so a negative latent coefficient (earlier
// placement) shows up as a positive effect. That orientation is inherent in
// the first-category derivative and is applied exactly once, here.

// Phi(kappa_1 - x'beta).
double first_quartile_prob(const probit::ProbitFit& fit, const Eigen::RowVectorXd& row);

// dP(q=1)/dx_var = -beta_var * phi(kappa_1 - x'beta).
double marginal_effect_continuous(const probit::ProbitFit& fit,
                                  const Eigen::RowVectorXd& row, Eigen::Index var);

// P(q=1 | var=1) - P(q=1 | var=0), other regressors held at the row values.
double marginal_effect_discrete(const probit::ProbitFit& fit,
                                const Eigen::RowVectorXd& row, Eigen::Index var);

// Per-row effect using the rule matching the regressor kind (continuous
// derivative for continuous regressors, 0->1 change for indicators).
double marginal_effect(const probit::ProbitFit& fit, const Eigen::RowVectorXd& row,
                       Eigen::Index var);

struct EffectsTable {
  std::vector<std::string> names;
  Eigen::VectorXd ame;             // average marginal effect on P(q=1)
  Eigen::VectorXd gas_equivalent;  // |beta_var| / |beta_max_fee|
  Eigen::VectorXd usd_cost;
  Eigen::MatrixXd per_observation;  // n x k, retained for quantiles
};

// Mean per-observation effects plus Eq.-3 gas equivalents; USD columns are
// filled when a price row is supplied.
EffectsTable average_marginal_effects(const probit::ProbitFit& fit,
                                      const Eigen::MatrixXd& x,
                                      const DailyPrice* price = nullptr);

// Nearest-rank quantiles of the per-observation effect distribution;
// returns one row per variable, one column per requested quantile.
Eigen::MatrixXd quantile_marginal_effects(const EffectsTable& table,
                                          const std::vector<double>& quantiles);

// |beta_var| / |beta_max_fee_per_gas| (the density factor cancels in the
// ratio of derivative-form effects at a common evaluation point). Throws
// std::domain_error when |beta_max_fee| < 1e-12.
double gas_equivalent(const probit::ProbitFit& fit, Eigen::Index var);
double gas_equivalent(const probit::ProbitFit& fit, const std::string& var_name);

// gas_units * gas_price_gwei * 1e-9 * eth_close_usd.
double usd_cost(double gas_units, const DailyPrice& price);
double usd_cost(double gas_units, const PriceTable& prices, UtcDay day);

enum class InsuranceMode {
  kGapToCertainty,   // (1 - P(q=1)) / |effect of one gas unit|
  kFullProbability,  // 1 / |effect of one gas unit|
};

struct InsuranceResult {
  double per_tx_gas = 0;       // average over included rows
  double per_tx_usd = 0;
  double aggregate_gas = 0;
  double aggregate_usd = 0;
  std::size_t n_rows = 0;
  std::size_t excluded_rows = 0;  // |per-row gas effect| below the floor
};

// Gas needed per transaction to (nearly) guarantee first-quartile
// placement, aggregated over the day.
InsuranceResult reordering_insurance(const probit::ProbitFit& fit,
                                     const Eigen::MatrixXd& x, const DailyPrice& price,
                                     InsuranceMode mode = InsuranceMode::kGapToCertainty,
                                     double effect_floor = 1e-12);

}  // namespace mevcost::effects
