#include "mevcost/effects.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mevcost/stats.hpp"

namespace mevcost::effects {

namespace {

Eigen::Index max_fee_column(const probit::ProbitFit& fit) {
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    if (fit.names[i] == "max_fee_per_gas") return static_cast<Eigen::Index>(i);
  }
  throw std::domain_error("fit has no max_fee_per_gas regressor");
}

}  // namespace

double first_quartile_prob(const probit::ProbitFit& fit, const Eigen::RowVectorXd& row) {
  return stats::normal_cdf(fit.cutpoints(0) - row.dot(fit.beta));
}

double marginal_effect_continuous(const probit::ProbitFit& fit,
                                  const Eigen::RowVectorXd& row, Eigen::Index var) {
  const double z = fit.cutpoints(0) - row.dot(fit.beta);
  return -fit.beta(var) * stats::normal_pdf(z);
}

double marginal_effect_discrete(const probit::ProbitFit& fit,
                                const Eigen::RowVectorXd& row, Eigen::Index var) {
  const double eta_others = row.dot(fit.beta) - row(var) * fit.beta(var);
  const double p1 = stats::normal_cdf(fit.cutpoints(0) - eta_others - fit.beta(var));
  const double p0 = stats::normal_cdf(fit.cutpoints(0) - eta_others);
  return p1 - p0;
}

double marginal_effect(const probit::ProbitFit& fit, const Eigen::RowVectorXd& row,
                       Eigen::Index var) {
  bool indicator = var < static_cast<Eigen::Index>(fit.kinds.size()) &&
                   fit.kinds[static_cast<std::size_t>(var)] == RegressorKind::kIndicator;
  return indicator ? marginal_effect_discrete(fit, row, var)
                   : marginal_effect_continuous(fit, row, var);
}

EffectsTable average_marginal_effects(const probit::ProbitFit& fit,
                                      const Eigen::MatrixXd& x, const DailyPrice* price) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = fit.beta.size();
  if (n == 0) throw std::invalid_argument("average_marginal_effects: no rows");
  EffectsTable table;
  table.names = fit.names;
  table.per_observation.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd row = x.row(i);
    for (Eigen::Index v = 0; v < k; ++v) {
      table.per_observation(i, v) = marginal_effect(fit, row, v);
    }
  }
  table.ame = table.per_observation.colwise().mean();

  table.gas_equivalent.resize(k);
  table.usd_cost.resize(k);
  const Eigen::Index gas_col = max_fee_column(fit);
  for (Eigen::Index v = 0; v < k; ++v) {
    if (std::fabs(fit.beta(gas_col)) < 1e-12) {
      table.gas_equivalent(v) = std::numeric_limits<double>::quiet_NaN();
      table.usd_cost(v) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    table.gas_equivalent(v) = std::fabs(fit.beta(v)) / std::fabs(fit.beta(gas_col));
    table.usd_cost(v) = price ? usd_cost(table.gas_equivalent(v), *price)
                              : std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

Eigen::MatrixXd quantile_marginal_effects(const EffectsTable& table,
                                          const std::vector<double>& quantiles) {
  const Eigen::Index k = table.per_observation.cols();
  Eigen::MatrixXd out(k, static_cast<Eigen::Index>(quantiles.size()));
  for (Eigen::Index v = 0; v < k; ++v) {
    std::vector<double> column(table.per_observation.col(v).data(),
                               table.per_observation.col(v).data() +
                                   table.per_observation.rows());
    for (std::size_t q = 0; q < quantiles.size(); ++q) {
      out(v, static_cast<Eigen::Index>(q)) =
          stats::quantile_nearest_rank(column, quantiles[q]);
    }
  }
  return out;
}

double gas_equivalent(const probit::ProbitFit& fit, Eigen::Index var) {
  const Eigen::Index gas_col = max_fee_column(fit);
  const double denom = std::fabs(fit.beta(gas_col));
  if (denom < 1e-12) {
    throw std::domain_error("gas_equivalent: |beta_max_fee_per_gas| below 1e-12");
  }
  return std::fabs(fit.beta(var)) / denom;
}

double gas_equivalent(const probit::ProbitFit& fit, const std::string& var_name) {
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    if (fit.names[i] == var_name) {
      return gas_equivalent(fit, static_cast<Eigen::Index>(i));
    }
  }
  throw std::invalid_argument("gas_equivalent: unknown regressor " + var_name);
}

double usd_cost(double gas_units, const DailyPrice& price) {
  return gas_units * price.avg_gas_price_gwei * 1e-9 * price.eth_close_usd;
}

double usd_cost(double gas_units, const PriceTable& prices, UtcDay day) {
  return usd_cost(gas_units, prices.at(day));
}

InsuranceResult reordering_insurance(const probit::ProbitFit& fit,
                                     const Eigen::MatrixXd& x, const DailyPrice& price,
                                     InsuranceMode mode, double effect_floor) {
  const Eigen::Index gas_col = max_fee_column(fit);
  InsuranceResult result;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::RowVectorXd row = x.row(i);
    const double me_gas = std::fabs(marginal_effect_continuous(fit, row, gas_col));
    if (me_gas < effect_floor) {
      ++result.excluded_rows;
      continue;
    }
    const double target = mode == InsuranceMode::kGapToCertainty
                              ? 1.0 - first_quartile_prob(fit, row)
                              : 1.0;
    result.aggregate_gas += target / me_gas;
    ++result.n_rows;
  }
  if (result.n_rows > 0) {
    result.per_tx_gas = result.aggregate_gas / static_cast<double>(result.n_rows);
  }
  result.per_tx_usd = usd_cost(result.per_tx_gas, price);
  result.aggregate_usd = usd_cost(result.aggregate_gas, price);
  return result;
}

}  // namespace mevcost::effects
