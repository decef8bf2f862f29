#include <doctest.h>

#include <cmath>
#include <random>

#include "mevcost/effects.hpp"
#include "mevcost/stats.hpp"

using namespace mevcost;
using namespace mevcost::effects;

namespace {

// Fit with chosen coefficients; effects only read beta/cutpoints/names/kinds.
probit::ProbitFit make_fit(std::vector<double> beta, std::vector<double> kappa,
                           std::vector<std::string> names,
                           std::vector<RegressorKind> kinds) {
  probit::ProbitFit fit;
  fit.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  fit.cutpoints =
      Eigen::Map<Eigen::VectorXd>(kappa.data(), static_cast<Eigen::Index>(kappa.size()));
  fit.names = std::move(names);
  fit.kinds = std::move(kinds);
  fit.n_categories = static_cast<int>(kappa.size()) + 1;
  fit.converged = true;
  return fit;
}

// Numeric CDF oracle: adaptive-free composite Simpson over the density,
// independent of the library's erfc path.
double quadrature_phi(double z) {
  if (z < -10) return 0.0;
  if (z > 10) return 1.0;
  const double lo = -10.0;
  const int steps = 4000;  // even
  const double h = (z - lo) / steps;
  auto dens = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * M_PI); };
  double sum = dens(lo) + dens(z);
  for (int i = 1; i < steps; ++i) {
    sum += dens(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("first quartile probability") {
  auto fit = make_fit({1.0}, {-0.3, 0.5, 1.2}, {"max_fee_per_gas"},
                      {RegressorKind::kContinuous});
  SUBCASE("index at the first cutpoint gives one half") {
    Eigen::RowVectorXd row(1);
    row << -0.3;  // x'beta = -0.3 = kappa_1
    CHECK(first_quartile_prob(fit, row) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("zero coefficients at the quartile cutpoint give 0.25") {
    auto f = make_fit({0.0}, {stats::normal_quantile(0.25), 0.5, 1.2},
                      {"max_fee_per_gas"}, {RegressorKind::kContinuous});
    Eigen::RowVectorXd row(1);
    row << 3.7;
    CHECK(first_quartile_prob(f, row) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("matches the quadrature oracle to 1e-12") {
    std::mt19937 gen(3);
    std::normal_distribution<double> normal(0, 1);
    for (int t = 0; t < 20; ++t) {
      Eigen::RowVectorXd row(1);
      row << normal(gen);
      double got = first_quartile_prob(fit, row);
      double want = quadrature_phi(fit.cutpoints(0) - row(0) * fit.beta(0));
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("continuous marginal effect") {
  SUBCASE("zero coefficient gives zero effect") {
    auto fit = make_fit({0.0, 0.5}, {-0.3, 0.5, 1.2},
                        {"max_fee_per_gas", "other"},
                        {RegressorKind::kContinuous, RegressorKind::kContinuous});
    Eigen::RowVectorXd row(2);
    row << 1.0, 2.0;
    CHECK(marginal_effect_continuous(fit, row, 0) == doctest::Approx(0.0));
  }
  SUBCASE("unit coefficient at the cutpoint gives -phi(0)") {
    auto fit = make_fit({1.0}, {0.0, 0.5, 1.2}, {"max_fee_per_gas"},
                        {RegressorKind::kContinuous});
    Eigen::RowVectorXd row(1);
    row << 0.0;
    CHECK(marginal_effect_continuous(fit, row, 0) ==
          doctest::Approx(-0.3989422804014327).epsilon(1e-12));
  }
  SUBCASE("matches the central finite difference of the probability") {
    auto fit = make_fit({-0.7, 0.25}, {-0.4, 0.3, 1.0}, {"a", "max_fee_per_gas"},
                        {RegressorKind::kContinuous, RegressorKind::kContinuous});
    std::mt19937 gen(5);
    std::normal_distribution<double> normal(0, 1);
    for (int t = 0; t < 20; ++t) {
      Eigen::RowVectorXd row(2);
      row << normal(gen), normal(gen);
      for (Eigen::Index var : {0, 1}) {
        const double h = 1e-6;
        Eigen::RowVectorXd up = row, dn = row;
        up(var) += h;
        dn(var) -= h;
        double fd = (first_quartile_prob(fit, up) - first_quartile_prob(fit, dn)) / (2 * h);
        CHECK(marginal_effect_continuous(fit, row, var) ==
              doctest::Approx(fd).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("discrete marginal effect") {
  SUBCASE("zero coefficient gives zero change") {
    auto fit = make_fit({0.0}, {-0.3, 0.5, 1.2}, {"d"}, {RegressorKind::kIndicator});
    Eigen::RowVectorXd row(1);
    row << 1.0;
    CHECK(marginal_effect_discrete(fit, row, 0) == doctest::Approx(0.0));
  }
  SUBCASE("to-MEV-sized coefficient moves the probability by 59 points") {
    // kappa_1 - x'beta with the dummy off is -0.6; switching it on adds 1.7074.
    auto fit = make_fit({-1.7074}, {-0.6, 0.1, 0.8}, {"to_mev"},
                        {RegressorKind::kIndicator});
    Eigen::RowVectorXd row(1);
    row << 0.0;
    CHECK(marginal_effect_discrete(fit, row, 0) ==
          doctest::Approx(0.5916863692849614).epsilon(1e-10));
  }
  SUBCASE("positive latent coefficient gives a negative effect") {
    auto fit = make_fit({1.9906}, {-0.6, 0.1, 0.8}, {"from_mev"},
                        {RegressorKind::kIndicator});
    Eigen::RowVectorXd row(1);
    row << 1.0;
    CHECK(marginal_effect_discrete(fit, row, 0) < 0);
  }
  SUBCASE("agrees with the continuous rule for tiny coefficients") {
    for (double b : {1e-4, -1e-4, 5e-5}) {
      auto fit = make_fit({b, -0.4}, {-0.5, 0.2, 0.9}, {"d", "c"},
                          {RegressorKind::kIndicator, RegressorKind::kContinuous});
      Eigen::RowVectorXd row(2);
      row << 0.0, 1.3;
      double discrete = marginal_effect_discrete(fit, row, 0);
      double continuous = marginal_effect_continuous(fit, row, 0);
      CHECK(std::fabs(discrete - continuous) < 1e-6);
    }
  }
}

TEST_CASE("average marginal effects") {
  std::mt19937 gen(7);
  std::normal_distribution<double> normal(0, 1);
  std::bernoulli_distribution coin(0.3);
  const int n = 200;
  Eigen::MatrixXd x(n, 3);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 40 + 10 * normal(gen);
    x(i, 1) = coin(gen) ? 1.0 : 0.0;
    x(i, 2) = coin(gen) ? 1.0 : 0.0;
  }
  auto fit = make_fit({-8.578e-4, -0.77121, 0.4}, {-0.6, 0.1, 0.8},
                      {"max_fee_per_gas", "to_dex", "from_mev"},
                      {RegressorKind::kContinuous, RegressorKind::kIndicator,
                       RegressorKind::kIndicator});

  SUBCASE("equals the per-row loop oracle") {
    auto table = average_marginal_effects(fit, x);
    for (Eigen::Index v = 0; v < 3; ++v) {
      double sum = 0;
      for (int i = 0; i < n; ++i) {
        Eigen::RowVectorXd row = x.row(i);
        sum += v == 0 ? marginal_effect_continuous(fit, row, v)
                      : marginal_effect_discrete(fit, row, v);
      }
      CHECK(table.ame(v) == doctest::Approx(sum / n).epsilon(1e-12));
    }
  }
  SUBCASE("zero-coefficient fit gives zero effects") {
    auto null_fit = make_fit({0.0, 0.0, 0.0}, {-0.6, 0.1, 0.8},
                             {"max_fee_per_gas", "to_dex", "from_mev"},
                             {RegressorKind::kContinuous, RegressorKind::kIndicator,
                              RegressorKind::kIndicator});
    auto table = average_marginal_effects(null_fit, x);
    for (Eigen::Index v = 0; v < 3; ++v) CHECK(table.ame(v) == doctest::Approx(0.0));
  }
  SUBCASE("gas equivalents ride along in the table") {
    DailyPrice price{22.45, 2597.34};
    auto table = average_marginal_effects(fit, x, &price);
    CHECK(table.gas_equivalent(0) == doctest::Approx(1.0));
    CHECK(table.gas_equivalent(1) == doctest::Approx(899.0557).epsilon(1e-4));
    CHECK(table.usd_cost(1) == doctest::Approx(0.0524).epsilon(0.01));
  }
  SUBCASE("quantiles of a constant effect collapse to it") {
    auto null_fit = make_fit({0.0, -0.5, 0.0}, {-0.6, 0.1, 0.8},
                             {"max_fee_per_gas", "to_dex", "from_mev"},
                             {RegressorKind::kContinuous, RegressorKind::kIndicator,
                              RegressorKind::kIndicator});
    Eigen::MatrixXd xc = Eigen::MatrixXd::Zero(5, 3);  // identical rows
    auto table = average_marginal_effects(null_fit, xc);
    auto q = quantile_marginal_effects(table, {0.1, 0.5, 0.9});
    CHECK(q(1, 0) == doctest::Approx(q(1, 2)));
    CHECK(q(1, 1) == doctest::Approx(table.ame(1)));
  }
}

TEST_CASE("marginal effects across cells sum to zero") {
  auto fit = make_fit({-0.9, 0.3}, {-0.6, 0.1, 0.8}, {"a", "b"},
                      {RegressorKind::kContinuous, RegressorKind::kContinuous});
  std::mt19937 gen(9);
  std::normal_distribution<double> normal(0, 1);
  for (int t = 0; t < 10; ++t) {
    Eigen::RowVectorXd row(2);
    row << normal(gen), normal(gen);
    const double h = 1e-6;
    for (Eigen::Index var : {0, 1}) {
      Eigen::RowVectorXd up = row, dn = row;
      up(var) += h;
      dn(var) -= h;
      Eigen::VectorXd diff = (probit::cell_probabilities(fit, up) -
                              probit::cell_probabilities(fit, dn)) /
                             (2 * h);
      CHECK(diff.sum() == doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("gas equivalent") {
  auto fit = make_fit({-8.578e-4, -0.77121, -1.7074, 1.9906}, {-0.6, 0.1, 0.8},
                      {"max_fee_per_gas", "to_dex", "to_mev", "from_mev"},
                      {RegressorKind::kContinuous, RegressorKind::kIndicator,
                       RegressorKind::kIndicator, RegressorKind::kIndicator});
  SUBCASE("self ratio is exactly one") {
    CHECK(gas_equivalent(fit, std::string("max_fee_per_gas")) == doctest::Approx(1.0));
  }
  SUBCASE("published coefficient ratios") {
    CHECK(gas_equivalent(fit, std::string("to_dex")) == doctest::Approx(899.0).epsilon(0.002));
    CHECK(gas_equivalent(fit, std::string("to_mev")) == doctest::Approx(1991.0).epsilon(0.002));
  }
  SUBCASE("vanishing fee coefficient is an error") {
    auto bad = make_fit({1e-13, -0.7}, {-0.6, 0.1, 0.8}, {"max_fee_per_gas", "to_dex"},
                        {RegressorKind::kContinuous, RegressorKind::kIndicator});
    CHECK_THROWS_AS(gas_equivalent(bad, std::string("to_dex")), std::domain_error);
  }
  SUBCASE("scale consistency: rescaling the fee coefficient rescales the ratio") {
    for (double c : {10.0, 1000.0}) {
      auto scaled = fit;
      scaled.beta(0) /= c;  // fee now measured in units c times larger
      double base = gas_equivalent(fit, std::string("to_dex"));
      double rescaled = gas_equivalent(scaled, std::string("to_dex"));
      CHECK(rescaled == doctest::Approx(c * base).epsilon(1e-12));
      CHECK(rescaled * (1.0 / c) == doctest::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("usd conversion") {
  DailyPrice price{22.45, 2597.34};
  CHECK(usd_cost(2320.5875, price) == doctest::Approx(0.1353).epsilon(2e-3));
  CHECK(usd_cost(0.0, price) == doctest::Approx(0.0));
  // Linear in gas units.
  CHECK(usd_cost(500.0, price) * 2 == doctest::Approx(usd_cost(1000.0, price)));
  PriceTable table;
  table.insert(19997, price);
  CHECK(usd_cost(899.0557, table, 19997) == doctest::Approx(0.0524).epsilon(1e-2));
  CHECK_THROWS_AS(usd_cost(1.0, table, 20000), std::out_of_range);
}

TEST_CASE("reordering insurance") {
  SUBCASE("certain first-quartile placement needs no extra gas") {
    // kappa_1 - x'beta hugely positive: P(q=1) ~ 1.
    auto fit = make_fit({-1.0}, {-0.6, 0.1, 0.8}, {"max_fee_per_gas"},
                        {RegressorKind::kContinuous});
    Eigen::MatrixXd x(1, 1);
    x << 40.0;  // index -40, z = 39.4
    DailyPrice price{22.45, 2597.34};
    auto result = reordering_insurance(fit, x, price);
    CHECK(result.n_rows == 1);
    CHECK(result.aggregate_gas == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  }
  SUBCASE("two rows at P=0.5 with ME 1e-4 need 10,000 gas") {
    // x'beta = kappa_1 makes P = 0.5 and the density phi(0); choose beta so
    // the per-gas effect is exactly 1e-4.
    const double beta_gas = -1e-4 / 0.3989422804014327;
    auto fit = make_fit({beta_gas}, {-0.6, 0.1, 0.8}, {"max_fee_per_gas"},
                        {RegressorKind::kContinuous});
    Eigen::MatrixXd x(2, 1);
    const double fee = -0.6 / beta_gas;
    x << fee, fee;
    DailyPrice price{22.45, 2597.34};
    auto result = reordering_insurance(fit, x, price);
    CHECK(result.aggregate_gas == doctest::Approx(10000.0).epsilon(1e-9));
    CHECK(result.per_tx_gas == doctest::Approx(5000.0).epsilon(1e-9));
    CHECK(result.per_tx_usd ==
          doctest::Approx(usd_cost(5000.0, price)).epsilon(1e-12));
    SUBCASE("full-probability mode doubles the gap-to-certainty answer here") {
      auto full = reordering_insurance(fit, x, price, InsuranceMode::kFullProbability);
      CHECK(full.aggregate_gas == doctest::Approx(20000.0).epsilon(1e-9));
    }
  }
  SUBCASE("rows below the effect floor are excluded and counted") {
    auto fit = make_fit({-1e-16}, {-0.6, 0.1, 0.8}, {"max_fee_per_gas"},
                        {RegressorKind::kContinuous});
    Eigen::MatrixXd x(3, 1);
    x << 1.0, 2.0, 3.0;
    DailyPrice price{22.45, 2597.34};
    auto result = reordering_insurance(fit, x, price);
    CHECK(result.excluded_rows == 3);
    CHECK(result.n_rows == 0);
  }
}
