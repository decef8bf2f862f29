#include <doctest.h>

#include <cmath>
#include <random>

#include "mevcost/probit.hpp"
#include "mevcost/stats.hpp"

using namespace mevcost;
using namespace mevcost::probit;

namespace {

// Independent oracle: direct summation with its own normal CDF, no shared
// code path with the implementation's interval evaluation.
double oracle_phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double oracle_log_likelihood(const Eigen::VectorXd& beta, const Eigen::VectorXd& kappa,
                             const Eigen::MatrixXd& x, const Eigen::VectorXi& y) {
  double total = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double eta = x.row(i).dot(beta);
    int j = y(i);
    double upper = j <= kappa.size() ? oracle_phi(kappa(j - 1) - eta) : 1.0;
    double lower = j >= 2 ? oracle_phi(kappa(j - 2) - eta) : 0.0;
    total += std::log(upper - lower);
  }
  return total;
}

struct Fixture {
  Eigen::MatrixXd x;
  Eigen::VectorXi y;
};

Fixture random_fixture(int n, int k, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal(0, 1);
  std::uniform_int_distribution<int> cat(1, 4);
  Fixture f;
  f.x.resize(n, k);
  f.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) f.x(i, c) = normal(gen);
    f.y(i) = cat(gen);
  }
  return f;
}

}  // namespace

TEST_CASE("log likelihood closed-form cases") {
  SUBCASE("single quartile-1 row with index at the first cutpoint") {
    Eigen::MatrixXd x(1, 1);
    x << 0.0;
    Eigen::VectorXi y(1);
    y << 1;
    Eigen::VectorXd beta(1), kappa(3);
    beta << 1.0;  // x'beta = 0 regardless
    kappa << 0.0, 1.0, 2.0;
    CHECK(log_likelihood(beta, kappa, x, y) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-14));
  }
  SUBCASE("uniform cells give 4 log 1/4") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 1);
    Eigen::VectorXi y(4);
    y << 1, 2, 3, 4;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd kappa(3);
    kappa << stats::normal_quantile(0.25), stats::normal_quantile(0.5),
        stats::normal_quantile(0.75);
    CHECK(log_likelihood(beta, kappa, x, y) ==
          doctest::Approx(4 * std::log(0.25)).epsilon(1e-12));
  }
  SUBCASE("random 20-row fixture matches the direct-summation oracle") {
    auto f = random_fixture(20, 3, 11);
    Eigen::VectorXd beta(3), kappa(3);
    beta << 0.4, -0.8, 0.15;
    kappa << -0.7, 0.2, 1.1;
    double got = log_likelihood(beta, kappa, f.x, f.y);
    double want = oracle_log_likelihood(beta, kappa, f.x, f.y);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("non-increasing cutpoints are a domain error") {
    auto f = random_fixture(5, 2, 1);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd kappa(3);
    kappa << 0.5, 0.5, 1.0;
    CHECK_THROWS_AS(log_likelihood(beta, kappa, f.x, f.y), std::domain_error);
  }
}

TEST_CASE("analytic score matches central finite differences") {
  auto f = random_fixture(150, 4, 22);
  Eigen::VectorXd beta(4), kappa(3);
  beta << 0.3, -0.5, 0.1, 0.7;
  kappa << -0.6, 0.1, 0.8;
  auto si = score_and_information(beta, kappa, f.x, f.y);

  Eigen::VectorXd theta(7);
  theta << beta, kappa;
  auto ll_at = [&](const Eigen::VectorXd& t) {
    return log_likelihood(t.head(4), t.tail(3), f.x, f.y);
  };
  double max_rel = 0;
  for (Eigen::Index p = 0; p < 7; ++p) {
    const double h = 1e-5 * std::max(1.0, std::fabs(theta(p)));
    Eigen::VectorXd up = theta, dn = theta;
    up(p) += h;
    dn(p) -= h;
    double fd = (ll_at(up) - ll_at(dn)) / (2 * h);
    max_rel = std::max(max_rel, std::fabs(fd - si.gradient(p)) /
                                    std::max(1.0, std::fabs(si.gradient(p))));
  }
  CHECK(max_rel < 1e-6);
}

TEST_CASE("observed information matches finite-difference Hessian") {
  auto f = random_fixture(80, 3, 33);
  Eigen::VectorXd beta(3), kappa(3);
  beta << 0.2, -0.3, 0.5;
  kappa << -0.8, 0.0, 0.9;
  auto si = score_and_information(beta, kappa, f.x, f.y);

  Eigen::VectorXd theta(6);
  theta << beta, kappa;
  auto grad_at = [&](const Eigen::VectorXd& t) {
    return score_and_information(t.head(3), t.tail(3), f.x, f.y).gradient;
  };
  for (Eigen::Index p = 0; p < 6; ++p) {
    const double h = 1e-6 * std::max(1.0, std::fabs(theta(p)));
    Eigen::VectorXd up = theta, dn = theta;
    up(p) += h;
    dn(p) -= h;
    Eigen::VectorXd fd = (grad_at(up) - grad_at(dn)) / (2 * h);
    for (Eigen::Index q = 0; q < 6; ++q) {
      CHECK(-si.information(q, p) ==
            doctest::Approx(fd(q)).epsilon(1e-5).scale(std::max(1.0, std::fabs(fd(q)))));
    }
  }
}

TEST_CASE("fit on a balanced null model") {
  std::mt19937 gen(44);
  std::normal_distribution<double> normal(0, 1);
  const int n = 20000;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXi y(n);
  // Outcome independent of x: true beta = 0, quartiles balanced.
  std::uniform_int_distribution<int> cat(1, 4);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(gen);
    x(i, 1) = normal(gen);
    y(i) = cat(gen);
  }
  auto fit = fit_ordered_probit(x, y, 4);
  REQUIRE(fit.converged);
  for (Eigen::Index c = 0; c < 2; ++c) {
    CHECK(std::fabs(fit.beta(c)) <= 3 * std::sqrt(fit.covariance(c, c)));
  }
  const double q[] = {stats::normal_quantile(0.25), stats::normal_quantile(0.5),
                      stats::normal_quantile(0.75)};
  for (Eigen::Index m = 0; m < 3; ++m) {
    CHECK(fit.cutpoints(m) == doctest::Approx(q[m]).epsilon(0.05));
  }
  SUBCASE("score at the MLE is below tolerance") {
    auto si = score_and_information(fit.beta, fit.cutpoints, x, y);
    // Original-space gradient; the fit converged in the reparameterized one.
    CHECK(si.gradient.lpNorm<Eigen::Infinity>() < 1e-5);
    SUBCASE("information at the MLE is positive definite") {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(si.information);
      CHECK(eig.eigenvalues().minCoeff() > 0);
    }
  }
  SUBCASE("cell probabilities sum to one") {
    std::mt19937 g2(45);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::RowVectorXd row(2);
      row << normal(g2) * 5, normal(g2) * 5;
      CHECK(cell_probabilities(fit, row).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("log likelihood is non-decreasing across accepted newton steps") {
  auto f = random_fixture(500, 3, 55);
  double previous = -1e300;
  for (int iters = 1; iters <= 6; ++iters) {
    FitConfig config;
    config.max_iterations = iters;
    auto fit = fit_ordered_probit(f.x, f.y, 4, config);
    CHECK(fit.log_likelihood >=
          previous - 1e-12 * std::max(1.0, std::fabs(previous)));
    previous = fit.log_likelihood;
  }
}

TEST_CASE("latent shift is absorbed by the cutpoints") {
  auto f = random_fixture(2000, 3, 66);
  auto fit = fit_ordered_probit(f.x, f.y, 4);
  REQUIRE(fit.converged);

  Eigen::MatrixXd shifted = f.x;
  shifted.col(1).array() += 2.5;
  auto fit2 = fit_ordered_probit(shifted, f.y, 4);
  REQUIRE(fit2.converged);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd p1 = cell_probabilities(fit, f.x.row(i));
    Eigen::VectorXd p2 = cell_probabilities(fit2, shifted.row(i));
    for (int j = 0; j < 4; ++j) {
      CHECK(p1(j) == doctest::Approx(p2(j)).epsilon(1e-8));
    }
  }
}

TEST_CASE("fit preconditions") {
  auto f = random_fixture(100, 2, 77);
  SUBCASE("missing category coverage") {
    Eigen::VectorXi y = f.y;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) == 3) y(i) = 2;
    }
    CHECK_THROWS_WITH_AS(fit_ordered_probit(f.x, y, 4),
                         doctest::Contains("category"), std::invalid_argument);
  }
  SUBCASE("constant regressor column") {
    Eigen::MatrixXd x = f.x;
    x.col(1).setConstant(1.0);
    CHECK_THROWS_WITH_AS(fit_ordered_probit(x, f.y, 4),
                         doctest::Contains("constant"), std::invalid_argument);
  }
  SUBCASE("category out of range") {
    Eigen::VectorXi y = f.y;
    y(0) = 5;
    CHECK_THROWS_AS(fit_ordered_probit(f.x, y, 4), std::invalid_argument);
  }
}

TEST_CASE("separation is reported as non-convergence") {
  // A dummy that deterministically identifies category 1 has no finite MLE.
  std::mt19937 gen(88);
  std::uniform_int_distribution<int> cat(1, 4);
  const int n = 400;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXi y(n);
  std::normal_distribution<double> normal(0, 1);
  for (int i = 0; i < n; ++i) {
    y(i) = cat(gen);
    x(i, 0) = y(i) == 1 ? 1.0 : 0.0;
    x(i, 1) = normal(gen);
  }
  FitConfig config;
  config.max_iterations = 60;
  auto fit = fit_ordered_probit(x, y, 4, config);
  CHECK_FALSE(fit.converged);
}

TEST_CASE("ten-category fit supports the decile variant") {
  std::mt19937 gen(99);
  std::normal_distribution<double> normal(0, 1);
  const int n = 5000;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXi y(n);
  Eigen::VectorXd kappa(9);
  for (int m = 0; m < 9; ++m) kappa(m) = stats::normal_quantile((m + 1) / 10.0);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(gen);
    double latent = -0.4 * x(i, 0) + normal(gen);
    int j = 1;
    while (j <= 9 && latent > kappa(j - 1)) ++j;
    y(i) = j;
  }
  auto fit = fit_ordered_probit(x, y, 10);
  REQUIRE(fit.converged);
  CHECK(fit.cutpoints.size() == 9);
  CHECK(fit.beta(0) == doctest::Approx(-0.4).epsilon(0.25));
}

TEST_CASE("standard error table") {
  ProbitFit fit;
  fit.beta.resize(2);
  fit.cutpoints.resize(1);
  fit.names = {"zero_coef", "max_fee_like"};
  fit.kinds = {RegressorKind::kContinuous, RegressorKind::kContinuous};
  fit.n_categories = 2;
  fit.beta << 0.0, -8.578e-4;
  fit.cutpoints << -1.053e-4;
  fit.covariance = Eigen::MatrixXd::Zero(3, 3);
  fit.covariance(0, 0) = 1.0;                    // SE 1
  fit.covariance(1, 1) = 3.117e-5 * 3.117e-5;    // Table-2 max fee row
  fit.covariance(2, 2) = 5.623e-5 * 5.623e-5;    // Table-10 profit row

  auto rows = standard_errors(fit);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].z == doctest::Approx(0.0));
  CHECK(rows[0].p == doctest::Approx(1.0));
  CHECK(rows[0].stars == "");
  CHECK(rows[1].z == doctest::Approx(-27.52).epsilon(1e-3));
  CHECK(rows[1].stars == "***");
  CHECK(rows[2].z == doctest::Approx(-1.8727).epsilon(1e-3));
  CHECK(rows[2].p == doctest::Approx(0.0611).epsilon(1e-2));
  CHECK(rows[2].stars == "*");
  CHECK(stars_for_p(0.005) == "**");
}
