#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mevcost/position.hpp"

namespace mevcost::probit {

// Ordered-probit latent model: category j is observed when the latent index
// x'beta + e (e standard normal) lands in (kappa_{j-1}, kappa_j], with
// kappa_0 = -inf and kappa_J = +inf. P(j=1|x) = Phi(kappa_1 - x'beta), so a
// negative coefficient raises the probability of early block placement.

struct FitConfig {
  double gradient_tol = 1e-8;   // infinity norm, reparameterized space
  int max_iterations = 200;
  int max_step_halvings = 30;
  double probability_floor = 1e-300;  // clamp before log
  unsigned threads = 0;               // 0 = hardware concurrency
};

struct ProbitFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd cutpoints;   // strictly increasing, length J-1
  Eigen::MatrixXd covariance;  // over (beta, cutpoints)
  double log_likelihood = 0;
  std::int64_t n_obs = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0;
  std::int64_t clamped_cells = 0;  // rows that hit the probability floor
  std::vector<std::string> names;            // regressor names
  std::vector<RegressorKind> kinds;
  int n_categories = 4;

  Eigen::Index n_params() const { return beta.size() + cutpoints.size(); }
};

struct ScoreInfo {
  Eigen::VectorXd gradient;     // d logL / d(beta, cutpoints)
  Eigen::MatrixXd information;  // observed information (negative Hessian)
};

// Sum over rows of log[Phi(k_j - x'b) - Phi(k_{j-1} - x'b)], cell
// probabilities clamped at `probability_floor` (clamp events counted into
// *clamped when given). Throws std::domain_error for non-increasing
// cutpoints.
double log_likelihood(const Eigen::VectorXd& beta, const Eigen::VectorXd& cutpoints,
                      const Eigen::MatrixXd& x, const Eigen::VectorXi& category,
                      double probability_floor = 1e-300,
                      std::int64_t* clamped = nullptr);

// Analytic first derivatives and observed information of log_likelihood in
// the original (beta, cutpoints) parametrization.
ScoreInfo score_and_information(const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& cutpoints,
                                const Eigen::MatrixXd& x,
                                const Eigen::VectorXi& category,
                                double probability_floor = 1e-300,
                                unsigned threads = 0);

// Newton maximum likelihood with the cutpoint-gap reparameterization
// kappa_m = kappa_{m-1} + exp(a_m) and step-halving. Preconditions checked:
// every category 1..n_categories observed, no constant regressor column.
ProbitFit fit_ordered_probit(const Eigen::MatrixXd& x, const Eigen::VectorXi& category,
                             int n_categories, const FitConfig& config = {});

ProbitFit fit_ordered_probit(const DesignMatrix& design, const FitConfig& config = {});

// Per-category probabilities for one row; always sums to 1 (no clamping).
Eigen::VectorXd cell_probabilities(const ProbitFit& fit,
                                   const Eigen::RowVectorXd& x_row);
Eigen::VectorXd cell_probabilities(const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& cutpoints,
                                   const Eigen::RowVectorXd& x_row);

struct CoefficientRow {
  std::string name;
  double estimate = 0;
  double std_error = 0;
  double z = 0;
  double p = 1;
  std::string stars;  // *** p<0.001, ** p<0.01, * p<0.1
  bool is_cutpoint = false;
};

std::vector<CoefficientRow> standard_errors(const ProbitFit& fit);

std::string stars_for_p(double p);

// Human-readable fit report (consumed by the CLI's fit_YYYYMMDD.txt).
std::string to_report(const ProbitFit& fit);

}  // namespace mevcost::probit
