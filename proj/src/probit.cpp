#include "mevcost/probit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mevcost/csv.hpp"
#include "mevcost/stats.hpp"

namespace mevcost::probit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2 = 0.70710678118654752440;

// P(zl < Z <= zu) for standard normal, evaluated through whichever tail
// keeps the erfc difference free of cancellation.
double interval_prob(double zl, double zu) {
  if (zl + zu > 0) {
    double upper_l = zl == -kInf ? 2.0 : std::erfc(zl * kInvSqrt2);
    double upper_u = zu == kInf ? 0.0 : std::erfc(zu * kInvSqrt2);
    return 0.5 * (upper_l - upper_u);
  }
  double lower_u = zu == kInf ? 2.0 : std::erfc(-zu * kInvSqrt2);
  double lower_l = zl == -kInf ? 0.0 : std::erfc(-zl * kInvSqrt2);
  return 0.5 * (lower_u - lower_l);
}

void check_cutpoints(const Eigen::VectorXd& cutpoints) {
  for (Eigen::Index m = 1; m < cutpoints.size(); ++m) {
    if (!(cutpoints(m) > cutpoints(m - 1))) {
      throw std::domain_error("cutpoints must be strictly increasing");
    }
  }
}

struct Accum {
  double ll = 0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;
  std::int64_t clamped = 0;

  explicit Accum(Eigen::Index p)
      : grad(Eigen::VectorXd::Zero(p)), info(Eigen::MatrixXd::Zero(p, p)) {}
  Accum() = default;

  void combine(const Accum& other) {
    ll += other.ll;
    grad += other.grad;
    info += other.info;
    clamped += other.clamped;
  }
};

// Per-row likelihood, score, and negative-Hessian contributions. zphi terms
// vanish in the open-ended cells (phi and z*phi both -> 0).
void accumulate_row(const Eigen::VectorXd& beta, const Eigen::VectorXd& cutpoints,
                    const Eigen::MatrixXd& x, const Eigen::VectorXi& category,
                    Eigen::Index i, double floor, bool with_derivs, Accum& acc) {
  const Eigen::Index k = beta.size();
  const Eigen::Index ncut = cutpoints.size();
  const int j = category(i);
  const double eta = x.row(i).dot(beta);
  const double zu = j <= ncut ? cutpoints(j - 1) - eta : kInf;
  const double zl = j >= 2 ? cutpoints(j - 2) - eta : -kInf;

  double p = interval_prob(zl, zu);
  if (p < floor) {
    p = floor;
    ++acc.clamped;
  }
  acc.ll += std::log(p);
  if (!with_derivs) return;

  const double phi_u = zu == kInf ? 0.0 : stats::normal_pdf(zu);
  const double phi_l = zl == -kInf ? 0.0 : stats::normal_pdf(zl);
  const double zphi_u = zu == kInf ? 0.0 : zu * phi_u;
  const double zphi_l = zl == -kInf ? 0.0 : zl * phi_l;
  const double u = phi_u / p;
  const double l = phi_l / p;
  const double lambda = u - l;  // -dl/deta

  // Gradient.
  acc.grad.head(k).noalias() -= lambda * x.row(i).transpose();
  if (j <= ncut) acc.grad(k + j - 1) += u;
  if (j >= 2) acc.grad(k + j - 2) -= l;

  // Observed information (negative second derivatives).
  const double h_eta = -(zphi_u - zphi_l) / p - lambda * lambda;
  acc.info.topLeftCorner(k, k).noalias() -=
      h_eta * (x.row(i).transpose() * x.row(i));
  if (j <= ncut) {
    const double h_uu = -zphi_u / p - u * u;
    acc.info(k + j - 1, k + j - 1) -= h_uu;
    const double h_eta_u = u * (zu + lambda);
    acc.info.block(0, k + j - 1, k, 1).noalias() -= h_eta_u * x.row(i).transpose();
    acc.info.block(k + j - 1, 0, 1, k).noalias() -= h_eta_u * x.row(i);
  }
  if (j >= 2) {
    const double h_ll = zphi_l / p - l * l;
    acc.info(k + j - 2, k + j - 2) -= h_ll;
    const double h_eta_l = -l * (zl + lambda);
    acc.info.block(0, k + j - 2, k, 1).noalias() -= h_eta_l * x.row(i).transpose();
    acc.info.block(k + j - 2, 0, 1, k).noalias() -= h_eta_l * x.row(i);
  }
  if (j <= ncut && j >= 2) {
    const double h_ul = u * l;
    acc.info(k + j - 1, k + j - 2) -= h_ul;
    acc.info(k + j - 2, k + j - 1) -= h_ul;
  }
}

constexpr Eigen::Index kChunkRows = 4096;

// Fixed-size chunks evaluated possibly in parallel, then combined as a
// pairwise tree in index order: results do not depend on the thread count.
Accum accumulate_all(const Eigen::VectorXd& beta, const Eigen::VectorXd& cutpoints,
                     const Eigen::MatrixXd& x, const Eigen::VectorXi& category,
                     double floor, bool with_derivs, unsigned threads) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = beta.size() + cutpoints.size();
  const Eigen::Index n_chunks = (n + kChunkRows - 1) / kChunkRows;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_chunks));

  std::vector<Accum> chunks(static_cast<std::size_t>(std::max<Eigen::Index>(n_chunks, 1)),
                            Accum(p));
  auto run_range = [&](Eigen::Index c0, Eigen::Index c1) {
    for (Eigen::Index c = c0; c < c1; ++c) {
      const Eigen::Index lo = c * kChunkRows;
      const Eigen::Index hi = std::min(n, lo + kChunkRows);
      for (Eigen::Index i = lo; i < hi; ++i) {
        accumulate_row(beta, cutpoints, x, category, i, floor, with_derivs,
                       chunks[static_cast<std::size_t>(c)]);
      }
    }
  };
  if (threads <= 1 || n_chunks <= 1) {
    run_range(0, n_chunks);
  } else {
    std::vector<std::thread> pool;
    const Eigen::Index per = (n_chunks + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      Eigen::Index c0 = static_cast<Eigen::Index>(t) * per;
      Eigen::Index c1 = std::min(n_chunks, c0 + per);
      if (c0 >= c1) break;
      pool.emplace_back(run_range, c0, c1);
    }
    for (auto& th : pool) th.join();
  }

  // Pairwise tree combine.
  std::size_t count = chunks.size();
  while (count > 1) {
    std::size_t half = (count + 1) / 2;
    for (std::size_t i = 0; i + half < count; ++i) chunks[i].combine(chunks[i + half]);
    count = half;
  }
  return std::move(chunks.front());
}

}  // namespace

double log_likelihood(const Eigen::VectorXd& beta, const Eigen::VectorXd& cutpoints,
                      const Eigen::MatrixXd& x, const Eigen::VectorXi& category,
                      double probability_floor, std::int64_t* clamped) {
  check_cutpoints(cutpoints);
  Accum acc = accumulate_all(beta, cutpoints, x, category, probability_floor,
                             /*with_derivs=*/false, 1);
  if (clamped) *clamped = acc.clamped;
  return acc.ll;
}

ScoreInfo score_and_information(const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& cutpoints,
                                const Eigen::MatrixXd& x,
                                const Eigen::VectorXi& category,
                                double probability_floor, unsigned threads) {
  check_cutpoints(cutpoints);
  Accum acc = accumulate_all(beta, cutpoints, x, category, probability_floor,
                             /*with_derivs=*/true, threads);
  return ScoreInfo{std::move(acc.grad), std::move(acc.info)};
}

namespace {

Eigen::VectorXd cutpoints_from_gaps(const Eigen::VectorXd& a) {
  Eigen::VectorXd kappa(a.size());
  if (a.size() == 0) return kappa;
  kappa(0) = a(0);
  for (Eigen::Index m = 1; m < a.size(); ++m) kappa(m) = kappa(m - 1) + std::exp(a(m));
  return kappa;
}

Eigen::VectorXd gaps_from_cutpoints(const Eigen::VectorXd& kappa) {
  Eigen::VectorXd a(kappa.size());
  if (kappa.size() == 0) return a;
  a(0) = kappa(0);
  for (Eigen::Index m = 1; m < kappa.size(); ++m) a(m) = std::log(kappa(m) - kappa(m - 1));
  return a;
}

// d(cutpoints)/d(gaps): lower triangular, column 0 all ones, column r >= 1
// equals exp(a_r) from row r down.
Eigen::MatrixXd gap_jacobian(const Eigen::VectorXd& a) {
  const Eigen::Index m = a.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index row = 0; row < m; ++row) {
    jac(row, 0) = 1.0;
    for (Eigen::Index col = 1; col <= row; ++col) jac(row, col) = std::exp(a(col));
  }
  return jac;
}

}  // namespace

ProbitFit fit_ordered_probit(const Eigen::MatrixXd& x, const Eigen::VectorXi& category,
                             int n_categories, const FitConfig& config) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  const Eigen::Index ncut = n_categories - 1;
  if (n == 0) throw std::invalid_argument("fit_ordered_probit: no observations");
  if (n_categories < 2) throw std::invalid_argument("fit_ordered_probit: need >= 2 categories");

  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_categories), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (category(i) < 1 || category(i) > n_categories) {
      throw std::invalid_argument("fit_ordered_probit: category out of range");
    }
    ++counts[static_cast<std::size_t>(category(i) - 1)];
  }
  for (int j = 0; j < n_categories; ++j) {
    if (counts[static_cast<std::size_t>(j)] == 0) {
      throw std::invalid_argument("fit_ordered_probit: no observations in category " +
                                  std::to_string(j + 1));
    }
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (x.col(c).minCoeff() == x.col(c).maxCoeff()) {
      throw std::invalid_argument(
          "fit_ordered_probit: regressor column " + std::to_string(c) +
          " is constant within sample (absorbed by the cutpoints)");
    }
  }

  // Start at beta = 0, cutpoints at the empirical-share normal quantiles.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd kappa(ncut);
  double cum = 0;
  for (Eigen::Index m = 0; m < ncut; ++m) {
    cum += static_cast<double>(counts[static_cast<std::size_t>(m)]);
    kappa(m) = stats::normal_quantile(cum / static_cast<double>(n));
  }
  Eigen::VectorXd gaps = gaps_from_cutpoints(kappa);

  ProbitFit fit;
  fit.n_obs = n;
  fit.n_categories = n_categories;
  std::int64_t clamped = 0;
  double ll = log_likelihood(beta, kappa, x, category, config.probability_floor,
                             &clamped);

  const Eigen::Index p = k + ncut;
  int iter = 0;
  bool converged = false;
  double grad_norm = kInf;
  for (; iter < config.max_iterations; ++iter) {
    ScoreInfo si = score_and_information(beta, kappa, x, category,
                                         config.probability_floor, config.threads);
    // Map score and information into (beta, gaps) space; the curvature of
    // the gap transform adds g_kappa-weighted diagonal terms.
    Eigen::MatrixXd jac = gap_jacobian(gaps);
    Eigen::VectorXd grad_psi(p);
    grad_psi.head(k) = si.gradient.head(k);
    grad_psi.tail(ncut) = jac.transpose() * si.gradient.tail(ncut);
    Eigen::MatrixXd info_psi(p, p);
    info_psi.topLeftCorner(k, k) = si.information.topLeftCorner(k, k);
    info_psi.topRightCorner(k, ncut) = si.information.topRightCorner(k, ncut) * jac;
    info_psi.bottomLeftCorner(ncut, k) = info_psi.topRightCorner(k, ncut).transpose();
    info_psi.bottomRightCorner(ncut, ncut) =
        jac.transpose() * si.information.bottomRightCorner(ncut, ncut) * jac;
    for (Eigen::Index r = 1; r < ncut; ++r) {
      double tail_grad = si.gradient.tail(ncut).segment(r, ncut - r).sum();
      info_psi(k + r, k + r) -= tail_grad * std::exp(gaps(r));
    }

    grad_norm = grad_psi.lpNorm<Eigen::Infinity>();
    if (grad_norm < config.gradient_tol) {
      converged = true;
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> solver(info_psi);
    Eigen::VectorXd step = solver.solve(grad_psi);
    if (solver.info() != Eigen::Success || !step.allFinite()) break;

    // Step-halving line search: accept the first step that does not
    // decrease logL beyond floating-point noise (near the optimum the true
    // gain is smaller than one ulp of a |logL| in the hundreds of
    // thousands, and the quadratic tail steps must still be taken for the
    // gradient to reach tolerance).
    const double ll_noise = 1e-12 * std::max(1.0, std::fabs(ll));
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= config.max_step_halvings; ++h, scale *= 0.5) {
      Eigen::VectorXd beta_try = beta + scale * step.head(k);
      Eigen::VectorXd gaps_try = gaps + scale * step.tail(ncut);
      Eigen::VectorXd kappa_try = cutpoints_from_gaps(gaps_try);
      std::int64_t clamp_try = 0;
      double ll_try = log_likelihood(beta_try, kappa_try, x, category,
                                     config.probability_floor, &clamp_try);
      if (std::isfinite(ll_try) && ll_try >= ll - ll_noise) {
        beta = std::move(beta_try);
        gaps = std::move(gaps_try);
        kappa = std::move(kappa_try);
        ll = ll_try;
        clamped = clamp_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // degenerate direction; report non-convergence
  }

  fit.beta = beta;
  fit.cutpoints = kappa;
  fit.log_likelihood = ll;
  fit.iterations = iter;
  fit.converged = converged;
  fit.gradient_norm = grad_norm;
  fit.clamped_cells = clamped;

  // Covariance: inverse observed information in the original (beta, kappa)
  // parametrization, which equals the delta-method map of the gap-space
  // inverse at an interior optimum.
  ScoreInfo si = score_and_information(beta, kappa, x, category,
                                       config.probability_floor, config.threads);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(si.information);
  if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0) {
    fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  } else {
    fit.covariance = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
    fit.converged = false;
  }
  return fit;
}

ProbitFit fit_ordered_probit(const DesignMatrix& design, const FitConfig& config) {
  ProbitFit fit = fit_ordered_probit(design.x, design.category, design.n_buckets, config);
  fit.names = design.names;
  fit.kinds = design.kinds;
  return fit;
}

Eigen::VectorXd cell_probabilities(const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& cutpoints,
                                   const Eigen::RowVectorXd& x_row) {
  const Eigen::Index ncut = cutpoints.size();
  const double eta = x_row.dot(beta);
  Eigen::VectorXd probs(ncut + 1);
  for (Eigen::Index j = 0; j <= ncut; ++j) {
    const double zu = j < ncut ? cutpoints(j) - eta : kInf;
    const double zl = j > 0 ? cutpoints(j - 1) - eta : -kInf;
    probs(j) = interval_prob(zl, zu);
  }
  return probs;
}

Eigen::VectorXd cell_probabilities(const ProbitFit& fit, const Eigen::RowVectorXd& x_row) {
  return cell_probabilities(fit.beta, fit.cutpoints, x_row);
}

std::string stars_for_p(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.1) return "*";
  return "";
}

std::vector<CoefficientRow> standard_errors(const ProbitFit& fit) {
  const Eigen::Index k = fit.beta.size();
  const Eigen::Index p = fit.n_params();
  std::vector<CoefficientRow> rows;
  rows.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    CoefficientRow row;
    row.is_cutpoint = i >= k;
    if (row.is_cutpoint) {
      row.name = "cutpoint_" + std::to_string(i - k + 1);
      row.estimate = fit.cutpoints(i - k);
    } else {
      row.name = i < static_cast<Eigen::Index>(fit.names.size())
                     ? fit.names[static_cast<std::size_t>(i)]
                     : "x" + std::to_string(i);
      row.estimate = fit.beta(i);
    }
    const double var = fit.covariance.size() > 0 ? fit.covariance(i, i) : 0.0;
    row.std_error = var > 0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
    if (row.std_error > 0 && std::isfinite(row.std_error)) {
      row.z = row.estimate / row.std_error;
      row.p = std::erfc(std::fabs(row.z) * kInvSqrt2);
      row.stars = stars_for_p(row.p);
    } else {
      row.z = 0;
      row.p = 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_report(const ProbitFit& fit) {
  std::ostringstream os;
  os << "ordered probit fit\n"
     << "n_obs: " << fit.n_obs << "\n"
     << "categories: " << fit.n_categories << "\n"
     << "log_likelihood: " << csv::fixed(fit.log_likelihood, 6) << "\n"
     << "converged: " << (fit.converged ? "true" : "false") << "\n"
     << "iterations: " << fit.iterations << "\n"
     << "gradient_norm: " << csv::fixed(fit.gradient_norm, 12) << "\n"
     << "clamped_cells: " << fit.clamped_cells << "\n"
     << "coefficients (negative = earlier block placement):\n"
     << "name,estimate,std_error,z,p,stars\n";
  for (const auto& row : standard_errors(fit)) {
    os << row.name << ',' << csv::fixed(row.estimate, 10) << ','
       << csv::fixed(row.std_error, 10) << ',' << csv::fixed(row.z, 4) << ','
       << csv::fixed(row.p, 6) << ',' << row.stars << '\n';
  }
  return os.str();
}

}  // namespace mevcost::probit
