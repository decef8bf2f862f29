#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mevcost::stats {

// Standard normal density, CDF, and inverse CDF. normal_quantile is accurate
// to ~1e-15 (rational approximation polished with one Halley step).
double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

// Student-t CDF via the regularized incomplete beta function.
double student_t_cdf(double t, double df);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

double mean(std::span<const double> xs);
// Unbiased (n-1) sample variance.
double sample_variance(std::span<const double> xs);

// Moment skewness g1 = m3 / m2^(3/2). Throws std::domain_error when the
// sample has fewer than 2 points or zero variance.
double skewness(std::span<const double> xs);

// Nearest-rank empirical quantile: x_(ceil(q*n)) on the sorted sample,
// q in (0, 1]; q == 0 returns the minimum.
double quantile_nearest_rank(std::vector<double> xs, double q);

struct TTestResult {
  double mean_a = 0, mean_b = 0;
  double sd_a = 0, sd_b = 0;
  std::size_t n_a = 0, n_b = 0;
  double t_stat = 0;
  double p_value = 1;
  double df = 0;
  int sides = 2;
};

// Welch two-sample t-test (unequal variances, Welch-Satterthwaite df).
// sides == 1 tests the alternative mean_a > mean_b.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, int sides = 2);

// Paired one-sample t-test of mean(a - b) == 0, two-sided.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Deterministic bootstrap index stream: splitmix-seeded mersenne state with
// Lemire multiply-shift reduction, identical across platforms for a seed.
class BootstrapRng {
 public:
  explicit BootstrapRng(std::uint64_t seed);
  std::uint64_t next_u64();
  // Uniform draw in [0, n).
  std::size_t next_index(std::size_t n);
  double next_double();  // [0, 1)

 private:
  std::uint64_t s_[4];
};

// Derives an independent stream seed; used for per-day / per-task fan-out.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct SkewnessCi {
  double skewness = 0;
  double lower = 0;
  double upper = 0;
};

// Percentile bootstrap CI for skewness at confidence `level` (e.g. 0.99).
SkewnessCi skewness_ci(std::span<const double> sample, double level,
                       std::size_t resamples, std::uint64_t seed);

// Paired bootstrap one-sided test that `residuals` are less skewed than
// `raw`: Delta = skew(raw*) - skew(residuals*) over joint resamples,
// p = P(Delta <= 0), ties counted at half weight.
double skewness_reduction_test(std::span<const double> raw,
                               std::span<const double> residuals,
                               std::size_t resamples, std::uint64_t seed);

}  // namespace mevcost::stats
