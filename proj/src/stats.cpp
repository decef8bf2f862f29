#include "mevcost/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mevcost::stats {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("normal_quantile: p outside [0,1]");
  }
  // Acklam's rational approximation, then one Halley refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  double e = normal_cdf(x) - p;
  double u = e / normal_pdf(x);
  x = x - u / (1 + 0.5 * x * u);
  return x;
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = std::numeric_limits<double>::epsilon();
  double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1, d = 1 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1) / (a + b + 2)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1 - front * beta_cf(b, a, 1 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (df <= 0) throw std::domain_error("student_t_cdf: df must be positive");
  if (!std::isfinite(t)) return t > 0 ? 1.0 : 0.0;
  if (df > 1e7) return normal_cdf(t);  // t is numerically normal here
  double x = df / (df + t * t);
  double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0 ? 1 - tail : tail;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::domain_error("mean: empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::domain_error("sample_variance: need >= 2 points");
  double m = mean(xs), s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double skewness(std::span<const double> xs) {
  if (xs.size() < 2) throw std::domain_error("skewness: need >= 2 points");
  double m = mean(xs);
  double m2 = 0, m3 = 0;
  for (double x : xs) {
    double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  double n = static_cast<double>(xs.size());
  m2 /= n;
  m3 /= n;
  if (m2 <= 0) throw std::domain_error("skewness: zero variance");
  return m3 / std::pow(m2, 1.5);
}

double quantile_nearest_rank(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::domain_error("quantile: empty sample");
  if (q < 0 || q > 1) throw std::domain_error("quantile: q outside [0,1]");
  std::sort(xs.begin(), xs.end());
  if (q == 0) return xs.front();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(xs.size())));
  return xs[rank - 1];
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b, int sides) {
  if (a.size() < 2 || b.size() < 2)
    throw std::domain_error("welch_t_test: need >= 2 points per sample");
  TTestResult r;
  r.sides = sides;
  r.n_a = a.size();
  r.n_b = b.size();
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  double va = sample_variance(a), vb = sample_variance(b);
  r.sd_a = std::sqrt(va);
  r.sd_b = std::sqrt(vb);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double se2 = va / na + vb / nb;
  if (se2 <= 0) {  // both samples constant
    r.t_stat = 0;
    r.p_value = 1;
    r.df = na + nb - 2;
    return r;
  }
  r.t_stat = (r.mean_a - r.mean_b) / std::sqrt(se2);
  r.df = se2 * se2 /
         ((va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1));
  if (sides == 1) {
    r.p_value = 1 - student_t_cdf(r.t_stat, r.df);
  } else {
    r.p_value = 2 * (1 - student_t_cdf(std::fabs(r.t_stat), r.df));
  }
  return r;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::domain_error("paired_t_test: length mismatch");
  if (a.size() < 2) throw std::domain_error("paired_t_test: need >= 2 pairs");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  TTestResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  r.sd_a = std::sqrt(sample_variance(a));
  r.sd_b = std::sqrt(sample_variance(b));
  double md = mean(diff);
  double vd = sample_variance(diff);
  double n = static_cast<double>(diff.size());
  r.df = n - 1;
  if (vd <= 0) {
    r.t_stat = md == 0 ? 0 : std::numeric_limits<double>::infinity();
    r.p_value = md == 0 ? 1 : 0;
    return r;
  }
  r.t_stat = md / std::sqrt(vd / n);
  r.p_value = 2 * (1 - student_t_cdf(std::fabs(r.t_stat), r.df));
  return r;
}

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

BootstrapRng::BootstrapRng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t BootstrapRng::next_u64() {
  // xoshiro256**
  auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::size_t BootstrapRng::next_index(std::size_t n) {
  // Lemire multiply-shift; bias of n/2^64 is immaterial for resampling.
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double BootstrapRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
  splitmix64(s);
  return splitmix64(s);
}

SkewnessCi skewness_ci(std::span<const double> sample, double level,
                       std::size_t resamples, std::uint64_t seed) {
  if (level <= 0 || level >= 1) throw std::domain_error("skewness_ci: bad level");
  if (resamples == 0) throw std::domain_error("skewness_ci: zero resamples");
  SkewnessCi out;
  out.skewness = skewness(sample);
  BootstrapRng rng(seed);
  std::vector<double> boot(resamples);
  std::vector<double> draw(sample.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < sample.size(); ++i)
      draw[i] = sample[rng.next_index(sample.size())];
    boot[b] = skewness(draw);
  }
  double alpha = (1 - level) / 2;
  out.lower = quantile_nearest_rank(boot, alpha);
  out.upper = quantile_nearest_rank(boot, 1 - alpha);
  return out;
}

double skewness_reduction_test(std::span<const double> raw,
                               std::span<const double> residuals,
                               std::size_t resamples, std::uint64_t seed) {
  if (raw.size() != residuals.size())
    throw std::domain_error("skewness_reduction_test: length mismatch");
  if (raw.size() < 3) throw std::domain_error("skewness_reduction_test: sample too small");
  if (resamples == 0) throw std::domain_error("skewness_reduction_test: zero resamples");
  BootstrapRng rng(seed);
  std::vector<double> raw_draw(raw.size()), res_draw(raw.size());
  std::size_t below = 0, ties = 0;
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      std::size_t j = rng.next_index(raw.size());
      raw_draw[i] = raw[j];
      res_draw[i] = residuals[j];
    }
    double delta = skewness(raw_draw) - skewness(res_draw);
    if (delta < 0)
      ++below;
    else if (delta == 0)
      ++ties;
  }
  // Ties at half weight; identical inputs then give p = 0.5 instead of 1.
  return (static_cast<double>(below) + 0.5 * static_cast<double>(ties)) /
         static_cast<double>(resamples);
}

}  // namespace mevcost::stats
