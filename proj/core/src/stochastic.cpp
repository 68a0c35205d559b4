#include "pecbf/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace pecbf {
namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kSqrt2Pi = 2.50662827463100050242;

// Acklam's rational approximation, lower half only (p <= 0.5).
double inv_norm_cdf_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // one Halley step
  const double e = 0.5 * std::erfc(-x / kSqrt2) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double inv_norm_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_norm_cdf: p must lie in (0, 1)");
  if (p > 0.5) return -inv_norm_cdf_lower(1.0 - p);
  return inv_norm_cdf_lower(p);
}

void GaussianNoise::validate() const {
  if (dims != 1 && dims != 2) throw std::invalid_argument("noise dims must be 1 or 2");
  for (int i = 0; i < dims; ++i) {
    if (!std::isfinite(mean[i]) || !std::isfinite(sigma[i]) || sigma[i] < 0.0) {
      throw std::invalid_argument("noise mean/sigma must be finite with sigma >= 0");
    }
  }
}

GaussianNoise difference_noise(const GaussianNoise& ego, const GaussianNoise& other,
                               bool other_noisy) {
  GaussianNoise d = ego;
  if (other_noisy) {
    for (int i = 0; i < 2; ++i) {
      d.mean[i] = ego.mean[i] - other.mean[i];
      d.sigma[i] = std::hypot(ego.sigma[i], other.sigma[i]);
    }
  }
  return d;
}

bool ChanceConstraintSet::satisfied(const Input2& u, double tol) const {
  if (always_feasible) return true;
  return std::any_of(branches.begin(), branches.end(),
                     [&](const TightenedBranch& b) { return b.satisfied(u, tol); });
}

double ChanceConstraintSet::best_residual(const Input2& u) const {
  if (always_feasible) return std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& b : branches) best = std::max(best, b.residual(u));
  return best;
}

static void check_tightening_args(double noise_sd, double eta) {
  if (!std::isfinite(noise_sd) || noise_sd < 0.0) {
    throw std::invalid_argument("noise standard deviation must be finite and >= 0");
  }
  if (!(eta >= 0.5 && eta < 1.0)) throw std::invalid_argument("confidence must lie in [0.5, 1)");
}

TightenedBranch tighten_affine(double a, double c, double noise_mean, double noise_sd,
                               double eta) {
  check_tightening_args(noise_sd, eta);
  const double margin = noise_sd > 0.0 ? std::abs(a) * noise_sd * inv_norm_cdf(eta) : 0.0;
  TightenedBranch b;
  b.lhs.constant = c + a * noise_mean - margin;
  b.description = a == 0.0 ? "deterministic" : "affine";
  return b;
}

ChanceConstraintSet tighten_quadratic_1d(double q2, double q1, double q0, double noise_mean,
                                         double noise_sd, double eta) {
  if (!(q2 > 0.0)) throw std::invalid_argument("tighten_quadratic_1d requires q2 > 0");
  check_tightening_args(noise_sd, eta);
  ChanceConstraintSet set;
  const double disc = q1 * q1 - 4.0 * q2 * q0;
  if (disc < 0.0) {
    set.always_feasible = true;
    return set;
  }
  // numerically stable roots
  const double s = std::sqrt(disc);
  double lo, hi;
  if (q1 == 0.0 && s == 0.0) {
    lo = hi = 0.0;
  } else {
    const double q = -0.5 * (q1 + std::copysign(s, q1));
    const double r1 = q / q2;
    const double r2 = q0 / q;
    lo = std::min(r1, r2);
    hi = std::max(r1, r2);
  }
  const double k = noise_sd > 0.0 ? noise_sd * inv_norm_cdf(eta) : 0.0;
  TightenedBranch lower;
  lower.lhs.constant = lo - noise_mean - k;
  lower.description = "lower_tail";
  TightenedBranch upper;
  upper.lhs.constant = noise_mean - hi - k;
  upper.description = "upper_tail";
  set.branches = {lower, upper};
  return set;
}

double mc_satisfaction(const std::function<bool(const NoiseSample&)>& constraint,
                       const GaussianNoise& noise, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("mc_satisfaction: n must be >= 1");
  noise.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::int64_t hits = 0;
  NoiseSample z{0.0, 0.0};
  for (std::int64_t i = 0; i < n; ++i) {
    for (int d = 0; d < noise.dims; ++d) z[d] = noise.mean[d] + noise.sigma[d] * std_normal(rng);
    if (constraint(z)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

BarrierEval LiftedBarrier::eval_at(double z) const {
  const double w = w_nominal + z;
  BarrierEval be;
  be.h = h;
  be.h_dot = slope * w;
  be.c0 = quad * w * w + c0;
  be.c_u = normal;
  be.degree = 2;
  return be;
}

std::array<double, 2> LiftedBarrier::w_interval(double eta) const {
  check_tightening_args(noise.sd, eta);
  const double k = noise.sd > 0.0 ? noise.sd * inv_norm_cdf(eta) : 0.0;
  const double base = w_nominal + noise.mean;
  return {base - k, base + k};
}

std::array<double, 3> LiftedBarrier::ecbf_poly(const EcbfGains& g, const Input2& u) const {
  const double w0 = w_nominal;
  return {quad, 2.0 * quad * w0 + g.k2 * slope,
          quad * w0 * w0 + c0 + dot(normal, u) + g.k2 * slope * w0 + g.k1 * h};
}

std::array<double, 2> LiftedBarrier::v1_poly(double p1) const {
  return {slope, slope * w_nominal + p1 * h};
}

LiftedBarrier::Offset LiftedBarrier::ecbf_offset(const EcbfGains& g, double eta) const {
  const auto [lo, hi] = w_interval(eta);
  const double lin = g.k2 * slope;
  double w;
  int branch = 0;
  if (quad > 0.0) {
    const double vertex = -lin / (2.0 * quad);
    if (vertex >= hi) {
      w = hi;
      branch = 0;
    } else if (vertex <= lo) {
      w = lo;
      branch = 1;
    } else {
      w = vertex;
      branch = 2;
    }
  } else {
    w = lin >= 0.0 ? lo : hi;
  }
  return Offset{quad * w * w + lin * w + c0 + g.k1 * h, branch};
}

double LiftedBarrier::p1_residual(double p1, double eta) const {
  const auto [lo, hi] = w_interval(eta);
  return p1 * h + (slope >= 0.0 ? slope * lo : slope * hi);
}

double LiftedBarrier::p1_lower_bound(double eta) const {
  if (!(h > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return -p1_residual(0.0, eta) / h;
}

}  // namespace pecbf
