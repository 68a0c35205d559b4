#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pecbf/ecbf.hpp"

namespace pecbf {

/// Standard normal CDF.
double norm_cdf(double x);

/// Inverse standard normal CDF. Throws std::invalid_argument unless 0 < p < 1.
///
/// Rational approximation followed by one Halley step against the erfc-based CDF;
/// absolute error is below 1e-8 on [1e-6, 1 - 1e-6].
double inv_norm_cdf(double p);

/// Independent Gaussian noise on up to two position-rate channels (m/s).
struct GaussianNoise {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> sigma{0.15, 0.15};
  int dims = 1;

  void validate() const;
};

/// Distribution of eps_ego - eps_other for independent per-vehicle noise. When the other
/// vehicle is noise-free the difference is just the ego noise.
GaussianNoise difference_noise(const GaussianNoise& ego, const GaussianNoise& other,
                               bool other_noisy);

/// Constant plus coefficients over the (up to two) decision variables.
struct AffineForm {
  double constant = 0.0;
  Input2 coeffs{0.0, 0.0};

  double operator()(const Input2& u) const { return constant + dot(coeffs, u); }
};

enum class Sense { GreaterEqualZero, LessEqualZero };

struct TightenedBranch {
  AffineForm lhs;
  Sense sense = Sense::GreaterEqualZero;
  std::string description;

  double residual(const Input2& u) const {
    return sense == Sense::GreaterEqualZero ? lhs(u) : -lhs(u);
  }
  bool satisfied(const Input2& u, double tol = 0.0) const { return residual(u) >= -tol; }
};

/// Union of tightened branches; satisfied when any branch is.
struct ChanceConstraintSet {
  std::vector<TightenedBranch> branches;
  bool always_feasible = false;

  bool satisfied(const Input2& u, double tol = 0.0) const;
  /// Largest branch residual at u (+inf when always feasible, -inf when empty).
  double best_residual(const Input2& u) const;
};

/// Deterministic equivalent of P(a z + c >= 0) >= eta for z ~ N(mean, sd^2).
/// sd == 0 is accepted and yields the noise-free condition at z = mean.
TightenedBranch tighten_affine(double a, double c, double noise_mean, double noise_sd, double eta);

/// Two-tail union for P(q2 z^2 + q1 z + q0 >= 0) >= eta, q2 > 0.
///
/// Branches (constant lhs):
///   lower tail: b_lo - mean - sd * inv(eta) >= 0   (mass below the smaller root)
///   upper tail: mean - b_hi - sd * inv(eta) >= 0   (mass above the larger root)
/// A negative discriminant yields always_feasible.
ChanceConstraintSet tighten_quadratic_1d(double q2, double q1, double q0, double noise_mean,
                                         double noise_sd, double eta);

using NoiseSample = std::array<double, 2>;

/// Fraction of n Gaussian samples for which the constraint holds. Deterministic in seed.
double mc_satisfaction(const std::function<bool(const NoiseSample&)>& constraint,
                       const GaussianNoise& noise, std::int64_t n, std::uint64_t seed);

/// Distribution of the scalar noise z that enters a lifted barrier's first derivative.
struct ScalarNoise {
  double mean = 0.0;
  double sd = 0.0;
};

/// A degree-2 barrier after substituting x_dot -> x_dot + eps.
///
/// With w = w_nominal + z the barrier derivatives read
///   h_dot  = slope * w
///   h_ddot = quad * w^2 + c0 + normal . u
/// so every safety condition is a polynomial of degree <= 2 in the scalar z.
/// Lane change: w is the longitudinal gap rate, quad = 2, slope = 2 dx.
/// Intersection: w is the 1-norm rate itself, quad = 0, slope = 1.
struct LiftedBarrier {
  double h = 0.0;
  double quad = 0.0;
  double slope = 1.0;
  double c0 = 0.0;
  Input2 normal{0.0, 0.0};
  double w_nominal = 0.0;
  ScalarNoise noise;
  /// Set when no gain choice can satisfy the pole conditions (e.g. zero gap).
  bool hard_infeasible = false;

  /// Deterministic barrier evaluation at z.
  BarrierEval eval_at(double z) const;

  /// Range of w covered by the central eta mass: [lo, hi].
  std::array<double, 2> w_interval(double eta) const;

  /// Polynomial coefficients (q2, q1, q0) in z of the eCBF residual at input u.
  std::array<double, 3> ecbf_poly(const EcbfGains& g, const Input2& u) const;
  /// (a, c) with v1 = a z + c.
  std::array<double, 2> v1_poly(double p1) const;

  struct Offset {
    double value = 0.0;
    int branch = 0;  // 0 lower tail, 1 upper tail, 2 no real roots (quadratic); 0 for affine
  };
  /// Tightened eCBF condition at level eta is  normal . u + offset >= 0.
  Offset ecbf_offset(const EcbfGains& g, double eta) const;
  /// Tightened first pole condition (v1 >= 0 with confidence eta); independent of u.
  double p1_residual(double p1, double eta) const;
  /// Smallest p1 satisfying p1_residual >= 0 when h > 0 (may be <= 0); NaN when h <= 0.
  double p1_lower_bound(double eta) const;
};

}  // namespace pecbf
