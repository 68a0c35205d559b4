#pragma once

#include "pecbf/ecbf.hpp"
#include "pecbf/stochastic.hpp"
#include "pecbf/vehicle.hpp"

namespace pecbf::lane_change {

/// Longitudinal relative quantities between the ego and one other vehicle.
struct PairGeometry {
  double dx = 0.0;     // x_e - x_m
  double dxdot = 0.0;  // drift-rate difference
  AffineForm ddx;      // d^2 dx / dt^2, affine in the ego input
  double r_margin = 1.0;
};

/// (xe - xm)^2 - r^2.
double h_m(double xe, double xm, double r);

/// Position rates are the drift rates v cos psi; the other vehicle's acceleration enters
/// the constant term through its (known) input.
PairGeometry pair_geometry(const VehicleState& ego, const VehicleParams& ego_params,
                           const VehicleState& other, const VehicleParams& other_params,
                           const VehicleInput& other_input, double r_margin);

/// Noise-free barrier evaluation: h = dx^2 - r^2, h_dot = 2 dx dxdot,
/// h_ddot = 2 dxdot^2 + 2 dx ddx(u).
BarrierEval barrier_eval(const PairGeometry& pg);

/// The barrier with dxdot -> dxdot + z, z ~ relative noise on the x channel (dims must be 1
/// or the first axis is used).
LiftedBarrier lift(const PairGeometry& pg, const GaussianNoise& relative_noise);

/// Inputs for which the eCBF condition holds with confidence eta.
///
/// The residual is 2 z^2 + q1 z + q0(u) with q1 independent of u, so each tail branch reduces
/// to one affine condition in u guarded by where the parabola's vertex sits:
///   lower_tail    (vertex >= t+):  q(t+) >= 0
///   upper_tail    (vertex <= t-):  q(t-) >= 0
///   no_real_roots (always):        q0 - q1^2 / 8 >= 0
/// where t+- = mean +- sd * inv_norm_cdf(eta).
ChanceConstraintSet admissible_control_set(const PairGeometry& pg, const EcbfGains& g,
                                           const GaussianNoise& relative_noise, double eta);

enum class GapSign { Positive, Negative, Zero };

struct KalphaReport {
  bool poles_positive = false;
  GapSign gap_sign = GapSign::Zero;
  /// Tightened v1 = h_dot + p1 h >= 0; for dx > 0 this is the lower-tail case and for
  /// dx < 0 the upper-tail case of the sign split. dx = 0 reduces to -p1 r^2 >= 0.
  double p1_residual = 0.0;
  /// Tightened v1_dot + p2 v1 >= 0 at the given input, as a two-tail union.
  ChanceConstraintSet p2_set;
  bool p2_ok = false;
  bool hard_infeasible = false;
  bool feasible = false;
};

KalphaReport kalpha_admissible_set(const PairGeometry& pg, const VehicleInput& u, double p1,
                                   double p2, const GaussianNoise& relative_noise, double eta);

}  // namespace pecbf::lane_change
