#pragma once

#include "pecbf/ecbf.hpp"
#include "pecbf/stochastic.hpp"
#include "pecbf/vehicle.hpp"

namespace pecbf::intersection {

/// Planar relative quantities for the 1-norm barrier between the ego and one other vehicle.
struct PlanarPair {
  double dx = 0.0;
  double dy = 0.0;
  double dxdot = 0.0;
  double dydot = 0.0;
  AffineForm ddx;
  AffineForm ddy;
  int sx = 1;
  int sy = 1;
  double bx_ego = 2.4;
  double bx_other = 2.4;
  double by_ego = 1.0;
  double by_other = 1.0;
  double r_extra = 0.5;
  /// Set when dx (resp. dy) is exactly zero and the sign was substituted.
  bool degenerate_x = false;
  bool degenerate_y = false;

  bool degenerate() const { return degenerate_x || degenerate_y; }
};

struct PairOptions {
  double r_extra = 0.5;
  /// Half extents follow the heading (|b_x cos psi| + |b_y sin psi|, ...) when true,
  /// otherwise the body-frame values are used as axis-aligned extents.
  bool inflate_boxes = true;
};

/// Builds the pair from vehicle states. Box extents are evaluated at the current headings
/// and treated as constants over the step. For dx == 0 the sign of dxdot is used, and if
/// that is zero too the sign that makes sx * ddx(0) non-positive (closing).
PlanarPair planar_pair(const VehicleState& ego, const VehicleParams& ego_params,
                       const VehicleState& other, const VehicleParams& other_params,
                       const VehicleInput& other_input, const PairOptions& opts);

/// |dx| - bx_e - bx_o + |dy| - by_e - by_o - r.
double h_o(const PlanarPair& pp);

/// h_dot = sx dxdot + sy dydot, h_ddot = sx ddx(u) + sy ddy(u).
BarrierEval barrier_derivatives(const PlanarPair& pp);

/// Lift with z = sx de1 + sy de2 ~ N(sx m1 + sy m2, s1^2 + s2^2), where (de1, de2) is the
/// relative noise (dims must be 2).
LiftedBarrier lift(const PlanarPair& pp, const GaussianNoise& relative_noise);

/// Single affine branch: h_ddot(u) + k2 (h_dot + zbar) - |k2| sd_z inv(eta) + k1 h >= 0.
ChanceConstraintSet admissible_control_set_2d(const PlanarPair& pp, const EcbfGains& g,
                                              const GaussianNoise& relative_noise, double eta);

struct KalphaReport {
  bool poles_positive = false;
  bool degenerate = false;
  double p1_residual = 0.0;
  double p2_residual = 0.0;
  bool feasible = false;
};

KalphaReport kalpha_admissible_set_2d(const PlanarPair& pp, const VehicleInput& u, double p1,
                                      double p2, const GaussianNoise& relative_noise, double eta);

}  // namespace pecbf::intersection
