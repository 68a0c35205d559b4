#include "pecbf/intersection.hpp"

#include <cmath>
#include <stdexcept>

namespace pecbf::intersection {
namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Sign used for d|d|/dt; see planar_pair.
int resolve_sign(double d, double rate, double accel0, bool& degenerate) {
  degenerate = false;
  if (d != 0.0) return sign_of(d);
  degenerate = true;
  if (rate != 0.0) return sign_of(rate);
  if (accel0 != 0.0) return -sign_of(accel0);
  return 1;
}

}  // namespace

PlanarPair planar_pair(const VehicleState& ego, const VehicleParams& ego_params,
                       const VehicleState& other, const VehicleParams& other_params,
                       const VehicleInput& other_input, const PairOptions& opts) {
  if (opts.r_extra < 0.0) throw std::invalid_argument("r_extra must be >= 0");
  const PositionAccel ae = position_accel(ego, ego_params);
  const PositionAccel ao = position_accel(other, other_params);
  const auto de = drift(ego);
  const auto dox = drift(other);
  const Input2 uo = other_input.as_array();

  PlanarPair pp;
  pp.dx = ego.x - other.x;
  pp.dy = ego.y - other.y;
  pp.dxdot = de[0] - dox[0];
  pp.dydot = de[1] - dox[1];
  pp.ddx = {ae.x.constant - ao.x(uo), ae.x.coeffs};
  pp.ddy = {ae.y.constant - ao.y(uo), ae.y.coeffs};
  pp.sx = resolve_sign(pp.dx, pp.dxdot, pp.ddx.constant, pp.degenerate_x);
  pp.sy = resolve_sign(pp.dy, pp.dydot, pp.ddy.constant, pp.degenerate_y);

  const HalfExtents he = axis_aligned_extents(ego, ego_params, opts.inflate_boxes);
  const HalfExtents ho = axis_aligned_extents(other, other_params, opts.inflate_boxes);
  pp.bx_ego = he.x;
  pp.by_ego = he.y;
  pp.bx_other = ho.x;
  pp.by_other = ho.y;
  pp.r_extra = opts.r_extra;
  return pp;
}

double h_o(const PlanarPair& pp) {
  return std::abs(pp.dx) - pp.bx_ego - pp.bx_other + std::abs(pp.dy) - pp.by_ego - pp.by_other -
         pp.r_extra;
}

BarrierEval barrier_derivatives(const PlanarPair& pp) {
  BarrierEval be;
  be.h = h_o(pp);
  be.h_dot = pp.sx * pp.dxdot + pp.sy * pp.dydot;
  be.c0 = pp.sx * pp.ddx.constant + pp.sy * pp.ddy.constant;
  be.c_u = {pp.sx * pp.ddx.coeffs[0] + pp.sy * pp.ddy.coeffs[0],
            pp.sx * pp.ddx.coeffs[1] + pp.sy * pp.ddy.coeffs[1]};
  be.degree = 2;
  return be;
}

LiftedBarrier lift(const PlanarPair& pp, const GaussianNoise& relative_noise) {
  relative_noise.validate();
  if (relative_noise.dims != 2) throw std::invalid_argument("intersection noise must be 2-D");
  const BarrierEval be = barrier_derivatives(pp);
  LiftedBarrier lb;
  lb.h = be.h;
  lb.quad = 0.0;
  lb.slope = 1.0;
  lb.c0 = be.c0;
  lb.normal = be.c_u;
  lb.w_nominal = be.h_dot;
  lb.noise.mean = pp.sx * relative_noise.mean[0] + pp.sy * relative_noise.mean[1];
  lb.noise.sd = std::hypot(relative_noise.sigma[0], relative_noise.sigma[1]);
  return lb;
}

ChanceConstraintSet admissible_control_set_2d(const PlanarPair& pp, const EcbfGains& g,
                                              const GaussianNoise& relative_noise, double eta) {
  const LiftedBarrier lb = lift(pp, relative_noise);
  const double c = lb.c0 + g.k2 * lb.w_nominal + g.k1 * lb.h;
  TightenedBranch b = tighten_affine(g.k2, c, lb.noise.mean, lb.noise.sd, eta);
  b.lhs.coeffs = lb.normal;
  b.description = "affine";
  ChanceConstraintSet set;
  set.branches.push_back(b);
  return set;
}

KalphaReport kalpha_admissible_set_2d(const PlanarPair& pp, const VehicleInput& u, double p1,
                                      double p2, const GaussianNoise& relative_noise, double eta) {
  const LiftedBarrier lb = lift(pp, relative_noise);
  KalphaReport rep;
  rep.poles_positive = p1 > 0.0 && p2 > 0.0;
  rep.degenerate = pp.degenerate();
  const auto v1 = lb.v1_poly(p1);
  rep.p1_residual = tighten_affine(v1[0], v1[1], lb.noise.mean, lb.noise.sd, eta).lhs.constant;
  const EcbfGains g{p1, p2, p1 * p2, p1 + p2};
  const auto q = lb.ecbf_poly(g, u.as_array());
  rep.p2_residual = tighten_affine(q[1], q[2], lb.noise.mean, lb.noise.sd, eta).lhs.constant;
  rep.feasible = rep.poles_positive && rep.p1_residual >= 0.0 && rep.p2_residual >= 0.0;
  return rep;
}

}  // namespace pecbf::intersection
