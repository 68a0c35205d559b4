#include "pecbf/lane_change.hpp"

#include <cmath>
#include <stdexcept>

namespace pecbf::lane_change {

double h_m(double xe, double xm, double r) {
  const double d = xe - xm;
  return d * d - r * r;
}

PairGeometry pair_geometry(const VehicleState& ego, const VehicleParams& ego_params,
                           const VehicleState& other, const VehicleParams& other_params,
                           const VehicleInput& other_input, double r_margin) {
  if (!(r_margin > 0.0)) throw std::invalid_argument("safety margin r must be positive");
  const PositionAccel ae = position_accel(ego, ego_params);
  const PositionAccel ao = position_accel(other, other_params);
  PairGeometry pg;
  pg.dx = ego.x - other.x;
  pg.dxdot = drift(ego)[0] - drift(other)[0];
  pg.ddx.coeffs = ae.x.coeffs;
  pg.ddx.constant = ae.x.constant - ao.x(other_input.as_array());
  pg.r_margin = r_margin;
  return pg;
}

BarrierEval barrier_eval(const PairGeometry& pg) {
  BarrierEval be;
  be.h = pg.dx * pg.dx - pg.r_margin * pg.r_margin;
  be.h_dot = 2.0 * pg.dx * pg.dxdot;
  be.c0 = 2.0 * pg.dxdot * pg.dxdot + 2.0 * pg.dx * pg.ddx.constant;
  be.c_u = {2.0 * pg.dx * pg.ddx.coeffs[0], 2.0 * pg.dx * pg.ddx.coeffs[1]};
  be.degree = 2;
  return be;
}

LiftedBarrier lift(const PairGeometry& pg, const GaussianNoise& relative_noise) {
  relative_noise.validate();
  LiftedBarrier lb;
  lb.h = pg.dx * pg.dx - pg.r_margin * pg.r_margin;
  lb.quad = 2.0;
  lb.slope = 2.0 * pg.dx;
  lb.c0 = 2.0 * pg.dx * pg.ddx.constant;
  lb.normal = {2.0 * pg.dx * pg.ddx.coeffs[0], 2.0 * pg.dx * pg.ddx.coeffs[1]};
  lb.w_nominal = pg.dxdot;
  lb.noise = {relative_noise.mean[0], relative_noise.sigma[0]};
  lb.hard_infeasible = pg.dx == 0.0;
  return lb;
}

ChanceConstraintSet admissible_control_set(const PairGeometry& pg, const EcbfGains& g,
                                           const GaussianNoise& relative_noise, double eta) {
  if (relative_noise.dims != 1) throw std::invalid_argument("lane change noise must be 1-D");
  const LiftedBarrier lb = lift(pg, relative_noise);
  // residual(z) = 2 z^2 + q1 z + q0c + normal . u
  const auto q = lb.ecbf_poly(g, {0.0, 0.0});
  const double q1 = q[1];
  const double q0c = q[2];
  const auto [t_minus, t_plus] = lb.w_interval(eta);
  const double m_minus = t_minus - lb.w_nominal;
  const double m_plus = t_plus - lb.w_nominal;
  const double vertex = -q1 / 4.0;

  auto at = [&](double z) { return 2.0 * z * z + q1 * z + q0c; };
  ChanceConstraintSet set;
  if (vertex >= m_plus) {
    set.branches.push_back({AffineForm{at(m_plus), lb.normal}, Sense::GreaterEqualZero,
                            "lower_tail"});
  }
  if (vertex <= m_minus) {
    set.branches.push_back({AffineForm{at(m_minus), lb.normal}, Sense::GreaterEqualZero,
                            "upper_tail"});
  }
  set.branches.push_back({AffineForm{q0c - q1 * q1 / 8.0, lb.normal}, Sense::GreaterEqualZero,
                          "no_real_roots"});
  return set;
}

KalphaReport kalpha_admissible_set(const PairGeometry& pg, const VehicleInput& u, double p1,
                                   double p2, const GaussianNoise& relative_noise, double eta) {
  if (relative_noise.dims != 1) throw std::invalid_argument("lane change noise must be 1-D");
  KalphaReport rep;
  rep.poles_positive = p1 > 0.0 && p2 > 0.0;
  rep.gap_sign = pg.dx > 0.0 ? GapSign::Positive : (pg.dx < 0.0 ? GapSign::Negative : GapSign::Zero);
  rep.hard_infeasible = rep.gap_sign == GapSign::Zero;

  const LiftedBarrier lb = lift(pg, relative_noise);
  const auto v1 = lb.v1_poly(p1);
  rep.p1_residual =
      tighten_affine(v1[0], v1[1], lb.noise.mean, lb.noise.sd, eta).lhs.constant;

  // v1_dot + p2 v1 expands to the eCBF residual with k1 = p1 p2, k2 = p1 + p2
  const EcbfGains g{p1, p2, p1 * p2, p1 + p2};
  const auto q = lb.ecbf_poly(g, u.as_array());
  rep.p2_set = tighten_quadratic_1d(q[0], q[1], q[2], lb.noise.mean, lb.noise.sd, eta);
  rep.p2_ok = rep.p2_set.satisfied({0.0, 0.0});

  rep.feasible = rep.poles_positive && !rep.hard_infeasible && rep.p1_residual >= 0.0 && rep.p2_ok;
  return rep;
}

}  // namespace pecbf::lane_change
