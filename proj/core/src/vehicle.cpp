#include "pecbf/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pecbf {

void VehicleParams::validate() const {
  if (!(l_r > 0.0 && b_x > 0.0 && b_y > 0.0)) {
    throw std::invalid_argument("vehicle l_r, b_x and b_y must be positive");
  }
  if (!(a_min <= a_max && beta_min <= beta_max)) {
    throw std::invalid_argument("vehicle input bounds are inverted");
  }
}

VehicleInput VehicleParams::clamp(const VehicleInput& u) const {
  return {std::clamp(u.a, a_min, a_max), std::clamp(u.beta, beta_min, beta_max)};
}

bool VehicleParams::within_bounds(const VehicleInput& u, double tol) const {
  return u.a >= a_min - tol && u.a <= a_max + tol && u.beta >= beta_min - tol &&
         u.beta <= beta_max + tol;
}

StateVector drift(const VehicleState& s) {
  return {s.v * std::cos(s.psi), s.v * std::sin(s.psi), 0.0, 0.0};
}

InputMatrix input_matrix(const VehicleState& s, const VehicleParams& p) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  return {{{0.0, -s.v * sn}, {0.0, s.v * c}, {0.0, s.v / p.l_r}, {1.0, 0.0}}};
}

StateVector state_derivative(const VehicleState& s, const VehicleInput& u, const NoiseSample& eps,
                             const VehicleParams& p) {
  StateVector d = drift(s);
  const InputMatrix g = input_matrix(s, p);
  for (size_t i = 0; i < 4; ++i) d[i] += g[i][0] * u.a + g[i][1] * u.beta;
  d[0] += eps[0];
  d[1] += eps[1];
  return d;
}

StepResult step(const VehicleState& s, const VehicleInput& u, const NoiseSample& eps, double dt,
                const VehicleParams& p, PlantModel model) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be > 0");
  for (double v : {s.x, s.y, s.psi, s.v, u.a, u.beta, eps[0], eps[1]}) {
    if (!std::isfinite(v)) throw std::invalid_argument("step: non-finite state, input or noise");
  }
  StateVector d;
  if (model == PlantModel::SmallAngle) {
    d = state_derivative(s, u, eps, p);
  } else {
    d = {s.v * std::cos(s.psi + u.beta) + eps[0], s.v * std::sin(s.psi + u.beta) + eps[1],
         s.v * std::sin(u.beta) / p.l_r, u.a};
  }
  StepResult r;
  r.state = {s.x + dt * d[0], s.y + dt * d[1], s.psi + dt * d[2], s.v + dt * d[3]};
  if (r.state.v < 0.0) {
    r.state.v = 0.0;
    r.speed_clamped = true;
  }
  return r;
}

PositionAccel position_accel(const VehicleState& s, const VehicleParams& p) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  const double turn = s.v * s.v / p.l_r;
  PositionAccel acc;
  acc.x.coeffs = {c, -turn * sn};
  acc.y.coeffs = {sn, turn * c};
  return acc;
}

HalfExtents axis_aligned_extents(const VehicleState& s, const VehicleParams& p,
                                 bool inflate_by_heading) {
  if (!inflate_by_heading) return {p.b_x, p.b_y};
  const double c = std::abs(std::cos(s.psi));
  const double sn = std::abs(std::sin(s.psi));
  return {p.b_x * c + p.b_y * sn, p.b_x * sn + p.b_y * c};
}

namespace {

struct Corners {
  std::array<std::array<double, 2>, 4> pts;
};

Corners corners(const VehicleState& s, const VehicleParams& p) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  Corners out;
  const double lx[] = {p.b_x, p.b_x, -p.b_x, -p.b_x};
  const double ly[] = {p.b_y, -p.b_y, -p.b_y, p.b_y};
  for (size_t i = 0; i < 4; ++i) {
    out.pts[i] = {s.x + c * lx[i] - sn * ly[i], s.y + sn * lx[i] + c * ly[i]};
  }
  return out;
}

bool separated_along(const Corners& a, const Corners& b, double ax, double ay) {
  double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
  for (const auto& q : a.pts) {
    const double d = q[0] * ax + q[1] * ay;
    amin = std::min(amin, d);
    amax = std::max(amax, d);
  }
  for (const auto& q : b.pts) {
    const double d = q[0] * ax + q[1] * ay;
    bmin = std::min(bmin, d);
    bmax = std::max(bmax, d);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

bool footprints_overlap(const VehicleState& a, const VehicleParams& pa, const VehicleState& b,
                        const VehicleParams& pb) {
  const Corners ca = corners(a, pa);
  const Corners cb = corners(b, pb);
  for (double psi : {a.psi, b.psi}) {
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    if (separated_along(ca, cb, c, s) || separated_along(ca, cb, -s, c)) return false;
  }
  return true;
}

}  // namespace pecbf
