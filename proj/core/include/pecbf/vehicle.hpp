#pragma once

#include <array>

#include "pecbf/ecbf.hpp"
#include "pecbf/stochastic.hpp"

namespace pecbf {

struct VehicleState {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double psi = 0.0;  // rad, inertial heading
  double v = 0.0;    // m/s

  bool operator==(const VehicleState&) const = default;
};

struct VehicleInput {
  double a = 0.0;     // m/s^2
  double beta = 0.0;  // rad, slip angle

  Input2 as_array() const { return {a, beta}; }
  static VehicleInput from(const Input2& u) { return {u[0], u[1]}; }
  bool operator==(const VehicleInput&) const = default;
};

struct VehicleParams {
  double l_r = 1.5;
  double b_x = 2.4;  // half length
  double b_y = 1.0;  // half width
  double a_min = -5.0;
  double a_max = 3.0;
  double beta_min = -0.2;
  double beta_max = 0.2;

  void validate() const;
  VehicleInput clamp(const VehicleInput& u) const;
  bool within_bounds(const VehicleInput& u, double tol = 0.0) const;
};

using StateVector = std::array<double, 4>;
using InputMatrix = std::array<std::array<double, 2>, 4>;

/// f(x) of the small-angle kinematic bicycle: [v cos psi, v sin psi, 0, 0].
StateVector drift(const VehicleState& s);

/// g(x): rows (x, y, psi, v), columns (a, beta).
InputMatrix input_matrix(const VehicleState& s, const VehicleParams& p);

/// x_dot = f + g u + eps, with eps on the (x, y) rows only.
StateVector state_derivative(const VehicleState& s, const VehicleInput& u, const NoiseSample& eps,
                             const VehicleParams& p);

enum class PlantModel { SmallAngle, Exact };

struct StepResult {
  VehicleState state;
  bool speed_clamped = false;
};

/// One explicit Euler step with zero-order-hold input and noise.
/// Throws std::invalid_argument on non-finite inputs or dt <= 0.
StepResult step(const VehicleState& s, const VehicleInput& u, const NoiseSample& eps, double dt,
                const VehicleParams& p, PlantModel model = PlantModel::SmallAngle);

/// Second derivative of the drift position rates, affine in the input:
/// d/dt (v cos psi) = a cos psi - v^2 sin psi beta / l_r, and likewise for y.
struct PositionAccel {
  AffineForm x;
  AffineForm y;
};
PositionAccel position_accel(const VehicleState& s, const VehicleParams& p);

/// Axis-aligned half extents of a (possibly rotated) vehicle footprint.
struct HalfExtents {
  double x = 0.0;
  double y = 0.0;
};
HalfExtents axis_aligned_extents(const VehicleState& s, const VehicleParams& p,
                                 bool inflate_by_heading);

/// Oriented-rectangle overlap test (separating axis theorem).
bool footprints_overlap(const VehicleState& a, const VehicleParams& pa, const VehicleState& b,
                        const VehicleParams& pb);

}  // namespace pecbf
