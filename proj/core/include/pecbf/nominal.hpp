#pragma once

#include <vector>

#include "pecbf/intersection.hpp"
#include "pecbf/path.hpp"
#include "pecbf/vehicle.hpp"

namespace pecbf {

/// Sigmoid lane-change reference in x with a speed hold.
struct LaneChangeReference {
  double y_start = 0.0;
  double y_target = 3.5;
  double x_mid = 40.0;     // x where half the lateral offset is reached
  double length = 8.0;     // sigmoid length scale (m)
  double v_set = 20.0;
  double speed_gain = 0.8;     // 1/s
  double lateral_omega = 0.8;  // rad/s, natural frequency of the lateral loop
  double lateral_zeta = 1.0;
  double gap_gain = 0.2;  // 1/s

  double y_ref(double x) const;
  double heading_ref(double x) const;
};

/// The two target-lane vehicles bounding the gap the ego merges into.
struct MergeGap {
  double x_front = 0.0;
  double v_front = 0.0;
  double x_back = 0.0;
  double v_back = 0.0;
};

/// Gain-scheduled pole placement on the linearized lateral error dynamics
/// (e_dot = v (psi - psi_ref) + v beta, psi_dot = v beta / l_r) plus proportional speed hold.
/// With a gap the speed reference follows the gap: mean target speed plus gap_gain times the
/// offset to the gap centre.
VehicleInput nominal_lane_change(const VehicleState& ego, const VehicleParams& params,
                                 const LaneChangeReference& ref);
VehicleInput nominal_lane_change(const VehicleState& ego, const VehicleParams& params,
                                 const LaneChangeReference& ref, const MergeGap& gap);

struct TrackerOptions {
  int horizon = 10;
  double dt = 0.1;
  double v_ref = 10.0;
  double w_lateral = 1.0;
  double w_heading = 2.0;
  double w_speed = 0.2;
  int lattice_a = 5;
  int lattice_beta = 9;
  int refinements = 3;
  /// Penalty on predicted 1-norm clearance below `clearance` (0 disables it).
  double w_clearance = 0.0;
  double clearance = 2.0;
  intersection::PairOptions pair;
};

/// Another vehicle as the tracker predicts it: current state, input held constant.
struct PredictedVehicle {
  VehicleState state;
  VehicleParams params;
  VehicleInput input;
};

/// Receding-horizon path tracker: holds each lattice input for the horizon, rolls the
/// noise-free model forward and keeps the cheapest input; the lattice is then shrunk around
/// the winner a few times.
VehicleInput nominal_intersection(const VehicleState& ego, const VehicleParams& params,
                                  const ReferencePath& path, const TrackerOptions& opts,
                                  const std::vector<PredictedVehicle>& others = {});

/// Horizon cost used by nominal_intersection, exposed for tests.
double tracking_cost(const VehicleState& ego, const VehicleParams& params,
                     const ReferencePath& path, const TrackerOptions& opts,
                     const VehicleInput& u, const std::vector<PredictedVehicle>& others = {});

}  // namespace pecbf
