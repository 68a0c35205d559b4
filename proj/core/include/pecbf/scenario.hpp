#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pecbf/controller.hpp"
#include "pecbf/nominal.hpp"
#include "pecbf/path.hpp"
#include "pecbf/stochastic.hpp"
#include "pecbf/vehicle.hpp"

namespace pecbf {

enum class ScenarioKind { LaneChange, IntersectionLeftTurn, IntersectionStraight };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Two-lane highway: ego in the current lane (y = 0) must merge into the target lane
/// between the front target and the back target. Positions are relative to the ego.
struct LaneChangeLayout {
  double lane_width = 3.5;
  double r_margin = 4.8;  // one vehicle length
  Range ego_speed{18.0, 22.0};
  Range front_car_gap{25.0, 45.0};
  Range front_car_speed{15.0, 22.0};
  Range front_target_gap{8.0, 25.0};
  Range front_target_speed{17.0, 23.0};
  Range back_target_gap{8.0, 25.0};
  Range back_target_speed{17.0, 24.0};
  /// Sigmoid midpoint ahead of the ego start and its length scale.
  Range merge_point{25.0, 40.0};
  double merge_length = 6.0;
  double success_tolerance = 0.2;
  /// Nominal speed reference: follow the merge gap (gap_gain > 0) or hold the initial speed
  /// (gap_gain == 0 and track_gap false).
  bool track_gap = false;
  double gap_gain = 0.2;
  double c1 = 1.0;
  double c2 = 0.1;
};

/// Four-way intersection of two-lane roads centred at the origin, right-hand traffic.
/// Ego approaches northbound in the right lane.
struct IntersectionLayout {
  double lane_width = 3.5;
  double r_extra = 0.5;
  bool inflate_boxes = true;
  Range ego_start{18.0, 24.0};    // distance of the ego before the intersection centre
  Range ego_speed{7.0, 10.0};
  Range other_start{18.0, 32.0};  // distance of other vehicles before the centre
  Range other_speed{7.0, 11.0};
  double ego_v_ref = 9.0;
  double exit_distance = 20.0;    // path extent after the intersection
  double c1 = 1.0;
  double c2 = 10.0;
};

/// Everything needed to run one trial (or, with a trial count, a batch).
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::LaneChange;
  Variant variant = Variant::Proposed;
  double dt = 0.1;
  double t_max = 20.0;
  /// Per-vehicle velocity-channel noise (standard deviations, m/s).
  GaussianNoise noise{{0.0, 0.0}, {0.15, 0.15}, 1};
  bool noisy_others = true;
  PlantModel plant = PlantModel::SmallAngle;
  VehicleParams vehicle;
  ControllerConfig controller;
  LaneChangeLayout lane_change;
  IntersectionLayout intersection;
  TrackerOptions tracker;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
  /// Controller config with the variant flags and per-scenario weights applied.
  ControllerConfig effective_controller() const;
};

/// Defaults for a scenario kind: eta 0.99 / 0.9999, horizon 20 s / 15 s, noise dims 1 / 2.
ScenarioSpec default_spec(ScenarioKind kind);

struct Agent {
  VehicleState state;
  VehicleParams params;
  VehicleInput input;  // held constant
  std::string name;
};

struct World {
  ScenarioKind kind = ScenarioKind::LaneChange;
  VehicleState ego;
  std::vector<Agent> others;
  LaneChangeReference lane_ref;  // lane change only
  ReferencePath ego_path;        // intersection only
};

/// Samples initial conditions until every pairwise barrier is non-negative and the layout's
/// ordering holds. Throws ConfigError after 1000 attempts.
World generate_scenario(const ScenarioSpec& spec, std::uint64_t scenario_seed);

/// Stateless seed derivation (splitmix64 mixing of the inputs).
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace pecbf
