#include "pecbf/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pecbf/errors.hpp"
#include "pecbf/lane_change.hpp"
#include "pecbf/intersection.hpp"

namespace pecbf {

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::LaneChange: return "lane_change";
    case ScenarioKind::IntersectionLeftTurn: return "intersection_left_turn";
    case ScenarioKind::IntersectionStraight: return "intersection_straight";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "lane_change") return ScenarioKind::LaneChange;
  if (s == "intersection_left_turn") return ScenarioKind::IntersectionLeftTurn;
  if (s == "intersection_straight") return ScenarioKind::IntersectionStraight;
  throw ConfigError("unknown scenario kind: " + s);
}

namespace {

void check_range(const Range& r, const char* name, bool positive = false) {
  if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi)) {
    throw ConfigError(std::string("invalid range for ") + name);
  }
  if (positive && !(r.lo > 0.0)) throw ConfigError(std::string(name) + " must be positive");
}

bool is_intersection(ScenarioKind k) { return k != ScenarioKind::LaneChange; }

}  // namespace

void ScenarioSpec::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max must be > 0");
  try {
    noise.validate();
    vehicle.validate();
    effective_controller().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (noise.dims != (is_intersection(kind) ? 2 : 1)) {
    throw ConfigError("noise dims must be 1 for lane change and 2 for intersections");
  }
  const auto& lc = lane_change;
  if (!(lc.lane_width > 0.0 && lc.r_margin > 0.0 && lc.merge_length > 0.0)) {
    throw ConfigError("lane change geometry must be positive");
  }
  check_range(lc.ego_speed, "lane_change.ego_speed");
  check_range(lc.front_car_gap, "lane_change.front_car_gap", true);
  check_range(lc.front_car_speed, "lane_change.front_car_speed");
  check_range(lc.front_target_gap, "lane_change.front_target_gap", true);
  check_range(lc.front_target_speed, "lane_change.front_target_speed");
  check_range(lc.back_target_gap, "lane_change.back_target_gap", true);
  check_range(lc.back_target_speed, "lane_change.back_target_speed");
  check_range(lc.merge_point, "lane_change.merge_point");
  const auto& ix = intersection;
  if (!(ix.lane_width > 0.0 && ix.r_extra >= 0.0 && ix.exit_distance > 0.0)) {
    throw ConfigError("intersection geometry must be positive");
  }
  check_range(ix.ego_start, "intersection.ego_start", true);
  check_range(ix.ego_speed, "intersection.ego_speed");
  check_range(ix.other_start, "intersection.other_start", true);
  check_range(ix.other_speed, "intersection.other_speed");
  if (tracker.horizon < 1 || !(tracker.dt > 0.0)) throw ConfigError("invalid tracker settings");
}

ControllerConfig ScenarioSpec::effective_controller() const {
  ControllerConfig c = controller.with_variant(variant);
  if (is_intersection(kind)) {
    c.c1 = intersection.c1;
    c.c2 = intersection.c2;
  } else {
    c.c1 = lane_change.c1;
    c.c2 = lane_change.c2;
  }
  return c;
}

ScenarioSpec default_spec(ScenarioKind kind) {
  ScenarioSpec s;
  s.kind = kind;
  if (is_intersection(kind)) {
    s.t_max = 15.0;
    s.controller.eta = 0.9999;
    s.noise.dims = 2;
    s.tracker.v_ref = s.intersection.ego_v_ref;
    s.controller.desired_poles = {2.0, 2.0};
    s.controller.input_weights = {1.0, 2500.0};
    // passing the kink of the 1-norm barrier at speed needs transient poles well above 10
    s.controller.pole_max = 30.0;
    s.intersection.c2 = 10.0;
    s.tracker.horizon = 15;
    s.tracker.dt = 0.2;
    s.tracker.w_clearance = 10.0;
    if (kind == ScenarioKind::IntersectionLeftTurn) {
      // waiting beside the oncoming car is never inside the safe set, so it starts far enough
      // out for the ego to turn first
      s.intersection.other_start = {30.0, 50.0};
      s.tracker.clearance = 2.0;
    } else {
      s.tracker.clearance = 6.0;
    }
  } else {
    s.t_max = 20.0;
    s.controller.eta = 0.99;
    s.controller.desired_poles = {0.5, 0.5};
    s.controller.input_weights = {1.0, 2500.0};
    s.noise.dims = 1;
  }
  return s;
}

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(a) ^ (b + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return derive_seed(derive_seed(a, b), c);
}

namespace {

double draw(std::mt19937_64& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

World lane_change_world(const ScenarioSpec& spec, std::mt19937_64& rng) {
  const auto& L = spec.lane_change;
  World w;
  w.kind = ScenarioKind::LaneChange;
  w.ego = {0.0, 0.0, 0.0, draw(rng, L.ego_speed)};
  const VehicleParams& p = spec.vehicle;
  w.others.push_back({{draw(rng, L.front_car_gap), 0.0, 0.0, draw(rng, L.front_car_speed)}, p, {}, "front_car"});
  w.others.push_back({{draw(rng, L.front_target_gap), L.lane_width, 0.0, draw(rng, L.front_target_speed)}, p, {}, "front_target"});
  w.others.push_back({{-draw(rng, L.back_target_gap), L.lane_width, 0.0, draw(rng, L.back_target_speed)}, p, {}, "back_target"});
  w.lane_ref.y_start = 0.0;
  w.lane_ref.y_target = L.lane_width;
  w.lane_ref.x_mid = draw(rng, L.merge_point);
  w.lane_ref.length = L.merge_length;
  w.lane_ref.gap_gain = L.gap_gain;
  w.lane_ref.v_set = w.ego.v;
  return w;
}

World intersection_world(const ScenarioSpec& spec, std::mt19937_64& rng) {
  const auto& I = spec.intersection;
  const double half = 0.5 * I.lane_width;
  constexpr double pi = std::numbers::pi;
  World w;
  w.kind = spec.kind;
  const double d_ego = draw(rng, I.ego_start);
  w.ego = {half, -d_ego, 0.5 * pi, draw(rng, I.ego_speed)};
  const VehicleParams& p = spec.vehicle;
  if (spec.kind == ScenarioKind::IntersectionLeftTurn) {
    w.ego_path = ReferencePath::straight({half, -d_ego - 10.0}, {half, -half});
    w.ego_path.arc(I.lane_width, 0.5 * pi).extend(I.exit_distance);
    const double d = draw(rng, I.other_start);
    w.others.push_back({{-half, d, -0.5 * pi, draw(rng, I.other_speed)}, p, {}, "oncoming"});
  } else {
    w.ego_path = ReferencePath::straight({half, -d_ego - 10.0}, {half, I.exit_distance});
    const double d1 = draw(rng, I.other_start);
    w.others.push_back({{-d1, -half, 0.0, draw(rng, I.other_speed)}, p, {}, "from_west"});
    const double d2 = draw(rng, I.other_start);
    w.others.push_back({{d2, half, pi, draw(rng, I.other_speed)}, p, {}, "from_east"});
  }
  return w;
}

bool initially_safe(const ScenarioSpec& spec, const World& w) {
  for (const auto& o : w.others) {
    if (w.kind == ScenarioKind::LaneChange) {
      if (lane_change::h_m(w.ego.x, o.state.x, spec.lane_change.r_margin) < 0.0) return false;
      if (!(o.state.x > w.ego.x) && o.name != "back_target") return false;
    } else {
      const auto pp = intersection::planar_pair(w.ego, spec.vehicle, o.state, o.params, o.input,
                                                {spec.intersection.r_extra,
                                                 spec.intersection.inflate_boxes});
      if (intersection::h_o(pp) < 0.0) return false;
    }
  }
  return true;
}

}  // namespace

World generate_scenario(const ScenarioSpec& spec, std::uint64_t scenario_seed) {
  std::mt19937_64 rng(scenario_seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    World w = spec.kind == ScenarioKind::LaneChange ? lane_change_world(spec, rng)
                                                     : intersection_world(spec, rng);
    if (initially_safe(spec, w)) return w;
  }
  throw ConfigError("scenario generation failed after 1000 attempts; check the initial ranges");
}

}  // namespace pecbf
