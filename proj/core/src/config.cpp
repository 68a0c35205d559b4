#include "pecbf/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pecbf/errors.hpp"

namespace pecbf {

using nlohmann::json;

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

std::string plant_name(PlantModel m) { return m == PlantModel::Exact ? "exact" : "small_angle"; }

json to_json_tree(const ScenarioSpec& s) {
  const auto& c = s.controller;
  const auto& v = s.vehicle;
  const auto& L = s.lane_change;
  const auto& I = s.intersection;
  const auto& T = s.tracker;
  json j;
  j["scenario"] = {{"kind", to_string(s.kind)},   {"variant", to_string(s.variant)},
                   {"dt", s.dt},                  {"t_max", s.t_max},
                   {"seed", s.seed},              {"plant", plant_name(s.plant)}};
  j["noise"] = {{"mean", {s.noise.mean[0], s.noise.mean[1]}},
                {"sigma", {s.noise.sigma[0], s.noise.sigma[1]}},
                {"noisy_others", s.noisy_others}};
  j["controller"] = {{"eta", c.eta},
                     {"desired_poles", {c.desired_poles[0], c.desired_poles[1]}},
                     {"input_weights", {c.input_weights[0], c.input_weights[1]}},
                     {"pole_min", c.pole_min},
                     {"pole_max", c.pole_max},
                     {"pole_grid_size", c.pole_grid_size},
                     {"pole_multipliers", c.pole_multipliers},
                     {"refine_tol", c.refine_tol}};
  j["vehicle"] = {{"l_r", v.l_r},     {"b_x", v.b_x},         {"b_y", v.b_y},
                  {"a_min", v.a_min}, {"a_max", v.a_max},     {"beta_min", v.beta_min},
                  {"beta_max", v.beta_max}};
  j["lane_change"] = {{"lane_width", L.lane_width},
                      {"r_margin", L.r_margin},
                      {"ego_speed", range_json(L.ego_speed)},
                      {"front_car_gap", range_json(L.front_car_gap)},
                      {"front_car_speed", range_json(L.front_car_speed)},
                      {"front_target_gap", range_json(L.front_target_gap)},
                      {"front_target_speed", range_json(L.front_target_speed)},
                      {"back_target_gap", range_json(L.back_target_gap)},
                      {"back_target_speed", range_json(L.back_target_speed)},
                      {"merge_point", range_json(L.merge_point)},
                      {"merge_length", L.merge_length},
                      {"success_tolerance", L.success_tolerance},
                      {"track_gap", L.track_gap},
                      {"gap_gain", L.gap_gain},
                      {"c1", L.c1},
                      {"c2", L.c2}};
  j["intersection"] = {{"lane_width", I.lane_width},
                       {"r_extra", I.r_extra},
                       {"inflate_boxes", I.inflate_boxes},
                       {"ego_start", range_json(I.ego_start)},
                       {"ego_speed", range_json(I.ego_speed)},
                       {"other_start", range_json(I.other_start)},
                       {"other_speed", range_json(I.other_speed)},
                       {"ego_v_ref", I.ego_v_ref},
                       {"exit_distance", I.exit_distance},
                       {"c1", I.c1},
                       {"c2", I.c2}};
  j["tracker"] = {{"horizon", T.horizon},       {"dt", T.dt},
                  {"w_lateral", T.w_lateral},
                  {"w_heading", T.w_heading},   {"w_speed", T.w_speed},
                  {"lattice_a", T.lattice_a},   {"lattice_beta", T.lattice_beta},
                  {"refinements", T.refinements},
                  {"w_clearance", T.w_clearance}, {"clearance", T.clearance}};
  return j;
}

// Reads known keys from one section and rejects anything else.
class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (root.contains(name)) {
      node_ = &root.at(name);
      if (!node_->is_object()) throw ConfigError(std::string("section ") + name + " must be an object");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("bad value for ") + name_ + "." + key);
    }
  }

  void pair(const char* key, std::array<double, 2>& out) {
    seen_.push_back(key);
    if (!node_ || !node_->contains(key)) return;
    const json& v = node_->at(key);
    if (v.is_number()) {
      out = {v.get<double>(), v.get<double>()};
    } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      out = {v[0].get<double>(), v[1].get<double>()};
    } else {
      throw ConfigError(std::string("expected number or [x, y] for ") + name_ + "." + key);
    }
  }

  void range(const char* key, Range& out) {
    std::array<double, 2> a{out.lo, out.hi};
    pair(key, a);
    out = {a[0], a[1]};
  }

  void finish() const {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        throw ConfigError("unknown config key " + name_ + "." + it.key());
      }
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::vector<std::string> seen_;
};

}  // namespace

std::string spec_to_json(const ScenarioSpec& spec, int indent) {
  return to_json_tree(spec).dump(indent);
}

ScenarioSpec spec_from_json(const std::string& text, const ScenarioSpec& base) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  for (auto it = root.begin(); it != root.end(); ++it) {
    static const char* known[] = {"scenario", "noise",        "controller", "vehicle",
                                  "lane_change", "intersection", "tracker"};
    if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
      throw ConfigError("unknown config section " + it.key());
    }
  }

  ScenarioSpec s = base;
  {
    Section sec(root, "scenario");
    std::string kind = to_string(s.kind);
    sec.get("kind", kind);
    const ScenarioKind k = scenario_kind_from_string(kind);
    if (k != s.kind) {
      ScenarioSpec fresh = default_spec(k);
      fresh.variant = s.variant;
      fresh.seed = s.seed;
      s = fresh;
    }
    std::string variant = to_string(s.variant);
    sec.get("variant", variant);
    try {
      s.variant = variant_from_string(variant);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    sec.get("dt", s.dt);
    sec.get("t_max", s.t_max);
    sec.get("seed", s.seed);
    std::string plant = plant_name(s.plant);
    sec.get("plant", plant);
    if (plant == "exact") {
      s.plant = PlantModel::Exact;
    } else if (plant == "small_angle") {
      s.plant = PlantModel::SmallAngle;
    } else {
      throw ConfigError("scenario.plant must be small_angle or exact");
    }
    sec.finish();
  }
  {
    Section sec(root, "noise");
    sec.pair("mean", s.noise.mean);
    sec.pair("sigma", s.noise.sigma);
    sec.get("noisy_others", s.noisy_others);
    sec.finish();
  }
  {
    Section sec(root, "controller");
    auto& c = s.controller;
    sec.get("eta", c.eta);
    sec.pair("desired_poles", c.desired_poles);
    sec.pair("input_weights", c.input_weights);
    sec.get("pole_min", c.pole_min);
    sec.get("pole_max", c.pole_max);
    sec.get("pole_grid_size", c.pole_grid_size);
    sec.get("pole_multipliers", c.pole_multipliers);
    sec.get("refine_tol", c.refine_tol);
    sec.finish();
  }
  {
    Section sec(root, "vehicle");
    auto& v = s.vehicle;
    sec.get("l_r", v.l_r);
    sec.get("b_x", v.b_x);
    sec.get("b_y", v.b_y);
    sec.get("a_min", v.a_min);
    sec.get("a_max", v.a_max);
    sec.get("beta_min", v.beta_min);
    sec.get("beta_max", v.beta_max);
    sec.finish();
  }
  {
    Section sec(root, "lane_change");
    auto& L = s.lane_change;
    sec.get("lane_width", L.lane_width);
    sec.get("r_margin", L.r_margin);
    sec.range("ego_speed", L.ego_speed);
    sec.range("front_car_gap", L.front_car_gap);
    sec.range("front_car_speed", L.front_car_speed);
    sec.range("front_target_gap", L.front_target_gap);
    sec.range("front_target_speed", L.front_target_speed);
    sec.range("back_target_gap", L.back_target_gap);
    sec.range("back_target_speed", L.back_target_speed);
    sec.range("merge_point", L.merge_point);
    sec.get("merge_length", L.merge_length);
    sec.get("success_tolerance", L.success_tolerance);
    sec.get("track_gap", L.track_gap);
    sec.get("gap_gain", L.gap_gain);
    sec.get("c1", L.c1);
    sec.get("c2", L.c2);
    sec.finish();
  }
  {
    Section sec(root, "intersection");
    auto& I = s.intersection;
    sec.get("lane_width", I.lane_width);
    sec.get("r_extra", I.r_extra);
    sec.get("inflate_boxes", I.inflate_boxes);
    sec.range("ego_start", I.ego_start);
    sec.range("ego_speed", I.ego_speed);
    sec.range("other_start", I.other_start);
    sec.range("other_speed", I.other_speed);
    sec.get("ego_v_ref", I.ego_v_ref);
    sec.get("exit_distance", I.exit_distance);
    sec.get("c1", I.c1);
    sec.get("c2", I.c2);
    sec.finish();
  }
  {
    Section sec(root, "tracker");
    auto& T = s.tracker;
    sec.get("horizon", T.horizon);
    sec.get("dt", T.dt);
    sec.get("w_lateral", T.w_lateral);
    sec.get("w_heading", T.w_heading);
    sec.get("w_speed", T.w_speed);
    sec.get("lattice_a", T.lattice_a);
    sec.get("lattice_beta", T.lattice_beta);
    sec.get("refinements", T.refinements);
    sec.get("w_clearance", T.w_clearance);
    sec.get("clearance", T.clearance);
    sec.finish();
  }
  s.validate();
  return s;
}

ScenarioSpec load_spec_file(const std::string& path, const ScenarioSpec& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return spec_from_json(ss.str(), base);
}

std::uint64_t spec_hash(const ScenarioSpec& spec) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : spec_to_json(spec)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace pecbf
