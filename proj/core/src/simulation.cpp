#include "pecbf/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pecbf/config.hpp"
#include "pecbf/errors.hpp"
#include "pecbf/intersection.hpp"
#include "pecbf/lane_change.hpp"
#include "pecbf/nominal.hpp"

namespace pecbf {

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Collision: return "collision";
    case OutcomeKind::Infeasible: return "infeasible";
    case OutcomeKind::Unfinished: return "unfinished";
    case OutcomeKind::Success: return "success";
  }
  return "unknown";
}

std::string fmt9(double v) {
  if (std::isnan(v)) return "null";
  if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double TrialRecord::min_h() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : steps) {
    for (double h : s.h) m = std::min(m, h);
  }
  for (double h : final_h) m = std::min(m, h);
  return m;
}

bool TrialRecord::all_feasible() const {
  return std::all_of(steps.begin(), steps.end(), [](const StepRecord& s) { return s.feasible; });
}

std::uint64_t trial_seed(std::uint64_t spec_seed, std::uint64_t trial_index) {
  return derive_seed(spec_seed, trial_index);
}

std::uint64_t scenario_seed(std::uint64_t tseed) { return derive_seed(tseed, 0x5343454eULL); }

NoiseSample noise_sample(std::uint64_t tseed, std::uint64_t step, std::uint64_t vehicle,
                         const GaussianNoise& noise) {
  std::mt19937_64 rng(derive_seed(tseed ^ 0x4e4f495345ULL, step, vehicle));
  std::normal_distribution<double> n01(0.0, 1.0);
  // Always draw both axes so that the stream does not depend on dims.
  const double z0 = n01(rng);
  const double z1 = n01(rng);
  NoiseSample e{noise.mean[0] + noise.sigma[0] * z0, 0.0};
  if (noise.dims >= 2) e[1] = noise.mean[1] + noise.sigma[1] * z1;
  return e;
}

namespace {

struct Barriers {
  std::vector<LiftedBarrier> lifted;
  std::vector<double> h;
};

Barriers build_barriers(const ScenarioSpec& spec, const World& w, const GaussianNoise& rel) {
  Barriers b;
  for (const auto& o : w.others) {
    if (w.kind == ScenarioKind::LaneChange) {
      const auto pg = lane_change::pair_geometry(w.ego, spec.vehicle, o.state, o.params, o.input,
                                                 spec.lane_change.r_margin);
      b.lifted.push_back(lane_change::lift(pg, rel));
    } else {
      const auto pp = intersection::planar_pair(
          w.ego, spec.vehicle, o.state, o.params, o.input,
          {spec.intersection.r_extra, spec.intersection.inflate_boxes});
      b.lifted.push_back(intersection::lift(pp, rel));
    }
    b.h.push_back(b.lifted.back().h);
  }
  return b;
}

bool collided(const ScenarioSpec& spec, const World& w) {
  for (const auto& o : w.others) {
    if (w.kind == ScenarioKind::LaneChange) {
      if (std::abs(w.ego.x - o.state.x) < spec.vehicle.b_x + o.params.b_x) return true;
    } else if (footprints_overlap(w.ego, spec.vehicle, o.state, o.params)) {
      return true;
    }
  }
  return false;
}

bool lane_change_done(const ScenarioSpec& spec, const World& w) {
  if (std::abs(w.ego.y - w.lane_ref.y_target) >= spec.lane_change.success_tolerance) return false;
  double x_ft = std::numeric_limits<double>::infinity();
  double x_bt = -std::numeric_limits<double>::infinity();
  for (const auto& o : w.others) {
    if (o.name == "front_target") x_ft = o.state.x;
    if (o.name == "back_target") x_bt = o.state.x;
  }
  return x_bt < w.ego.x && w.ego.x < x_ft;
}

// Past the centre of the crossing and with the whole footprint outside the conflict square.
bool intersection_exited(const ScenarioSpec& spec, const World& w) {
  const auto pr = w.ego_path.project(w.ego.x, w.ego.y);
  if (pr.s < w.ego_path.length() - spec.intersection.exit_distance) return false;
  const auto ext = axis_aligned_extents(w.ego, spec.vehicle, true);
  const double lw = spec.intersection.lane_width;
  return std::abs(w.ego.x) - ext.x > lw || std::abs(w.ego.y) - ext.y > lw;
}

VehicleInput nominal(const ScenarioSpec& spec, const World& w) {
  if (w.kind == ScenarioKind::LaneChange) {
    if (!spec.lane_change.track_gap) return nominal_lane_change(w.ego, spec.vehicle, w.lane_ref);
    // the ego can never pass the front car, so the usable gap ends at the nearer front vehicle
    MergeGap gap;
    gap.x_front = std::numeric_limits<double>::infinity();
    for (const auto& o : w.others) {
      if (o.name == "back_target") {
        gap.x_back = o.state.x;
        gap.v_back = o.state.v;
      } else if (o.state.x < gap.x_front) {
        gap.x_front = o.state.x;
        gap.v_front = o.state.v;
      }
    }
    return nominal_lane_change(w.ego, spec.vehicle, w.lane_ref, gap);
  }
  TrackerOptions opts = spec.tracker;
  opts.v_ref = spec.intersection.ego_v_ref;
  opts.pair = {spec.intersection.r_extra, spec.intersection.inflate_boxes};
  std::vector<PredictedVehicle> others;
  for (const auto& o : w.others) others.push_back({o.state, o.params, o.input});
  return nominal_intersection(w.ego, spec.vehicle, w.ego_path, opts, others);
}

}  // namespace

TrialRecord run_trial(const ScenarioSpec& spec, std::uint64_t trial_index) {
  spec.validate();
  TrialRecord rec;
  rec.spec = spec;
  rec.trial_index = trial_index;
  rec.spec_hash = spec_hash(spec);
  rec.trial_seed = trial_seed(spec.seed, trial_index);

  World w = generate_scenario(spec, scenario_seed(rec.trial_seed));
  const ControllerConfig cfg = spec.effective_controller();
  const GaussianNoise rel = difference_noise(spec.noise, spec.noise, spec.noisy_others);
  const auto n_steps = static_cast<std::int64_t>(std::llround(spec.t_max / spec.dt));
  auto finish = [&](OutcomeKind kind, double t) {
    rec.outcome = {kind, t};
    rec.final_h = build_barriers(spec, w, rel).h;
    return rec;
  };

  for (std::int64_t k = 0; k < n_steps; ++k) {
    StepRecord sr;
    sr.t = static_cast<double>(k) * spec.dt;
    sr.ego = w.ego;
    for (const auto& o : w.others) sr.others.push_back(o.state);

    const Barriers b = build_barriers(spec, w, rel);
    sr.h = b.h;
    sr.u_desired = nominal(spec, w);
    const ControllerDecision d = solve_safe_control(sr.u_desired, b.lifted, spec.vehicle, cfg);
    sr.feasible = d.feasible;
    sr.u = d.u;
    sr.barriers = d.barriers;
    sr.branch_id = d.branch_id;
    sr.objective = d.objective;
    for (std::size_t m = 0; m < b.lifted.size() && m < d.barriers.size(); ++m) {
      const auto v1 = b.lifted[m].v1_poly(d.barriers[m].gains.p1);
      if (v1[1] <= 0.0) {
        ++rec.v1_nonpositive_steps;
        break;
      }
    }

    const auto ego_step = step(w.ego, sr.u, noise_sample(rec.trial_seed, k, 0, spec.noise), spec.dt,
                               spec.vehicle, spec.plant);
    sr.speed_clamped = ego_step.speed_clamped;
    if (ego_step.speed_clamped) ++rec.speed_clamps;
    w.ego = ego_step.state;
    for (std::size_t i = 0; i < w.others.size(); ++i) {
      auto& o = w.others[i];
      const NoiseSample e = spec.noisy_others ? noise_sample(rec.trial_seed, k, i + 1, spec.noise)
                                              : NoiseSample{0.0, 0.0};
      o.state = step(o.state, o.input, e, spec.dt, o.params, spec.plant).state;
    }
    rec.steps.push_back(std::move(sr));

    const double t_next = static_cast<double>(k + 1) * spec.dt;
    if (collided(spec, w)) {
      return finish(OutcomeKind::Collision, t_next);
    }
    if (!d.feasible) {
      return finish(OutcomeKind::Infeasible, static_cast<double>(k) * spec.dt);
    }
    const bool done = w.kind == ScenarioKind::LaneChange ? lane_change_done(spec, w)
                                                          : intersection_exited(spec, w);
    if (done) {
      return finish(OutcomeKind::Success, t_next);
    }
  }
  return finish(OutcomeKind::Unfinished, static_cast<double>(n_steps) * spec.dt);
}

namespace {

void put_state(std::ostringstream& os, const VehicleState& s) {
  os << '[' << fmt9(s.x) << ',' << fmt9(s.y) << ',' << fmt9(s.psi) << ',' << fmt9(s.v) << ']';
}

void put_input(std::ostringstream& os, const VehicleInput& u) {
  os << '[' << fmt9(u.a) << ',' << fmt9(u.beta) << ']';
}

}  // namespace

std::string serialize(const TrialRecord& rec) {
  std::ostringstream os;
  {
    nlohmann::json header;
    header["type"] = "header";
    header["trial_index"] = rec.trial_index;
    header["trial_seed"] = rec.trial_seed;
    header["spec_hash"] = rec.spec_hash;
    header["spec"] = nlohmann::json::parse(spec_to_json(rec.spec));
    os << header.dump() << '\n';
  }
  for (const auto& s : rec.steps) {
    os << "{\"type\":\"step\",\"t\":" << fmt9(s.t) << ",\"ego\":";
    put_state(os, s.ego);
    os << ",\"others\":[";
    for (std::size_t i = 0; i < s.others.size(); ++i) {
      if (i) os << ',';
      put_state(os, s.others[i]);
    }
    os << "],\"u_des\":";
    put_input(os, s.u_desired);
    os << ",\"u\":";
    put_input(os, s.u);
    os << ",\"feasible\":" << (s.feasible ? "true" : "false");
    os << ",\"branch_id\":" << s.branch_id;
    os << ",\"objective\":" << fmt9(s.objective);
    os << ",\"h\":[";
    for (std::size_t i = 0; i < s.h.size(); ++i) os << (i ? "," : "") << fmt9(s.h[i]);
    os << "],\"gains\":[";
    for (std::size_t i = 0; i < s.barriers.size(); ++i) {
      const auto& g = s.barriers[i].gains;
      os << (i ? "," : "") << '[' << fmt9(g.p1) << ',' << fmt9(g.p2) << ']';
    }
    os << "],\"residuals\":[";
    for (std::size_t i = 0; i < s.barriers.size(); ++i) {
      const auto& bd = s.barriers[i];
      os << (i ? "," : "") << '[' << fmt9(bd.ecbf_residual) << ',' << fmt9(bd.p1_residual) << ']';
    }
    os << "],\"speed_clamped\":" << (s.speed_clamped ? "true" : "false") << "}\n";
  }
  os << "{\"type\":\"outcome\",\"outcome\":\"" << to_string(rec.outcome.kind)
     << "\",\"time\":" << fmt9(rec.outcome.time) << ",\"steps\":" << rec.steps.size()
     << ",\"final_h\":[";
  for (std::size_t i = 0; i < rec.final_h.size(); ++i) os << (i ? "," : "") << fmt9(rec.final_h[i]);
  os << "],\"min_h\":" << fmt9(rec.min_h())
     << ",\"v1_nonpositive_steps\":" << rec.v1_nonpositive_steps
     << ",\"speed_clamps\":" << rec.speed_clamps << "}\n";
  return os.str();
}

TrialRecord replay(const std::string& record_text) {
  const auto eol = record_text.find('\n');
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(record_text.substr(0, eol));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("record header is not valid: ") + e.what());
  }
  if (!header.is_object() || header.value("type", "") != "header" || !header.contains("spec")) {
    throw ConfigError("record does not start with a header line");
  }
  const auto kind = scenario_kind_from_string(header["spec"]["scenario"].value("kind", ""));
  const ScenarioSpec spec = spec_from_json(header["spec"].dump(), default_spec(kind));
  const auto idx = header.value("trial_index", std::uint64_t{0});
  if (header.contains("spec_hash") && header["spec_hash"].get<std::uint64_t>() != spec_hash(spec)) {
    throw ConfigError("record spec hash does not match its embedded spec");
  }
  return run_trial(spec, idx);
}

RateCi wilson_interval(std::int64_t k, std::int64_t n, double z) {
  if (n <= 0) return {0.0, 0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  const double lo = k == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = k == n ? 1.0 : std::min(1.0, centre + half);
  return {p, lo, hi};
}

BatchResult run_batch(const ScenarioSpec& tmpl, std::int64_t n_trials,
                      const std::vector<Variant>& variants, int jobs,
                      const std::function<void(const TrialRecord&)>& on_record) {
  if (n_trials < 1) throw ConfigError("trial count must be >= 1");
  if (variants.empty()) throw ConfigError("at least one variant is required");
  tmpl.validate();

  const auto nv = static_cast<std::int64_t>(variants.size());
  const std::int64_t total = nv * n_trials;
  BatchResult out;
  out.trials.resize(static_cast<std::size_t>(total));

  std::atomic<std::int64_t> next{0};
  std::mutex sink_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::int64_t job = next.fetch_add(1);
      if (job >= total) return;
      const std::int64_t vi = job / n_trials;
      const auto trial = static_cast<std::uint64_t>(job % n_trials);
      ScenarioSpec spec = tmpl;
      spec.variant = variants[static_cast<std::size_t>(vi)];
      try {
        const TrialRecord rec = run_trial(spec, trial);
        out.trials[static_cast<std::size_t>(job)] = {spec.variant, trial, rec.outcome, rec.min_h(),
                                                     rec.all_feasible()};
        if (on_record) {
          std::lock_guard<std::mutex> lock(sink_mutex);
          on_record(rec);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
        return;
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::int64_t vi = 0; vi < nv; ++vi) {
    AggregateStats st;
    st.variant = variants[static_cast<std::size_t>(vi)];
    st.n = n_trials;
    for (std::int64_t t = 0; t < n_trials; ++t) {
      const auto& ts = out.trials[static_cast<std::size_t>(vi * n_trials + t)];
      ++st.counts[static_cast<int>(ts.outcome.kind)];
    }
    out.stats.push_back(st);
  }
  return out;
}

std::string summary_csv(const BatchResult& result) {
  static constexpr OutcomeKind kinds[] = {OutcomeKind::Collision, OutcomeKind::Infeasible,
                                          OutcomeKind::Unfinished, OutcomeKind::Success};
  std::ostringstream os;
  os << "variant,n";
  for (auto k : kinds) os << ',' << to_string(k);
  for (auto k : kinds) os << ',' << to_string(k) << "_rate";
  for (auto k : kinds) os << ',' << to_string(k) << "_ci_lo," << to_string(k) << "_ci_hi";
  os << '\n';
  for (const auto& st : result.stats) {
    os << to_string(st.variant) << ',' << st.n;
    for (auto k : kinds) os << ',' << st.count(k);
    for (auto k : kinds) os << ',' << fmt9(st.rate(k).rate);
    for (auto k : kinds) os << ',' << fmt9(st.rate(k).lo) << ',' << fmt9(st.rate(k).hi);
    os << '\n';
  }
  return os.str();
}

}  // namespace pecbf
