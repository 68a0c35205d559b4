#include <doctest.h>

#include "pecbf/config.hpp"
#include "pecbf/simulation.hpp"

using namespace pecbf;

namespace {

ScenarioSpec quiet_lane_change() {
  auto spec = default_spec(ScenarioKind::LaneChange);
  spec.lane_change.ego_speed = {20.0, 20.0};
  spec.lane_change.front_car_gap = {400.0, 400.0};
  spec.lane_change.front_target_gap = {400.0, 400.0};
  spec.lane_change.back_target_gap = {400.0, 400.0};
  for (Range* r : {&spec.lane_change.front_car_speed, &spec.lane_change.front_target_speed,
                   &spec.lane_change.back_target_speed})
    *r = {20.0, 20.0};
  return spec;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("wilson interval") {
  const auto half = wilson_interval(5, 10);
  CHECK(half.rate == 0.5);
  CHECK(half.lo == doctest::Approx(0.2366).epsilon(1e-4));
  CHECK(half.hi == doctest::Approx(0.7634).epsilon(1e-4));
  const auto none = wilson_interval(0, 20);
  CHECK(none.lo == 0.0);
  CHECK(none.hi == doctest::Approx(0.16113).epsilon(1e-4));
  const auto all = wilson_interval(20, 20);
  CHECK(all.hi == 1.0);
  CHECK(all.lo == doctest::Approx(1.0 - 0.16113).epsilon(1e-4));
  CHECK(fmt9(1.0 / 3.0) == "0.333333333");
}

TEST_CASE("noise streams ignore the controller variant") {
  const GaussianNoise n{{0, 0}, {0.15, 0.15}, 2};
  const auto ts = trial_seed(1, 4);
  CHECK(ts != trial_seed(1, 5));
  CHECK(ts != trial_seed(2, 4));
  CHECK(noise_sample(ts, 3, 0, n) == noise_sample(ts, 3, 0, n));
  CHECK(noise_sample(ts, 3, 0, n) != noise_sample(ts, 3, 1, n));
  auto a = default_spec(ScenarioKind::LaneChange);
  auto b = a;
  b.variant = Variant::DetNoKopt;
  const auto ra = run_trial(a, 2), rb = run_trial(b, 2);
  CHECK(ra.trial_seed == rb.trial_seed);
  CHECK(ra.steps.front().ego.v == rb.steps.front().ego.v);
  CHECK(ra.steps.front().others[1].x == rb.steps.front().others[1].x);
}

TEST_CASE("a quiet lane change succeeds without touching the desired input") {
  auto spec = quiet_lane_change();
  spec.noise.sigma = {0.0, 0.0};
  for (auto v : {Variant::Proposed, Variant::DetNoKopt, Variant::DetKopt, Variant::ProbNoKopt}) {
    spec.variant = v;
    const auto rec = run_trial(spec);
    CHECK(rec.outcome.kind == OutcomeKind::Success);
    CHECK(rec.all_feasible());
    for (const auto& s : rec.steps) {
      CHECK(s.u.a == s.u_desired.a);
      CHECK(s.u.beta == s.u_desired.beta);
    }
  }
}

TEST_CASE("every variant finishes a quiet lane change under noise") {
  auto spec = quiet_lane_change();
  const auto res = run_batch(spec, 3, {Variant::Proposed, Variant::DetNoKopt, Variant::DetKopt,
                                       Variant::ProbNoKopt});
  REQUIRE(res.stats.size() == 4);
  for (const auto& s : res.stats) CHECK(s.count(OutcomeKind::Success) == 3);
  CHECK(res.trials.size() == 12);
}

TEST_CASE("trials are reproducible and replay exactly") {
  const auto spec = default_spec(ScenarioKind::IntersectionLeftTurn);
  const auto a = run_trial(spec, 7), b = run_trial(spec, 7);
  const auto text = serialize(a);
  CHECK(text == serialize(b));
  CHECK(a.spec_hash == spec_hash(spec));
  const auto again = replay(text);
  CHECK(serialize(again) == text);
  CHECK_THROWS(replay("not a record"));
}

TEST_CASE("batches") {
  const auto spec = default_spec(ScenarioKind::LaneChange);
  const auto one = run_batch(spec, 1, {Variant::Proposed});
  REQUIRE(one.stats.size() == 1);
  CHECK(one.stats[0].n == 1);
  std::int64_t total = 0;
  for (auto c : one.stats[0].counts) total += c;
  CHECK(total == 1);
  const auto serial = run_batch(spec, 6, {Variant::Proposed, Variant::DetKopt}, 1);
  int seen = 0;
  const auto parallel =
      run_batch(spec, 6, {Variant::Proposed, Variant::DetKopt}, 3, [&](const TrialRecord&) { ++seen; });
  CHECK(seen == 12);
  CHECK(summary_csv(serial) == summary_csv(parallel));
  for (size_t i = 0; i < serial.trials.size(); ++i)
    CHECK(serial.trials[i].min_h == parallel.trials[i].min_h);
}

}
