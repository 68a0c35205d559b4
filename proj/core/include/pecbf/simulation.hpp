#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pecbf/controller.hpp"
#include "pecbf/scenario.hpp"

namespace pecbf {

enum class OutcomeKind { Collision, Infeasible, Unfinished, Success };

std::string to_string(OutcomeKind k);

struct Outcome {
  OutcomeKind kind = OutcomeKind::Unfinished;
  double time = 0.0;
};

/// One control step: the state before the step, the decision, and the noise applied.
struct StepRecord {
  double t = 0.0;
  VehicleState ego;
  std::vector<VehicleState> others;
  VehicleInput u_desired;
  VehicleInput u;  // applied input (fallback braking when infeasible)
  std::vector<double> h;  // barrier value per other vehicle
  std::vector<BarrierDecision> barriers;
  std::int64_t branch_id = 0;
  bool feasible = true;
  double objective = 0.0;
  bool speed_clamped = false;
};

struct TrialRecord {
  ScenarioSpec spec;
  std::uint64_t trial_index = 0;
  std::uint64_t spec_hash = 0;
  std::uint64_t trial_seed = 0;
  std::vector<StepRecord> steps;
  Outcome outcome;
  /// Barrier values at the state the trial ended in (after the last step).
  std::vector<double> final_h;
  /// Steps at which some barrier had h_dot + p1 h <= 0 at the noise-free state.
  int v1_nonpositive_steps = 0;
  int speed_clamps = 0;

  /// Over every recorded step and the final state.
  double min_h() const;
  bool all_feasible() const;
};

/// Seeds of the random streams of a trial. They depend on (spec seed, trial index, step,
/// vehicle) only, never on the controller variant.
std::uint64_t trial_seed(std::uint64_t spec_seed, std::uint64_t trial_index);
std::uint64_t scenario_seed(std::uint64_t trial_seed);
NoiseSample noise_sample(std::uint64_t trial_seed, std::uint64_t step, std::uint64_t vehicle,
                         const GaussianNoise& noise);

/// Closed loop until an outcome. Collision overrides an infeasible solve in the same step.
/// Throws ConfigError for an invalid spec and SolverError if the controller fails.
TrialRecord run_trial(const ScenarioSpec& spec, std::uint64_t trial_index = 0);

/// Line-delimited record: a header line, one line per step, one outcome line.
std::string serialize(const TrialRecord& rec);

/// Re-simulates from a serialized record's header. Returns the fresh record.
TrialRecord replay(const std::string& record_text);

struct RateCi {
  double rate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for k successes out of n.
RateCi wilson_interval(std::int64_t k, std::int64_t n, double z = 1.959963984540054);

struct AggregateStats {
  Variant variant = Variant::Proposed;
  std::int64_t n = 0;
  std::array<std::int64_t, 4> counts{};  // indexed by OutcomeKind

  std::int64_t count(OutcomeKind k) const { return counts[static_cast<int>(k)]; }
  RateCi rate(OutcomeKind k) const { return wilson_interval(count(k), n); }
};

struct TrialSummary {
  Variant variant = Variant::Proposed;
  std::uint64_t trial_index = 0;
  Outcome outcome;
  double min_h = 0.0;
  bool all_feasible = true;
};

struct BatchResult {
  std::vector<AggregateStats> stats;  // one per variant, in request order
  std::vector<TrialSummary> trials;   // variant-major
};

/// Runs n_trials per variant with common random numbers. on_record, when set, receives every
/// finished record (called from worker threads, serialized by an internal mutex).
BatchResult run_batch(const ScenarioSpec& tmpl, std::int64_t n_trials,
                      const std::vector<Variant>& variants, int jobs = 1,
                      const std::function<void(const TrialRecord&)>& on_record = {});

std::string summary_csv(const BatchResult& result);

/// "%.9g" formatting used by every text output.
std::string fmt9(double v);

}  // namespace pecbf
