// pecbf: run, batch, calibrate and replay closed-loop safety-filter experiments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pecbf/calibration.hpp"
#include "pecbf/config.hpp"
#include "pecbf/errors.hpp"
#include "pecbf/simulation.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Overrides {
  std::string config;
  std::string scenario;
  std::string variant;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma;
  std::optional<double> eta;
  std::optional<double> dt;
  std::optional<double> tmax;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file (CLI flags override it)");
  cmd->add_option("--scenario", o.scenario,
                  "lane_change | intersection_left_turn | intersection_straight");
  cmd->add_option("--variant", o.variant, "proposed | det_noKopt | det_Kopt | prob_noKopt");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--sigma", o.sigma, "Noise standard deviation per axis (m/s)");
  cmd->add_option("--eta", o.eta, "Confidence level");
  cmd->add_option("--dt", o.dt, "Control and integration step (s)");
  cmd->add_option("--tmax", o.tmax, "Trial horizon (s)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pecbf::ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

pecbf::ScenarioSpec build_spec(const Overrides& o) {
  using namespace pecbf;
  std::optional<ScenarioKind> flag_kind;
  if (!o.scenario.empty()) flag_kind = scenario_kind_from_string(o.scenario);

  ScenarioSpec spec = default_spec(flag_kind.value_or(ScenarioKind::LaneChange));
  if (!o.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(o.config));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (flag_kind && j.is_object()) j["scenario"]["kind"] = to_string(*flag_kind);
    spec = spec_from_json(j.dump(), spec);
  }
  if (!o.variant.empty()) {
    try {
      spec.variant = variant_from_string(o.variant);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.seed) spec.seed = *o.seed;
  if (o.sigma) spec.noise.sigma = {*o.sigma, *o.sigma};
  if (o.eta) spec.controller.eta = *o.eta;
  if (o.dt) spec.dt = *o.dt;
  if (o.tmax) spec.t_max = *o.tmax;
  spec.validate();
  return spec;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw pecbf::ConfigError("cannot write " + path);
  out << text;
}

std::vector<pecbf::Variant> parse_variants(const std::string& list) {
  using pecbf::Variant;
  if (list.empty() || list == "all") {
    return {Variant::Proposed, Variant::DetNoKopt, Variant::DetKopt, Variant::ProbNoKopt};
  }
  std::vector<Variant> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(pecbf::variant_from_string(item));
    } catch (const std::invalid_argument& e) {
      throw pecbf::ConfigError(e.what());
    }
  }
  if (out.empty()) throw pecbf::ConfigError("empty variant list");
  return out;
}

int default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic eCBF safety filter simulator"};
  app.require_subcommand(1);

  Overrides run_o;
  std::string run_out;
  std::uint64_t run_trial_index = 0;
  auto* run = app.add_subcommand("run", "Simulate one trial and write its record");
  add_common(run, run_o);
  run->add_option("--out", run_out, "Record file (default stdout)");
  run->add_option("--trial", run_trial_index, "Trial index within the seed");

  Overrides batch_o;
  std::string batch_out;
  std::string batch_records;
  std::string batch_variants = "all";
  std::int64_t batch_trials = 250;
  int batch_jobs = default_jobs();
  auto* batch = app.add_subcommand("batch", "Monte Carlo batch over variants");
  add_common(batch, batch_o);
  batch->add_option("--trials", batch_trials, "Trials per variant")->check(CLI::PositiveNumber);
  batch->add_option("--variants", batch_variants, "Comma separated list or 'all'");
  batch->add_option("--jobs", batch_jobs, "Worker threads")->check(CLI::PositiveNumber);
  batch->add_option("--out", batch_out, "Summary CSV (default stdout)");
  batch->add_option("--records", batch_records, "Also write every trial record to this file");

  pecbf::CalibrationOptions cal;
  cal.jobs = default_jobs();
  std::string cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "Monte Carlo calibration of the tightenings");
  calibrate->add_option("--instances", cal.instances, "Instances per family")
      ->check(CLI::PositiveNumber);
  calibrate->add_option("--samples", cal.samples, "Samples per instance")
      ->check(CLI::PositiveNumber);
  calibrate->add_option("--eta", cal.etas, "Confidence levels");
  calibrate->add_option("--seed", cal.seed, "Seed");
  calibrate->add_option("--jobs", cal.jobs, "Worker threads")->check(CLI::PositiveNumber);
  calibrate->add_option("--out", cal_out, "Result CSV (default stdout)");

  std::string replay_in;
  std::string replay_out;
  auto* replay = app.add_subcommand("replay", "Re-simulate a record and compare");
  replay->add_option("record", replay_in, "Record file written by run")->required();
  replay->add_option("--out", replay_out, "Write the re-simulated record here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) {
      const auto spec = build_spec(run_o);
      const auto rec = pecbf::run_trial(spec, run_trial_index);
      write_output(run_out, pecbf::serialize(rec));
      std::fprintf(stderr, "%s %s seed=%llu trial=%llu outcome=%s t=%s min_h=%s\n",
                   pecbf::to_string(spec.kind).c_str(), pecbf::to_string(spec.variant).c_str(),
                   static_cast<unsigned long long>(spec.seed),
                   static_cast<unsigned long long>(run_trial_index),
                   pecbf::to_string(rec.outcome.kind).c_str(),
                   pecbf::fmt9(rec.outcome.time).c_str(), pecbf::fmt9(rec.min_h()).c_str());
    } else if (*batch) {
      const auto spec = build_spec(batch_o);
      const auto variants = parse_variants(batch_variants);
      std::ofstream records;
      if (!batch_records.empty()) {
        records.open(batch_records);
        if (!records) throw pecbf::ConfigError("cannot write " + batch_records);
      }
      auto sink = [&](const pecbf::TrialRecord& r) { records << pecbf::serialize(r); };
      const auto result = batch_records.empty()
                              ? pecbf::run_batch(spec, batch_trials, variants, batch_jobs)
                              : pecbf::run_batch(spec, batch_trials, variants, batch_jobs, sink);
      std::string csv = "# scenario=" + pecbf::to_string(spec.kind) +
                        " sigma=" + pecbf::fmt9(spec.noise.sigma[0]) +
                        " eta=" + pecbf::fmt9(spec.controller.eta) +
                        " dt=" + pecbf::fmt9(spec.dt) + " t_max=" + pecbf::fmt9(spec.t_max) +
                        " seed=" + std::to_string(spec.seed) + "\n";
      write_output(batch_out, csv + pecbf::summary_csv(result));
    } else if (*calibrate) {
      const auto results = pecbf::run_calibration(cal);
      std::string csv = "family,eta,instances,min_probability,mean_probability,failures,passed\n";
      bool ok = true;
      for (const auto& r : results) {
        csv += r.family + "," + pecbf::fmt9(r.eta) + "," + std::to_string(r.instances) + "," +
               pecbf::fmt9(r.min_probability) + "," + pecbf::fmt9(r.mean_probability) + "," +
               std::to_string(r.failures) + "," + (r.passed() ? "true" : "false") + "\n";
        ok = ok && r.passed();
      }
      write_output(cal_out, csv);
      if (!ok) {
        std::fprintf(stderr, "calibration: some families fell below eta - %g\n", cal.slack);
        return 1;
      }
    } else if (*replay) {
      const std::string original = read_file(replay_in);
      const auto rec = pecbf::replay(original);
      const std::string fresh = pecbf::serialize(rec);
      if (!replay_out.empty()) write_output(replay_out, fresh);
      const bool same = fresh == original;
      std::fprintf(stderr, "replay %s: outcome=%s\n", same ? "identical" : "DIFFERS",
                   pecbf::to_string(rec.outcome.kind).c_str());
      if (!same) return 1;
    }
  } catch (const pecbf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const pecbf::SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
