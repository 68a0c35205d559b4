#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pecbf/controller.hpp"
#include "pecbf/lane_change.hpp"
#include "pecbf/qp.hpp"
#include "pecbf/simulation.hpp"
#include "pecbf/stochastic.hpp"

using namespace pecbf;

static void BM_InvNormCdf(benchmark::State& state) {
  double p = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inv_norm_cdf(p));
    p = p < 0.999 ? p + 1e-3 : 1e-6;
  }
}
BENCHMARK(BM_InvNormCdf);

static void BM_Qp(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<QpProblem> qps(64);
  for (auto& qp : qps) {
    qp.target = {2 * d(rng), 2 * d(rng)};
    for (int i = 0; i < state.range(0); ++i) qp.constraints.push_back({{d(rng), d(rng)}, d(rng)});
  }
  size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_convex_subproblem(qps[i++ % qps.size()]));
}
BENCHMARK(BM_Qp)->Arg(1)->Arg(2)->Arg(3);

static void BM_SafeControl(benchmark::State& state) {
  const VehicleParams p;
  const GaussianNoise rel{{0, 0}, {0.21, 0.21}, 1};
  const auto pg = lane_change::pair_geometry({0, 0, 0, 20}, p, {-15, 3.5, 0, 22}, p, {0, 0}, 4.8);
  std::vector<LiftedBarrier> bs(static_cast<size_t>(state.range(0)), lane_change::lift(pg, rel));
  auto cfg = default_spec(ScenarioKind::LaneChange).effective_controller();
  for (auto _ : state) benchmark::DoNotOptimize(solve_safe_control({1.0, 0.05}, bs, p, cfg));
}
BENCHMARK(BM_SafeControl)->Arg(1)->Arg(3);

static void BM_RunTrial(benchmark::State& state) {
  const auto spec = default_spec(static_cast<ScenarioKind>(state.range(0)));
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(spec, i++));
}
BENCHMARK(BM_RunTrial)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
