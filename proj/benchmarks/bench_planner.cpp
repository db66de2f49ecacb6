#include <benchmark/benchmark.h>

#include "ocd/costdesign.hpp"
#include "ocd/mpc.hpp"
#include "ocd/planner.hpp"
#include "ocd/scenarios.hpp"

namespace {

using namespace ocd;

void BM_PlanGradient(benchmark::State& state) {
  const Scenario s = build_scenario(3);
  const PlanProblem problem(s.theta_true, s.nominal_start, s.belief0, s.planner.horizon, s.road,
                            s.v_target, s.dynamics);
  const ControlSequence seq(static_cast<std::size_t>(s.planner.horizon), Control(0.1, 0.2));
  PlanGradient g;
  for (auto _ : state) benchmark::DoNotOptimize(problem.value_and_gradient(seq, g));
}
BENCHMARK(BM_PlanGradient);

void BM_OptimizePlan(benchmark::State& state) {
  const Scenario s = build_scenario(static_cast<int>(state.range(0)));
  const PlanProblem problem(s.theta_true, s.nominal_start, s.belief0, s.planner.horizon, s.road,
                            s.v_target, s.dynamics);
  for (auto _ : state) benchmark::DoNotOptimize(optimize_plan(problem, s.planner).objective);
}
BENCHMARK(BM_OptimizePlan)->DenseRange(1, 3)->Unit(benchmark::kMicrosecond);

void BM_MpcRollout(benchmark::State& state) {
  const Scenario s = build_scenario(static_cast<int>(state.range(0)), true);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mpc_rollout(s.theta_true, s.theta_true, s, seed++).cumulative_true_cost);
  }
}
BENCHMARK(BM_MpcRollout)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_Fitness(benchmark::State& state) {
  const Scenario s = build_scenario(3);
  const TrainingSet set = make_training_set(s, static_cast<int>(state.range(0)), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fitness(s.theta_true.w, s, set.states, s.theta_true, set.seeds));
  }
}
BENCHMARK(BM_Fitness)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
