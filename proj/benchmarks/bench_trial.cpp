#include <benchmark/benchmark.h>

#include "thermoact/orchestrator.hpp"

namespace {

void BM_RunTrial(benchmark::State& state) {
  const int task = static_cast<int>(state.range(0));
  const auto condition = static_cast<thermoact::Condition>(state.range(1));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto r = thermoact::run_trial(task, condition, seed++);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_RunTrial)
    ->ArgsProduct({{1, 2, 3, 4, 5}, {0, 1, 2}})
    ->ArgNames({"task", "condition"})
    ->Unit(benchmark::kMicrosecond);

void BM_MockPlan(benchmark::State& state) {
  const auto scene = thermoact::scene_from_task(2, 1);
  for (auto _ : state) {
    auto p = thermoact::mock_plan(scene, thermoact::task_instruction(2));
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_MockPlan);

}  // namespace
