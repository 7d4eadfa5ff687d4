#include <random>

#include <benchmark/benchmark.h>

#include "thermoact/kinematics.hpp"

namespace {

using thermoact::ArmModel;
using thermoact::JointVector;

void BM_ForwardKinematics(benchmark::State& state) {
  JointVector q;
  q.q = {0.3, 0.6, 1.1, 0.9, 0.2, -0.4};
  for (auto _ : state) {
    auto p = thermoact::forward_kinematics(ArmModel::standard(), q);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_ForwardKinematics);

void BM_Jacobian(benchmark::State& state) {
  JointVector q;
  q.q = {0.3, 0.6, 1.1, 0.9, 0.2, -0.4};
  for (auto _ : state) {
    auto j = thermoact::jacobian(ArmModel::standard(), q);
    benchmark::DoNotOptimize(j);
  }
}
BENCHMARK(BM_Jacobian);

void BM_InverseKinematics(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> x(0.2, 0.5), y(-0.3, 0.3), z(0.05, 0.4);
  JointVector seed;
  seed.q = {0.0, 0.6, 1.2, 1.2, 0.0, 0.0};
  for (auto _ : state) {
    const Eigen::Vector3d target(x(rng), y(rng), z(rng));
    try {
      auto q = thermoact::solve_ik(ArmModel::standard(), target, seed);
      benchmark::DoNotOptimize(q);
    } catch (const std::exception&) {
    }
  }
}
BENCHMARK(BM_InverseKinematics);

}  // namespace
