#include <benchmark/benchmark.h>

#include "thermoact/scene.hpp"

namespace {

void BM_RenderThermalExternal(benchmark::State& state) {
  const auto scene = thermoact::scene_from_task(1, 3);
  const auto cam = scene.camera(thermoact::CameraKind::kExternal, true);
  for (auto _ : state) {
    auto frame = thermoact::render_thermal(scene, cam);
    benchmark::DoNotOptimize(frame);
  }
}
BENCHMARK(BM_RenderThermalExternal)->Unit(benchmark::kMillisecond);

void BM_RenderRgbWrist(benchmark::State& state) {
  const auto scene = thermoact::scene_from_task(1, 3);
  const auto cam = scene.camera(thermoact::CameraKind::kWrist, false);
  for (auto _ : state) {
    auto img = thermoact::render_rgb(scene, cam);
    benchmark::DoNotOptimize(img);
  }
}
BENCHMARK(BM_RenderRgbWrist)->Unit(benchmark::kMillisecond);

void BM_SceneStep(benchmark::State& state) {
  auto scene = thermoact::scene_from_task(4, 0);
  thermoact::Action hold;
  hold.joint_targets = scene.joint_targets();
  for (auto _ : state) scene.step(1.0 / 30.0, hold);
}
BENCHMARK(BM_SceneStep);

}  // namespace
