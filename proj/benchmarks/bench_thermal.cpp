#include <random>

#include <benchmark/benchmark.h>

#include "thermoact/thermal.hpp"

namespace {

thermoact::ThermalFrame random_frame() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> temp(15.0, 60.0);
  thermoact::ThermalFrame f = thermoact::ThermalFrame::uniform(0.0);
  for (double& t : f.temps) t = temp(rng);
  return f;
}

void BM_Pseudocolor(benchmark::State& state) {
  const auto frame = random_frame();
  for (auto _ : state) {
    auto img = thermoact::thermal_to_pseudocolor(frame);
    benchmark::DoNotOptimize(img);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(frame.temps.size()));
}
BENCHMARK(BM_Pseudocolor);

void BM_RawEncode(benchmark::State& state) {
  const auto frame = random_frame();
  for (auto _ : state) {
    auto bytes = thermoact::encode_raw(frame);
    benchmark::DoNotOptimize(bytes);
  }
}
BENCHMARK(BM_RawEncode);

void BM_RawDecode(benchmark::State& state) {
  const auto bytes = thermoact::encode_raw(random_frame());
  for (auto _ : state) {
    auto frame = thermoact::decode_raw(bytes);
    benchmark::DoNotOptimize(frame);
  }
}
BENCHMARK(BM_RawDecode);

}  // namespace
