#include <benchmark/benchmark.h>

#include "cdpr/maskgen.hpp"

using namespace cdpr;

static void BM_white_mask(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(white_noise_mask(n, n, 0.5, ++seed));
}
BENCHMARK(BM_white_mask)->Arg(200)->Unit(benchmark::kMicrosecond);

static void BM_blue_mask(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(blue_noise_mask(n, n, 0.5, ++seed));
}
BENCHMARK(BM_blue_mask)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_green_mask(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(fmedg_generate(n, n, 0.5, 1.5, ++seed));
}
BENCHMARK(BM_green_mask)->Arg(64)->Arg(128)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_radial_spectrum(benchmark::State& state) {
  const BinaryMask m = fmedg_generate(200, 200, 0.5, 1.5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(radial_power_spectrum(m, 16));
}
BENCHMARK(BM_radial_spectrum)->Unit(benchmark::kMillisecond);
