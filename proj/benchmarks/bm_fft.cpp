#include <benchmark/benchmark.h>

#include "cdpr/fft.hpp"
#include "cdpr/random.hpp"

using namespace cdpr;

namespace {

ComplexImage random_field(int n) {
  ComplexImage u(n, n);
  RandomStream rs(1, "bench/fft");
  for (cplx& v : u.data) v = cplx(rs.gaussian(), rs.gaussian());
  return u;
}

}  // namespace

// 64/128/256 hit the radix-2 path, 200 exercises Bluestein.
static void BM_dft2(benchmark::State& state) {
  const ComplexImage u = random_field(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dft2(u));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(u.data.size()));
}
BENCHMARK(BM_dft2)->Arg(64)->Arg(128)->Arg(200)->Arg(256)->Unit(benchmark::kMicrosecond);

static void BM_dft2_roundtrip(benchmark::State& state) {
  const ComplexImage u = random_field(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(idft2(dft2(u)));
}
BENCHMARK(BM_dft2_roundtrip)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
