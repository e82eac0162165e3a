#include <benchmark/benchmark.h>

#include <optional>
#include <vector>

#include "cdpr/fft.hpp"
#include "cdpr/maskgen.hpp"
#include "cdpr/optics.hpp"
#include "cdpr/random.hpp"
#include "cdpr/solver.hpp"

using namespace cdpr;

namespace {

ComplexImage random_field(int n, std::uint64_t seed) {
  ComplexImage u(n, n);
  RandomStream rs(seed, "bench/solver");
  for (cplx& v : u.data) v = cplx(rs.gaussian(), rs.gaussian());
  return u;
}

MeasurementSet bench_set(int n, int m) {
  std::vector<BinaryMask> masks;
  for (int i = 0; i < m; ++i) {
    masks.push_back(white_noise_mask(n, n, 0.5, static_cast<std::uint64_t>(i) + 1));
  }
  return acquire(random_field(n, 7), masks, std::nullopt, std::nullopt, 0.2);
}

}  // namespace

// The CG-based u-step, the hot inner kernel of every ADMM iteration.
static void BM_u_update(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MeasurementSet ms = bench_set(n, 3);
  const ComplexImage u0 = random_field(n, 8);
  std::vector<ComplexImage> z, lambda;
  for (const auto& item : ms.items) {
    ComplexImage cu = u0;
    for (std::size_t j = 0; j < cu.data.size(); ++j) {
      cu.data[j] *= static_cast<double>(item.mask.bits[j]);
    }
    z.push_back(dft2(cu));
    lambda.push_back(ComplexImage(n, n));
  }
  const GradField w = grad_forward(u0);
  const GradField mu{ComplexImage(n, n), ComplexImage(n, n)};
  SolverConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(u_update(z, lambda, &w, &mu, ms, cfg));
}
BENCHMARK(BM_u_update)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

// Whole-pipeline cost for a fixed iteration budget.
static void BM_solve_tv_map(benchmark::State& state) {
  const MeasurementSet ms = bench_set(64, 3);
  SolverConfig cfg;
  cfg.max_iters = static_cast<int>(state.range(0));
  cfg.rel_tol = 1e-300;  // never triggers; every run does max_iters
  for (auto _ : state) benchmark::DoNotOptimize(solve_tv_map(ms, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_solve_tv_map)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);
