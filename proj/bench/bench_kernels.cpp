// Serial reference vs OpenMP kernels on a state-dependent case.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>
#include <vector>

#include "fluidq/fluid.hpp"
#include "fluidq/kernels.hpp"

using namespace fluidq;

namespace {

struct Case {
  fluid::FluidParams params;
  std::vector<double> S, drain, B;
  std::vector<std::size_t> rows;
  std::vector<double> xs;
};

const Case& bench_case() {
  static const Case c = [] {
    Case c;
    auto& p = c.params;
    p.lambda = 1.2;
    p.service = make_lognormal(-0.125, 0.5);
    p.rate = RateFunction(CappedLinearRate{0.5, 1.0, 2.0});
    p.initial = InitialTail::from_law(0.5, make_lognormal(-0.125, 0.5));
    p.horizon = 4.0;
    p.dt = 1e-3;
    const auto X = fluid::solve_X(p).X;
    c.S = fluid::compute_S(X, p.rate, p.dt);
    for (double x : X) c.drain.push_back(std::max(x - 1.0, 0.0) * p.rate(x));
    c.B = fluid::compute_QB(X, p.lambda, p.dt).B;
    for (std::size_t i = 0; i <= p.steps(); i += 50) c.rows.push_back(i);
    for (int j = 0; j <= 200; ++j) c.xs.push_back(0.05 * j);
    return c;
  }();
  return c;
}

// Full sweep over the grid, the many-points path.
void BM_RhsSweep(benchmark::State& state, Execution e) {
  const Case& c = bench_case();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const std::size_t m = c.params.steps();
  std::vector<double> out(m + 1);
  for (auto _ : state) {
    kernels::fixed_point_rhs(e, c.params, c.S, c.drain, 0, m, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(m * m / 2));
}

// One late grid point, the per-block path used by short windows.
void BM_RhsSinglePoint(benchmark::State& state, Execution e) {
  const Case& c = bench_case();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const std::size_t m = c.params.steps();
  std::vector<double> out(1);
  for (auto _ : state) {
    kernels::fixed_point_rhs(e, c.params, c.S, c.drain, m, m, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_TailSurface(benchmark::State& state, Execution e) {
  const Case& c = bench_case();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  std::vector<double> out(c.rows.size() * c.xs.size());
  for (auto _ : state) {
    kernels::tail_surface(e, c.params, c.S, c.B, c.rows, c.xs, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_RhsSweep, serial, Execution::serial)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_RhsSweep, parallel, Execution::parallel)->DenseRange(1, 4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_RhsSinglePoint, serial, Execution::serial)->Arg(1)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_RhsSinglePoint, parallel, Execution::parallel)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_TailSurface, serial, Execution::serial)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_TailSurface, parallel, Execution::parallel)->DenseRange(1, 4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
