#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fluidq/fluid.hpp"
#include "fluidq/measures.hpp"
#include "fluidq/scenario.hpp"
#include "fluidq/simulator.hpp"

namespace fluidq::harness {

/// Fluid solution on the scenario grid, with tail rows at every report and
/// snapshot time.
fluid::FluidSolution solve_scenario(const Scenario& scenario, const fluid::SolverOptions& options = {});

/// One n-server replication. The stream is seeded from (seed, n), so every
/// (n, seed) pair is reproducible on its own.
sim::Trajectory simulate(const Scenario& scenario, int n, std::uint64_t seed, bool record_customers = false);

struct GapRow {
  int n = 0;
  std::uint64_t seed = 0;
  double x_gap = 0.0;  // sup over the report grid of |X^n/n - X|
  double q_gap = 0.0;
  double b_gap = 0.0;
  double final_x = 0.0;            // scaled head count at the horizon
  std::vector<double> prohorov;    // per snapshot, scaled simulation vs discretised fluid measure
};

struct GapSummary {
  int n = 0;
  double mean_x = 0.0, max_x = 0.0;
  double mean_q = 0.0, max_q = 0.0;
  double mean_b = 0.0, max_b = 0.0;
  std::vector<double> mean_prohorov;
  std::vector<double> max_prohorov;
};

struct ConvergenceReport {
  // No fluid target (service law without density): only final_x is filled.
  bool simulation_only = false;
  std::vector<double> snapshot_times;
  // Discretisation allowance added to reported Prohorov distances.
  double grid_width = 0.0;
  std::vector<GapRow> rows;  // sorted by (n, seed)
  std::vector<GapSummary> summary;
};

/// Simulate every (n, seed), scale and compare against `fluid` on the report
/// grid. `fluid` may be null, which gives a simulation-only report. Runs are
/// independent and fan out over OpenMP threads; the result does not depend
/// on the thread count.
ConvergenceReport convergence_experiment(const Scenario& scenario, const fluid::FluidSolution* fluid,
                                         std::span<const int> n_list, std::span<const std::uint64_t> seeds);

/// Atoms of weight z_j - z_{j+1} at cell midpoints plus the remaining z_m at
/// the last level, so the total mass is z_0. Throws NumericError when a cell
/// mass is below -1e-9.
AtomicMeasure discretize_tail(std::span<const double> x_grid, std::span<const double> z);
AtomicMeasure discretize_fluid_measure(const fluid::FluidSolution& solution, std::size_t row);

struct GcResult {
  double deviation = 0.0;
  // Where the maximum was attained.
  std::int64_t m = 0;
  double ell = 0.0;
  double x = 0.0;
  bool open = false;  // (x, inf) rather than [x, inf)
};

/// max over m in ms, ell in ells and the indicators of [x, inf), (x, inf) for
/// x in x_grid of |<f, L^n(m, ell)> - ell <f, nu>|, where v[i - first] holds
/// the requirement v_i. Every index m + 1 .. m + floor(n ell) must be in v.
GcResult gc_max_deviation(const ServiceLaw& law, std::span<const double> v, std::int64_t first, int n,
                          std::span<const std::int64_t> ms, std::span<const double> ells,
                          std::span<const double> x_grid);

/// max over m on a 16-point lattice in (-nM, nM), ell in {q L / 64} and the
/// indicators of [x, inf), (x, inf) for x in x_grid of
/// |<f, L^n(m, ell)> - ell <f, nu>|, with L^n(m, ell) = (1/n) sum_{i=m+1}^{m+floor(n ell)} delta_{v_i}.
GcResult glivenko_cantelli_check(const ServiceLaw& law, int n, double M, double L, std::span<const double> x_grid,
                                 std::uint64_t seed);

/// d(i, j) between path points i and j.
using PathMetric = std::function<double(std::size_t, std::size_t)>;

/// sup of d(s, t) over grid pairs with |s - t| <= delta, for a path of
/// `points` samples spaced dt apart.
double oscillation(std::size_t points, double dt, double delta, const PathMetric& metric);
double oscillation(std::span<const double> path, double dt, double delta);
double oscillation(std::span<const AtomicMeasure> path, double dt, double delta);

/// inf over partitions 0 = t_0 < ... < t_j = T of grid times with every cell
/// longer than delta of max_i sup_{s,t in [t_{i-1}, t_i)} d(s, t).
/// Throws ConfigError when T <= delta.
double weak_oscillation(std::size_t points, double dt, double delta, const PathMetric& metric);
/// With d' = max(prohorov, |q_s - q_t|) on measure/scalar pairs.
double weak_oscillation(std::span<const AtomicMeasure> z, std::span<const double> q, double dt, double delta);

}  // namespace fluidq::harness
