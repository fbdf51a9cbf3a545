#include "fluidq/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include <fmt/format.h>
#include <omp.h>

#include "fluidq/error.hpp"

namespace fluidq::harness {

namespace {

constexpr double kCellSlack = 1e-9;

Rng seeded(std::uint64_t seed, int n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n)};
  return Rng(seq);
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double max_of(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

GapRow compare_run(const Scenario& scenario, const fluid::FluidSolution* fluid, int n, std::uint64_t seed) {
  const sim::Trajectory traj = simulate(scenario, n, seed);
  const sim::ScaledTrajectory scaled = sim::scale(traj);
  GapRow row;
  row.n = n;
  row.seed = seed;
  if (!scaled.samples.empty()) row.final_x = scaled.samples.back().X;
  if (fluid == nullptr) return row;

  const auto indices = scenario.report_indices();
  if (indices.size() != scaled.samples.size()) {
    throw std::logic_error("simulation and fluid report grids differ");
  }
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    const auto& s = scaled.samples[r];
    row.x_gap = std::max(row.x_gap, std::abs(s.X - fluid->X[i]));
    row.q_gap = std::max(row.q_gap, std::abs(s.Q - fluid->Q[i]));
    row.b_gap = std::max(row.b_gap, std::abs(s.B - fluid->B[i]));
  }
  const auto snapshot_rows = scenario.snapshot_indices();
  for (std::size_t k = 0; k < snapshot_rows.size(); ++k) {
    const std::size_t tail_row = fluid->row_of(snapshot_rows[k]);
    if (tail_row == fluid::FluidSolution::npos) throw std::logic_error("snapshot row missing from fluid solution");
    row.prohorov.push_back(prohorov(scaled.snapshots[k].measure, discretize_fluid_measure(*fluid, tail_row)));
  }
  return row;
}

}  // namespace

fluid::FluidSolution solve_scenario(const Scenario& scenario, const fluid::SolverOptions& options) {
  std::vector<std::size_t> rows = scenario.report_indices();
  for (std::size_t i : scenario.snapshot_indices()) rows.push_back(i);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return fluid::solve(scenario.fluid_params(), scenario.x_grid.points(), std::move(rows), options);
}

sim::Trajectory simulate(const Scenario& scenario, int n, std::uint64_t seed, bool record_customers) {
  if (n < 1) throw ConfigError("number of servers must be positive");
  Rng rng = seeded(seed, n);
  const sim::InitialState initial =
      sim::sample_initial_state(n, scenario.initial, scenario.q0, scenario.service, rng);
  const sim::ArrivalFeed feed = scenario.lambda > 0.0
                                    ? sim::renewal_arrivals(scenario.arrival_law(n), scenario.service, rng)
                                    : sim::scheduled_arrivals({});
  sim::RunOptions options;
  options.horizon = scenario.horizon;
  options.report_times = scenario.report_times();
  options.snapshot_times = scenario.snapshots;
  options.record_customers = record_customers;
  return sim::run(n, initial, feed, scenario.rate, options);
}

ConvergenceReport convergence_experiment(const Scenario& scenario, const fluid::FluidSolution* fluid,
                                         std::span<const int> n_list, std::span<const std::uint64_t> seeds) {
  ConvergenceReport report;
  report.simulation_only = fluid == nullptr;
  report.snapshot_times = scenario.snapshots;
  report.grid_width = scenario.x_grid.step;

  std::vector<int> ns(n_list.begin(), n_list.end());
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<std::uint64_t> ss(seeds.begin(), seeds.end());
  std::sort(ss.begin(), ss.end());
  ss.erase(std::unique(ss.begin(), ss.end()), ss.end());

  const std::size_t tasks = ns.size() * ss.size();
  report.rows.resize(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  const auto count = static_cast<std::int64_t>(tasks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t t = 0; t < count; ++t) {
    const auto k = static_cast<std::size_t>(t);
    try {
      report.rows[k] = compare_run(scenario, fluid, ns[k / ss.size()], ss[k % ss.size()]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t a = 0; a < ns.size(); ++a) {
    GapSummary s;
    s.n = ns[a];
    std::vector<double> xs, qs, bs;
    for (std::size_t b = 0; b < ss.size(); ++b) {
      const GapRow& row = report.rows[a * ss.size() + b];
      xs.push_back(row.x_gap);
      qs.push_back(row.q_gap);
      bs.push_back(row.b_gap);
    }
    s.mean_x = mean(xs), s.max_x = max_of(xs);
    s.mean_q = mean(qs), s.max_q = max_of(qs);
    s.mean_b = mean(bs), s.max_b = max_of(bs);
    if (!report.simulation_only) {
      for (std::size_t k = 0; k < scenario.snapshots.size(); ++k) {
        std::vector<double> ps;
        for (std::size_t b = 0; b < ss.size(); ++b) ps.push_back(report.rows[a * ss.size() + b].prohorov[k]);
        s.mean_prohorov.push_back(mean(ps));
        s.max_prohorov.push_back(max_of(ps));
      }
    }
    report.summary.push_back(std::move(s));
  }
  return report;
}

AtomicMeasure discretize_tail(std::span<const double> x_grid, std::span<const double> z) {
  if (x_grid.size() != z.size()) throw ConfigError("level grid and tail values differ in length");
  std::vector<Atom> atoms;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const bool last = j + 1 == z.size();
    const double mass = last ? z[j] : z[j] - z[j + 1];
    if (mass < -kCellSlack) {
      throw NumericError(fmt::format("negative fluid mass {} on cell [{}, {}]; solver accuracy insufficient", mass,
                                     x_grid[j], last ? x_grid[j] : x_grid[j + 1]));
    }
    if (mass <= 0.0) continue;
    atoms.push_back({last ? x_grid[j] : 0.5 * (x_grid[j] + x_grid[j + 1]), mass});
  }
  return AtomicMeasure(std::move(atoms));
}

AtomicMeasure discretize_fluid_measure(const fluid::FluidSolution& solution, std::size_t row) {
  const std::size_t width = solution.x_grid.size();
  return discretize_tail(solution.x_grid, std::span<const double>(solution.tail).subspan(row * width, width));
}

GcResult gc_max_deviation(const ServiceLaw& law, std::span<const double> v, std::int64_t first, int n,
                          std::span<const std::int64_t> ms, std::span<const double> ells,
                          std::span<const double> x_grid) {
  if (!std::is_sorted(x_grid.begin(), x_grid.end())) throw ConfigError("x_grid must be sorted");
  if (!std::is_sorted(ells.begin(), ells.end())) throw ConfigError("ell lattice must be sorted");
  const std::size_t g = x_grid.size();
  std::vector<double> closed_ref(g), open_ref(g);
  for (std::size_t j = 0; j < g; ++j) {
    closed_ref[j] = law.tail_closed(x_grid[j]);
    open_ref[j] = law.tail(x_grid[j]);
  }
  // Bucket of each sample: number of levels <= v (closed) and < v (open).
  std::vector<std::size_t> le(v.size()), lt(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    le[i] = static_cast<std::size_t>(std::upper_bound(x_grid.begin(), x_grid.end(), v[i]) - x_grid.begin());
    lt[i] = static_cast<std::size_t>(std::lower_bound(x_grid.begin(), x_grid.end(), v[i]) - x_grid.begin());
  }

  GcResult best;
  std::vector<std::int64_t> hist_le(g + 1), hist_lt(g + 1);
  for (std::int64_t m : ms) {
    std::fill(hist_le.begin(), hist_le.end(), 0);
    std::fill(hist_lt.begin(), hist_lt.end(), 0);
    std::int64_t used = 0;
    for (double ell : ells) {
      const auto count = static_cast<std::int64_t>(std::floor(n * ell));
      if (m + 1 < first || m + count - first >= static_cast<std::int64_t>(v.size())) {
        throw std::logic_error("sample block does not cover L^n(m, ell)");
      }
      for (; used < count; ++used) {
        const auto i = static_cast<std::size_t>(m + 1 + used - first);
        ++hist_le[le[i]];
        ++hist_lt[lt[i]];
      }
      // #{v >= x_j} = #{le > j}; #{v > x_j} = #{lt > j}.
      std::int64_t above_closed = 0, above_open = 0;
      for (std::size_t j = g; j-- > 0;) {
        above_closed += hist_le[j + 1];
        above_open += hist_lt[j + 1];
        const double dc = std::abs(static_cast<double>(above_closed) / n - ell * closed_ref[j]);
        const double dopen = std::abs(static_cast<double>(above_open) / n - ell * open_ref[j]);
        if (dc > best.deviation) best = {dc, m, ell, x_grid[j], false};
        if (dopen > best.deviation) best = {dopen, m, ell, x_grid[j], true};
      }
    }
  }
  return best;
}

GcResult glivenko_cantelli_check(const ServiceLaw& law, int n, double M, double L, std::span<const double> x_grid,
                                 std::uint64_t seed) {
  if (n < 1 || !(M > 0.0) || !(L >= 0.0)) throw ConfigError("glivenko_cantelli_check needs n >= 1, M > 0, L >= 0");
  if (static_cast<double>(n) * L < 1.0) throw ConfigError("glivenko_cantelli_check needs n L >= 1");

  constexpr int kMPoints = 16;
  constexpr int kEllPoints = 64;
  const double span = static_cast<double>(n) * M;
  std::vector<std::int64_t> ms;
  for (int k = 0; k < kMPoints; ++k) {
    ms.push_back(static_cast<std::int64_t>(std::llround(-span + (k + 1) * 2.0 * span / (kMPoints + 1))));
  }
  std::vector<double> ells;
  for (int q = 0; q <= kEllPoints; ++q) ells.push_back(L * q / kEllPoints);

  // v_i for i in [first, last].
  const std::int64_t first = ms.front() + 1;
  const std::int64_t last = ms.back() + static_cast<std::int64_t>(std::floor(n * L));
  Rng rng = seeded(seed, n);
  std::vector<double> v(static_cast<std::size_t>(std::max<std::int64_t>(0, last - first + 1)));
  for (double& x : v) x = law.sample(rng);
  return gc_max_deviation(law, v, first, n, ms, ells, x_grid);
}

double oscillation(std::size_t points, double dt, double delta, const PathMetric& metric) {
  if (!(delta > 0.0)) throw ConfigError("oscillation needs delta > 0");
  const auto reach = static_cast<std::size_t>(std::floor(delta / dt + 1e-9));
  double w = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    for (std::size_t j = i + 1; j < points && j - i <= reach; ++j) w = std::max(w, metric(i, j));
  }
  return w;
}

double oscillation(std::span<const double> path, double dt, double delta) {
  return oscillation(path.size(), dt, delta, [&](std::size_t i, std::size_t j) { return std::abs(path[i] - path[j]); });
}

double oscillation(std::span<const AtomicMeasure> path, double dt, double delta) {
  return oscillation(path.size(), dt, delta,
                     [&](std::size_t i, std::size_t j) { return prohorov(path[i], path[j]); });
}

double weak_oscillation(std::size_t points, double dt, double delta, const PathMetric& metric) {
  if (!(delta > 0.0)) throw ConfigError("oscillation needs delta > 0");
  if (points < 2) throw ConfigError("weak oscillation needs at least two grid points");
  const std::size_t last = points - 1;
  // A cell [a, b) of grid indices is admissible when (b - a) dt > delta.
  const auto min_cell = static_cast<std::size_t>(std::floor(delta / dt + 1e-9)) + 1;
  if (min_cell > last) throw ConfigError("weak oscillation needs T > delta");

  // diam[a][b] = max d over index pairs in [a, b); filled from short cells up.
  std::vector<std::vector<double>> diam(points, std::vector<double>(points + 1, 0.0));
  for (std::size_t len = 2; len <= points; ++len) {
    for (std::size_t a = 0; a + len <= points; ++a) {
      const std::size_t b = a + len;
      double d = std::max(diam[a][b - 1], diam[a + 1][b]);
      d = std::max(d, metric(a, b - 1));
      diam[a][b] = d;
    }
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(points, kInf);
  best[0] = 0.0;
  for (std::size_t b = min_cell; b <= last; ++b) {
    for (std::size_t a = 0; a + min_cell <= b; ++a) {
      if (best[a] == kInf) continue;
      best[b] = std::min(best[b], std::max(best[a], diam[a][b]));
    }
  }
  return best[last];
}

double weak_oscillation(std::span<const AtomicMeasure> z, std::span<const double> q, double dt, double delta) {
  if (z.size() != q.size()) throw ConfigError("measure and scalar paths differ in length");
  return weak_oscillation(z.size(), dt, delta, [&](std::size_t i, std::size_t j) {
    return std::max(prohorov(z[i], z[j]), std::abs(q[i] - q[j]));
  });
}

}  // namespace fluidq::harness
