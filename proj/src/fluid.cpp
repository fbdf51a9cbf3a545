#include "fluidq/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fluidq/error.hpp"
#include "fluidq/kernels.hpp"

namespace fluidq::fluid {

namespace {

constexpr double kConsistencyTolerance = 1e-9;

std::vector<double> drain_terms(std::span<const double> X, const RateFunction& rate) {
  std::vector<double> drain(X.size());
  for (std::size_t j = 0; j < X.size(); ++j) drain[j] = std::max(X[j] - 1.0, 0.0) * rate(X[j]);
  return drain;
}

double sup_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

void check_initial_condition(const InitialTail& initial, double q0) {
  const double z0 = initial.mass();
  const double x0 = q0 + z0;
  if (std::abs(q0 - std::max(x0 - 1.0, 0.0)) > kConsistencyTolerance || z0 > 1.0 + kConsistencyTolerance) {
    throw ConfigError(fmt::format(
        "inconsistent initial condition: Q0={} and F(0)={} violate Q0 = (X0 - 1)^+ with X0 = Q0 + F(0) "
        "(Q0 > 0 requires F(0) = 1)",
        q0, z0));
  }
}

void FluidParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and nonnegative");
  if (!(q0 >= 0.0) || !std::isfinite(q0)) throw ConfigError("Q0 must be finite and nonnegative");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be finite and nonnegative");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!service.has_lipschitz_density()) {
    throw ConfigError(fmt::format("density required: {} service law has no Lipschitz density", service.kind()));
  }
  if (!std::isfinite(initial.lipschitz())) throw ConfigError("initial tail F must be Lipschitz");
  check_initial_condition(initial, q0);
}

std::size_t FluidParams::steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

StepSizeRule step_size_rule(const FluidParams& p, double contraction_target) {
  const double T = p.horizon;
  const double k_sup = p.rate.bound();
  const double k_lip = p.rate.lipschitz();
  const double g_sup = p.service.density_bound();
  const double g_lip = p.service.density_lipschitz();

  // Gronwall: |x_t| <= d1 + d2 int_0^t |x_s| ds  =>  |x_t| <= d1 e^{d2 T}.
  const double d1 = p.initial.mass() + p.q0 + p.lambda * T;
  const double d2 = k_sup * g_sup;
  const double d3 = d1 * std::exp(d2 * T);

  // Constants of the cut-off integrands over |x| <= d3 + 1.
  const double l1 = p.initial.lipschitz() + p.q0 * g_sup;  // H1 = F + Q0 G^c
  const double l2 = p.lambda * g_sup;                      // H2 = lambda G^c
  const double h3_sup = d3 * k_sup;                        // (x - 1)^+ k(x)
  const double l3 = k_sup + d3 * k_lip;
  const double h4_sup = g_sup;  // g
  const double l4 = g_lip;

  StepSizeRule rule;
  rule.cutoff_radius = d3;
  rule.contraction_constant = l1 * k_lip + l2 * k_lip * T + h3_sup * l4 * k_lip * T + h4_sup * l3;
  double h = rule.contraction_constant > 0.0 ? contraction_target / rule.contraction_constant
                                             : std::numeric_limits<double>::infinity();
  h = std::min(h, T / 10.0);
  rule.window = std::max(h, p.dt);
  return rule;
}

std::vector<double> compute_S(std::span<const double> X, const RateFunction& rate, double dt) {
  std::vector<double> S(X.size(), 0.0);
  double previous = X.empty() ? 0.0 : rate(X[0]);
  for (std::size_t i = 1; i < X.size(); ++i) {
    const double current = rate(X[i]);
    S[i] = S[i - 1] + 0.5 * dt * (previous + current);
    previous = current;
  }
  return S;
}

QueueAndEntry compute_QB(std::span<const double> X, double lambda, double dt, double slack) {
  QueueAndEntry out;
  out.Q.resize(X.size());
  out.B.resize(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    out.Q[i] = std::max(X[i] - 1.0, 0.0);
    out.B[i] = lambda * (static_cast<double>(i) * dt) - out.Q[i];
    if (i > 0 && out.B[i] - out.B[i - 1] < -slack) {
      throw NumericError(fmt::format("B decreases by {} at t={}; solver accuracy insufficient, reduce dt",
                                     out.B[i - 1] - out.B[i], static_cast<double>(i) * dt));
    }
  }
  return out;
}

double verify_fixed_point(const FluidParams& params, std::span<const double> X, Execution execution) {
  if (X.empty()) return 0.0;
  const std::vector<double> S = compute_S(X, params.rate, params.dt);
  const std::vector<double> drain = drain_terms(X, params.rate);
  std::vector<double> rhs(X.size());
  kernels::fixed_point_rhs(execution, params, S, drain, 0, X.size() - 1, rhs);
  double defect = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) defect = std::max(defect, std::abs(X[i] - rhs[i]));
  return defect;
}

XPath solve_X(const FluidParams& params, const SolverOptions& options) {
  params.validate();
  const std::size_t m = params.steps();
  XPath out;
  out.X.assign(m + 1, 0.0);
  Diagnostics& diag = out.diagnostics;
  diag.rule = step_size_rule(params, options.contraction_target);
  if (params.is_zero()) return out;

  std::vector<double>& X = out.X;
  std::vector<double> S(m + 1, 0.0);
  std::vector<double> drain(m + 1, 0.0);
  std::vector<double> next;
  X[0] = params.h1(0.0);
  drain[0] = std::max(X[0] - 1.0, 0.0) * params.rate(X[0]);

  const auto rule_steps = static_cast<std::size_t>(std::floor(diag.rule.window / params.dt + 1e-9));
  std::size_t window = std::max<std::size_t>(1, rule_steps);
  diag.window_steps = window;

  std::size_t first = 1;
  while (first <= m) {
    const std::size_t last = std::min(m, first + window - 1);
    const double anchor = X[first - 1];
    const double anchor_rate = params.rate(anchor);
    for (std::size_t i = first; i <= last; ++i) {
      if (options.start == PicardStart::warm) {
        X[i] = params.h1(S[first - 1] + anchor_rate * params.time(i - first + 1));
      } else {
        X[i] = anchor;
      }
    }

    bool converged = false;
    int iterations = 0;
    int growing = 0;
    double previous_change = std::numeric_limits<double>::infinity();
    next.resize(last - first + 1);
    while (iterations < options.max_iterations) {
      ++iterations;
      double level = S[first - 1];
      double prev_rate = params.rate(X[first - 1]);
      for (std::size_t i = first; i <= last; ++i) {
        const double r = params.rate(X[i]);
        level += 0.5 * params.dt * (prev_rate + r);
        S[i] = level;
        prev_rate = r;
        drain[i] = std::max(X[i] - 1.0, 0.0) * r;
      }
      kernels::fixed_point_rhs(options.execution, params, S, drain, first, last, next);
      double change = 0.0;
      double scale = 0.0;
      for (std::size_t i = first; i <= last; ++i) {
        change = std::max(change, std::abs(next[i - first] - X[i]));
        scale = std::max(scale, std::abs(next[i - first]));
        X[i] = next[i - first];
      }
      if (!std::isfinite(change)) break;
      if (change <= options.picard_tolerance * (1.0 + scale)) {
        converged = true;
        break;
      }
      growing = change > previous_change ? growing + 1 : 0;
      if (growing >= 5) break;
      previous_change = change;
    }

    if (!converged) {
      if (window > 1) {
        window = std::max<std::size_t>(1, window / 2);
        continue;
      }
      throw NumericError(fmt::format(
          "Picard iteration does not contract on the single-step window at t={} after {} iterations "
          "(contraction constant {}, cutoff radius {})",
          params.time(first), iterations, diag.rule.contraction_constant, diag.rule.cutoff_radius));
    }
    // Final S and drain consistent with the accepted X.
    {
      double level = S[first - 1];
      double prev_rate = params.rate(X[first - 1]);
      for (std::size_t i = first; i <= last; ++i) {
        const double r = params.rate(X[i]);
        level += 0.5 * params.dt * (prev_rate + r);
        S[i] = level;
        prev_rate = r;
        drain[i] = std::max(X[i] - 1.0, 0.0) * r;
      }
    }
    diag.iterations.push_back(iterations);
    ++diag.windows;
    first = last + 1;
  }

  diag.residual = verify_fixed_point(params, X, options.execution);
  if (diag.residual > options.tolerance * (1.0 + sup_abs(X))) {
    throw NumericError(fmt::format("fixed-point residual {} exceeds tolerance", diag.residual));
  }
  return out;
}

std::size_t FluidSolution::row_of(std::size_t grid_index) const {
  auto it = std::find(tail_rows.begin(), tail_rows.end(), grid_index);
  return it == tail_rows.end() ? npos : static_cast<std::size_t>(it - tail_rows.begin());
}

double fluid_tail(const FluidParams& params, std::span<const double> S, std::span<const double> B, double x,
                  std::size_t i) {
  const std::size_t rows[] = {i};
  const double xs[] = {x};
  double out = 0.0;
  kernels::tail_surface_serial(params, S, B, rows, xs, std::span<double>(&out, 1));
  return out;
}

double fluid_tail(const FluidParams& params, const FluidSolution& solution, double x, std::size_t i) {
  return fluid_tail(params, solution.S, solution.B, x, i);
}

FluidSolution solve(const FluidParams& params, std::vector<double> x_grid, std::vector<std::size_t> tail_rows,
                    const SolverOptions& options) {
  XPath path = solve_X(params, options);
  FluidSolution sol;
  const std::size_t m = params.steps();
  sol.t.resize(m + 1);
  for (std::size_t i = 0; i <= m; ++i) sol.t[i] = params.time(i);
  sol.X = std::move(path.X);
  sol.diagnostics = std::move(path.diagnostics);
  sol.S = compute_S(sol.X, params.rate, params.dt);
  auto qb = compute_QB(sol.X, params.lambda, params.dt);
  sol.Q = std::move(qb.Q);
  sol.B = std::move(qb.B);
  for (std::size_t r : tail_rows) {
    if (r > m) throw ConfigError(fmt::format("tail row {} beyond the last grid index {}", r, m));
  }
  sol.tail_rows = std::move(tail_rows);
  sol.x_grid = std::move(x_grid);
  sol.tail.assign(sol.tail_rows.size() * sol.x_grid.size(), 0.0);
  kernels::tail_surface(options.execution, params, sol.S, sol.B, sol.tail_rows, sol.x_grid, sol.tail);
  return sol;
}

}  // namespace fluidq::fluid
