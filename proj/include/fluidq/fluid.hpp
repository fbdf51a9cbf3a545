#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fluidq/distributions.hpp"
#include "fluidq/measures.hpp"

namespace fluidq {

enum class Execution { serial, parallel };

}  // namespace fluidq

namespace fluidq::fluid {

/// Q0 = (X0 - 1)^+ with X0 = Q0 + F(0), to 1e-9. Throws ConfigError.
void check_initial_condition(const InitialTail& initial, double q0);

/// Inputs of the fluid model (k, lambda, nu) on [0, T].
struct FluidParams {
  double lambda = 0.0;
  ServiceLaw service = make_exponential(1.0);
  RateFunction rate = RateFunction(ConstantRate{1.0});
  InitialTail initial;
  double q0 = 0.0;
  double horizon = 1.0;
  double dt = 1e-3;

  /// Throws ConfigError when the inputs are inconsistent at time zero
  /// (Q0 = (X0 - 1)^+ with X0 = Q0 + F(0)) or the service law has no
  /// Lipschitz density.
  void validate() const;
  std::size_t steps() const;
  double time(std::size_t i) const { return static_cast<double>(i) * dt; }

  // H1(s) = F(s) + Q0 G^c(s)
  double h1(double s) const { return initial(s) + q0 * service.tail(s); }
  bool is_zero() const { return lambda == 0.0 && initial.is_empty() && q0 == 0.0; }
};

enum class PicardStart {
  constant,  // extend the last known value across the window
  warm,      // H1(S(0, t)) with S extrapolated at the last known rate
};

struct SolverOptions {
  double tolerance = 1e-6;          // residual contract, relative to 1 + sup|X|
  double picard_tolerance = 1e-11;  // sweep-to-sweep change, relative to 1 + sup|X|
  int max_iterations = 200;
  double contraction_target = 0.5;
  PicardStart start = PicardStart::constant;
  Execution execution = Execution::parallel;
};

struct StepSizeRule {
  double cutoff_radius = 0.0;         // a-priori bound on sup|X| from Gronwall
  double contraction_constant = 0.0;  // C with contraction factor C h
  double window = 0.0;                // h after capping at T/10 and flooring at dt
};

/// Window length for the Picard marching: C h <= target where C collects the
/// Lipschitz and sup-norm constants of the integrands over |x| <= d3 + 1.
StepSizeRule step_size_rule(const FluidParams& params, double contraction_target = 0.5);

struct Diagnostics {
  StepSizeRule rule;
  std::size_t windows = 0;
  std::size_t window_steps = 0;
  std::vector<int> iterations;  // per window
  double residual = 0.0;        // sup-norm defect of the returned path
};

struct XPath {
  std::vector<double> X;
  Diagnostics diagnostics;
};

/// Solve X_t = H1(S(0,t)) + int_0^t lambda G^c(S(s,t)) ds
///           + int_0^t (X_s - 1)^+ k(X_s) g(S(s,t)) ds,   S(s,t) = int_s^t k(X_u) du,
/// on the grid t_i = i dt with trapezoid quadrature, window by window.
/// Throws NumericError when a single-step window still fails to contract.
XPath solve_X(const FluidParams& params, const SolverOptions& options = {});

/// Cumulative trapezoid integral of k(X) on the grid.
std::vector<double> compute_S(std::span<const double> X, const RateFunction& rate, double dt);

struct QueueAndEntry {
  std::vector<double> Q;
  std::vector<double> B;
};

/// Q = (X - 1)^+ and B = lambda t - Q. Throws NumericError when B decreases by
/// more than `slack` between grid points.
QueueAndEntry compute_QB(std::span<const double> X, double lambda, double dt, double slack = 1e-9);

/// sup_i |X_i - RHS_i(X)| with the solver's quadrature.
double verify_fixed_point(const FluidParams& params, std::span<const double> X,
                          Execution execution = Execution::parallel);

struct FluidSolution {
  std::vector<double> t;
  std::vector<double> X;
  std::vector<double> Q;
  std::vector<double> B;
  std::vector<double> S;
  // z(t, x) = Z_t([x, inf)) for t in tail_rows (grid indices) and x in x_grid,
  // stored row-major.
  std::vector<std::size_t> tail_rows;
  std::vector<double> x_grid;
  std::vector<double> tail;
  Diagnostics diagnostics;

  double z(std::size_t row, std::size_t col) const { return tail[row * x_grid.size() + col]; }
  /// Row of the tail surface at grid index i, or npos.
  std::size_t row_of(std::size_t grid_index) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Z_t([x, inf)) = F(x + S(0,t)) + sum_j G^c(x + S(s_j*, t)) (B_{j+1} - B_j),
/// with s_j* the midpoint of grid cell j, at t = t_i.
double fluid_tail(const FluidParams& params, std::span<const double> S, std::span<const double> B, double x,
                  std::size_t i);
double fluid_tail(const FluidParams& params, const FluidSolution& solution, double x, std::size_t i);

/// Full pipeline: X, then S, Q, B and the tail surface on (tail_rows x x_grid).
FluidSolution solve(const FluidParams& params, std::vector<double> x_grid, std::vector<std::size_t> tail_rows,
                    const SolverOptions& options = {});

}  // namespace fluidq::fluid
