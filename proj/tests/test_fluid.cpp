#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "fluidq/error.hpp"
#include "fluidq/fluid.hpp"

using namespace fluidq;
using namespace fluidq::fluid;

namespace {

FluidParams exponential_case(double lambda, double horizon, double dt = 1e-3) {
  FluidParams p;
  p.lambda = lambda;
  p.service = make_exponential(1.0);
  p.rate = RateFunction(ConstantRate{1.0});
  p.horizon = horizon;
  p.dt = dt;
  return p;
}

FluidParams state_dependent_case() {
  FluidParams p;
  p.lambda = 1.2;
  p.service = make_lognormal(-0.125, 0.5);
  p.rate = RateFunction(CappedLinearRate{0.5, 1.0, 2.0});
  p.initial = InitialTail::from_law(0.5, make_lognormal(-0.125, 0.5));
  p.horizon = 3.0;
  return p;
}

FluidParams congested_case() {
  FluidParams p;
  p.lambda = 0.8;
  p.service = make_exponential(1.0);
  p.rate = RateFunction(CappedLinearRate{1.0, -0.25, 1.0});
  p.initial = InitialTail::from_law(1.0, make_exponential(1.0));
  p.q0 = 0.3;
  p.horizon = 3.0;
  return p;
}

// Classic RK4 on x' = f(x) with `substeps` steps per grid cell; returns x on the grid.
std::vector<double> rk4(const std::function<double(double)>& f, double x0, double horizon, double dt, int substeps) {
  const auto m = static_cast<std::size_t>(std::llround(horizon / dt));
  std::vector<double> out(m + 1);
  double x = x0;
  out[0] = x;
  const double h = dt / substeps;
  for (std::size_t i = 1; i <= m; ++i) {
    for (int s = 0; s < substeps; ++s) {
      const double k1 = f(x), k2 = f(x + 0.5 * h * k1), k3 = f(x + 0.5 * h * k2), k4 = f(x + h * k3);
      x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    out[i] = x;
  }
  return out;
}

// Exponential service with rate mu: departures occur at rate mu k(X) min(X, 1).
std::vector<double> exponential_oracle(const FluidParams& p, double mu) {
  const double x0 = p.q0 + p.initial.mass();
  return rk4([&](double x) { return p.lambda - mu * p.rate(x) * std::min(x, 1.0); }, x0, p.horizon, p.dt, 100);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<std::size_t> every(std::size_t stride, std::size_t m) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i <= m; i += stride) rows.push_back(i);
  return rows;
}

std::vector<double> levels(double stop, double step) {
  std::vector<double> xs;
  for (int j = 0; j * step <= stop + 1e-12; ++j) xs.push_back(j * step);
  return xs;
}

}  // namespace

TEST(SolveX, ZeroInputGivesZeroPath) {
  auto p = exponential_case(0.0, 2.0);
  const auto path = solve_X(p);
  EXPECT_TRUE(std::all_of(path.X.begin(), path.X.end(), [](double x) { return x == 0.0; }));
  EXPECT_EQ(verify_fixed_point(p, path.X), 0.0);
}

TEST(SolveX, UnderloadedClosedForm) {
  const auto p = exponential_case(0.5, 5.0);
  const auto path = solve_X(p);
  double err = 0.0;
  for (std::size_t i = 0; i < path.X.size(); ++i) {
    err = std::max(err, std::abs(path.X[i] - 0.5 * (1.0 - std::exp(-p.time(i)))));
  }
  EXPECT_LE(err, 1e-4);
}

TEST(SolveX, OverloadedMatchesOdeOracle) {
  const auto p = exponential_case(2.0, 4.0);
  const auto path = solve_X(p);
  EXPECT_LE(sup_diff(path.X, exponential_oracle(p, 1.0)), 1e-3);
  // Closed form: 2 (1 - e^{-t}) up to ln 2, then 1 + (t - ln 2).
  for (std::size_t i = 0; i < path.X.size(); ++i) {
    const double t = p.time(i);
    const double exact = t <= std::numbers::ln2 ? 2.0 * (1.0 - std::exp(-t)) : 1.0 + t - std::numbers::ln2;
    EXPECT_NEAR(path.X[i], exact, 1e-3);
  }
  const auto kink = std::find_if(path.X.begin(), path.X.end(), [](double x) { return x > 1.0 + 1e-9; });
  ASSERT_NE(kink, path.X.end());
  const double t_kink = p.time(static_cast<std::size_t>(kink - path.X.begin()));
  EXPECT_NEAR(t_kink, std::numbers::ln2, 2 * p.dt);
}

TEST(SolveX, StateDependentRateMatchesOdeOracle) {
  // Memoryless service keeps the ODE reduction exact even with k(x) varying.
  const auto p = congested_case();
  const auto path = solve_X(p);
  EXPECT_LE(sup_diff(path.X, exponential_oracle(p, 1.0)), 1e-3);

  auto fast = exponential_case(1.5, 3.0);
  fast.service = make_exponential(2.0);
  fast.rate = RateFunction(CappedLinearRate{0.5, 1.0, 2.0});
  EXPECT_LE(sup_diff(solve_X(fast).X, exponential_oracle(fast, 2.0)), 1e-3);
}

TEST(SolveX, RejectsLawWithoutDensity) {
  auto p = exponential_case(0.5, 1.0);
  p.service = make_deterministic(0.5);
  try {
    solve_X(p);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("density required"), std::string::npos);
  }
  p.service = make_uniform(0.0, 2.0);
  EXPECT_THROW(solve_X(p), ConfigError);
}

TEST(SolveX, RejectsInconsistentInitialCondition) {
  auto p = exponential_case(0.5, 1.0);
  p.q0 = 1.0;
  p.initial = InitialTail::from_law(0.5, make_exponential(1.0));
  EXPECT_THROW(solve_X(p), ConfigError);
  p.initial = InitialTail::from_law(1.0, make_exponential(1.0));
  EXPECT_NO_THROW(solve_X(p));
  p.q0 = 0.0;
  p.initial = InitialTail::from_law(1.2, make_exponential(1.0));
  EXPECT_THROW(solve_X(p), ConfigError);
}

TEST(SolveX, UniquenessProbe) {
  for (const auto& p : {exponential_case(0.5, 3.0), exponential_case(2.0, 3.0), state_dependent_case(),
                        congested_case()}) {
    SolverOptions constant, warm;
    warm.start = PicardStart::warm;
    const auto a = solve_X(p, constant);
    const auto b = solve_X(p, warm);
    EXPECT_LE(sup_diff(a.X, b.X), 10 * constant.tolerance);
  }
}

TEST(SolveX, SerialAndParallelAgreeBitForBit) {
  SolverOptions serial, parallel;
  serial.execution = Execution::serial;
  parallel.execution = Execution::parallel;
  for (const auto& p : {exponential_case(2.0, 2.0), state_dependent_case()}) {
    EXPECT_EQ(solve_X(p, serial).X, solve_X(p, parallel).X);
  }
}

TEST(SolveX, GridRefinementOrder) {
  // Successive differences along a dt ladder shrink by 2^order.
  for (const auto& base : {exponential_case(2.0, 2.0), state_dependent_case()}) {
    std::vector<std::vector<double>> paths;
    const std::vector<double> dts = {0.02, 0.01, 0.005, 0.0025};
    for (double dt : dts) {
      auto p = base;
      p.horizon = 2.0;
      p.dt = dt;
      paths.push_back(solve_X(p).X);
    }
    // Compare on the coarsest grid.
    auto coarse_gap = [&](std::size_t a) {
      const std::size_t stride_a = 1u << a, stride_b = 2u << a;
      double d = 0.0;
      for (std::size_t i = 0; i * stride_a < paths[a].size() && i * stride_b < paths[a + 1].size(); ++i) {
        d = std::max(d, std::abs(paths[a][i * stride_a] - paths[a + 1][i * stride_b]));
      }
      return d;
    };
    for (std::size_t a = 0; a + 2 < paths.size(); ++a) {
      const double ratio = coarse_gap(a) / coarse_gap(a + 1);
      RecordProperty("ratio_" + std::to_string(a), std::to_string(ratio));
      // At least first order; the trapezoid rule delivers about 4.
      EXPECT_GE(ratio, 1.5);
      EXPECT_LE(ratio, 4.5);
    }
  }
}

TEST(SolveX, IncrementsAreLipschitz) {
  for (const auto& p : {exponential_case(2.0, 4.0), state_dependent_case(), congested_case()}) {
    const auto path = solve_X(p);
    const double c = p.lambda + p.rate.bound() * (p.initial.lipschitz() +
                                                 p.service.density_bound() * (p.q0 + p.lambda * p.horizon + 1.0));
    for (std::size_t i = 0; i + 1 < path.X.size(); ++i) {
      ASSERT_LE(std::abs(path.X[i + 1] - path.X[i]), c * p.dt) << "at step " << i;
    }
  }
}

TEST(StepSizeRule, MatchesConstantList) {
  const auto p = state_dependent_case();
  const double T = p.horizon, ks = 2.0, kl = 1.0;
  const double gs = p.service.density_bound(), gl = p.service.density_lipschitz();
  const double d3 = (0.5 + 0.0 + 1.2 * T) * std::exp(ks * gs * T);
  const double c = (p.initial.lipschitz() + 0.0) * kl + 1.2 * gs * kl * T + d3 * ks * gl * kl * T + gs * (ks + d3 * kl);
  const auto rule = step_size_rule(p);
  EXPECT_NEAR(rule.cutoff_radius, d3, 1e-12 * d3);
  EXPECT_NEAR(rule.contraction_constant, c, 1e-12 * c);
  EXPECT_EQ(rule.window, std::max(std::min(0.5 / c, T / 10), p.dt));
  EXPECT_EQ(step_size_rule(exponential_case(0.5, 5.0)).window, 0.5);  // capped at T / 10
}

TEST(VerifyFixedPoint, DetectsPerturbation) {
  const auto p = exponential_case(0.5, 5.0);
  auto X = solve_X(p).X;
  EXPECT_LE(verify_fixed_point(p, X), 1e-6);
  for (double& x : X) x += 0.1;
  EXPECT_GE(verify_fixed_point(p, X), 1e-2);
}

TEST(ComputeS, Examples) {
  const std::vector<double> X(11, 0.7);
  const auto s1 = compute_S(X, RateFunction(ConstantRate{1.0}), 0.1);
  for (std::size_t i = 0; i < X.size(); ++i) EXPECT_NEAR(s1[i], 0.1 * i, 1e-12);
  const auto s0 = compute_S(X, RateFunction(ConstantRate{0.0}), 0.1);
  EXPECT_TRUE(std::all_of(s0.begin(), s0.end(), [](double s) { return s == 0.0; }));
  // k(x) = x with X = c.
  const auto sx = compute_S(X, RateFunction(CappedLinearRate{0.0, 1.0, 10.0}), 0.1);
  for (std::size_t i = 0; i < X.size(); ++i) EXPECT_NEAR(sx[i], 0.7 * 0.1 * i, 1e-12);
}

TEST(ComputeQB, Examples) {
  const auto low = compute_QB(std::vector<double>(5, 0.5), 2.0, 0.25);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(low.Q[i], 0.0);
    EXPECT_DOUBLE_EQ(low.B[i], 2.0 * 0.25 * i);
  }
  const auto high = compute_QB(std::vector<double>(5, 1.5), 2.0, 0.25);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(high.Q[i], 0.5);
    EXPECT_DOUBLE_EQ(high.B[i], 2.0 * 0.25 * i - 0.5);
  }
  EXPECT_THROW(compute_QB(std::vector<double>{1.0, 2.0}, 0.1, 0.25), NumericError);
}

TEST(FluidSolution, UnderloadedIdentities) {
  const auto p = exponential_case(0.5, 5.0);
  const auto m = p.steps();
  const auto sol = solve(p, levels(5.0, 0.05), every(50, m));
  for (std::size_t i = 0; i <= m; ++i) {
    EXPECT_EQ(sol.Q[i], 0.0);
    EXPECT_NEAR(sol.B[i], 0.5 * sol.t[i], 1e-12);
  }
  double err = 0.0;
  for (std::size_t r = 0; r < sol.tail_rows.size(); ++r) {
    const double X = 0.5 * (1.0 - std::exp(-sol.t[sol.tail_rows[r]]));
    for (std::size_t c = 0; c < sol.x_grid.size(); ++c) {
      err = std::max(err, std::abs(sol.z(r, c) - std::exp(-sol.x_grid[c]) * X));
    }
  }
  EXPECT_LE(err, 5e-4);
}

TEST(FluidSolution, TailIdentitiesOnEveryCase) {
  for (const auto& p : {exponential_case(2.0, 4.0), state_dependent_case(), congested_case()}) {
    const auto m = p.steps();
    const auto sol = solve(p, levels(8.0, 0.1), every(25, m));
    const double slack = 10 * p.dt * p.lambda * p.service.density_bound();
    for (std::size_t i = 0; i <= m; ++i) {
      EXPECT_EQ(sol.Q[i], std::max(sol.X[i] - 1.0, 0.0));
      if (i > 0) EXPECT_GE(sol.B[i] - sol.B[i - 1], -1e-9);
    }
    for (std::size_t r = 0; r < sol.tail_rows.size(); ++r) {
      const std::size_t i = sol.tail_rows[r];
      EXPECT_NEAR(sol.z(r, 0), std::min(sol.X[i], 1.0), slack) << "t=" << sol.t[i];
      EXPECT_LE(sol.z(r, 0), 1.0 + 1e-9);
      for (std::size_t c = 0; c < sol.x_grid.size(); ++c) {
        EXPECT_GE(sol.z(r, c), 0.0);
        if (c > 0) EXPECT_LE(sol.z(r, c), sol.z(r, c - 1) + 1e-12);
      }
    }
  }
}

TEST(FluidTail, InitialRowIsF) {
  const auto p = state_dependent_case();
  const auto sol = solve(p, levels(4.0, 0.25), {0});
  for (std::size_t c = 0; c < sol.x_grid.size(); ++c) EXPECT_EQ(sol.z(0, c), p.initial(sol.x_grid[c]));
  EXPECT_EQ(fluid_tail(p, sol, 0.5, 0), p.initial(0.5));
}

TEST(FluidTail, PointQueryMatchesSurface) {
  const auto p = congested_case();
  const auto sol = solve(p, levels(3.0, 0.5), {0, 1000, 3000});
  for (std::size_t r = 0; r < sol.tail_rows.size(); ++r) {
    for (std::size_t c = 0; c < sol.x_grid.size(); ++c) {
      EXPECT_EQ(fluid_tail(p, sol, sol.x_grid[c], sol.tail_rows[r]), sol.z(r, c));
    }
  }
  EXPECT_EQ(sol.row_of(1000), 1u);
  EXPECT_EQ(sol.row_of(7), FluidSolution::npos);
  EXPECT_THROW(solve(p, levels(1.0, 0.5), {p.steps() + 1}), ConfigError);
}
