#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fluidq/measures.hpp"

namespace fluidq {

using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0, 1), 53 random bits.
double uniform_open(Rng& rng);

struct Exponential {
  double rate = 1.0;
  friend bool operator==(const Exponential&, const Exponential&) = default;
};
struct Lognormal {
  double mu = 0.0;
  double sigma = 1.0;
  friend bool operator==(const Lognormal&, const Lognormal&) = default;
};
struct Uniform {
  double a = 0.0;
  double b = 1.0;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};
struct Deterministic {
  double value = 1.0;
  friend bool operator==(const Deterministic&, const Deterministic&) = default;
};

/// Law of a positive random variable: cdf, tail, density metadata and an
/// exact sampler. Density bound and Lipschitz constant are analytic.
class ServiceLaw {
 public:
  using Params = std::variant<Exponential, Lognormal, Uniform, Deterministic>;

  explicit ServiceLaw(Params params);

  const Params& params() const { return params_; }
  std::string kind() const;

  double cdf(double x) const;
  /// 1 - G(x), i.e. nu((x, inf)).
  double tail(double x) const;
  /// nu([x, inf)); differs from tail() only at atoms.
  double tail_closed(double x) const;
  double mean() const;

  /// Whether the law has a bounded Lipschitz density (what the fluid model needs).
  bool has_lipschitz_density() const;
  /// Throws ConfigError("density required") when the law has no density.
  double density(double x) const;
  /// {tail(x), density(x)} in one evaluation; the fluid kernels' inner loop.
  std::pair<double, double> tail_and_density(double x) const;
  double density_bound() const;
  double density_lipschitz() const;

  double sample(Rng& rng) const;

  friend bool operator==(const ServiceLaw&, const ServiceLaw&) = default;

 private:
  Params params_;
};

ServiceLaw make_exponential(double rate);
ServiceLaw make_lognormal(double mu, double sigma);
ServiceLaw make_uniform(double a, double b);
/// Point mass; usable by the simulator only.
ServiceLaw make_deterministic(double value);

/// Renewal inter-arrival law: a ServiceLaw shape rescaled to the given mean.
class ArrivalLaw {
 public:
  ArrivalLaw(ServiceLaw shape, double mean);

  const ServiceLaw& shape() const { return shape_; }
  double mean() const { return mean_; }
  ArrivalLaw with_mean(double mean) const { return ArrivalLaw(shape_, mean); }

  double sample(Rng& rng) const;

  friend bool operator==(const ArrivalLaw&, const ArrivalLaw&) = default;

 private:
  ServiceLaw shape_;
  double mean_;
};

struct ConstantRate {
  double value = 1.0;
  friend bool operator==(const ConstantRate&, const ConstantRate&) = default;
};
// clamp(intercept + slope * x, 0, cap)
struct CappedLinearRate {
  double intercept = 0.0;
  double slope = 0.0;
  double cap = 1.0;
  friend bool operator==(const CappedLinearRate&, const CappedLinearRate&) = default;
};
// Linear interpolation, constant outside the table.
struct TableRate {
  std::vector<double> x;
  std::vector<double> k;
  double lipschitz = 0.0;
  friend bool operator==(const TableRate&, const TableRate&) = default;
};

/// Bounded Lipschitz service-rate map k, evaluated at the scaled head count.
class RateFunction {
 public:
  using Params = std::variant<ConstantRate, CappedLinearRate, TableRate>;

  explicit RateFunction(Params params);

  const Params& params() const { return params_; }
  std::string kind() const;

  double operator()(double x) const;
  double bound() const { return bound_; }
  double lipschitz() const { return lipschitz_; }
  bool is_constant() const { return lipschitz_ == 0.0; }

  friend bool operator==(const RateFunction& a, const RateFunction& b) { return a.params_ == b.params_; }

 private:
  Params params_;
  double bound_ = 0.0;
  double lipschitz_ = 0.0;
};

/// Initial profile F(x) = Z_0([x, inf)): either empty, a scaled tail of a
/// ServiceLaw, or an explicit grid.
class InitialTail {
 public:
  InitialTail() = default;
  static InitialTail from_law(double scale, ServiceLaw law);
  static InitialTail from_grid(TailFunction tail);

  double operator()(double x) const;
  double mass() const;
  double lipschitz() const;
  bool is_empty() const { return mass() == 0.0; }

  /// Draw from F / F(0). Grid tails must reach 0 at their last point.
  double sample(Rng& rng) const;

  struct FromLaw {
    double scale;
    ServiceLaw law;
    friend bool operator==(const FromLaw&, const FromLaw&) = default;
  };
  using Source = std::variant<std::monostate, FromLaw, TailFunction>;
  const Source& source() const { return source_; }

  friend bool operator==(const InitialTail&, const InitialTail&) = default;

 private:
  Source source_;
};

}  // namespace fluidq
