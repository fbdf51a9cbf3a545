#include "fluidq/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "fluidq/error.hpp"

namespace fluidq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double standard_normal(Rng& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double lognormal_density(const Lognormal& p, double x) {
  if (x <= 0.0) return 0.0;
  const double z = (std::log(x) - p.mu) / p.sigma;
  return std::exp(-0.5 * z * z) / (x * p.sigma * std::sqrt(2.0 * std::numbers::pi));
}

// sup |g'| in closed form. With y = 1 + (ln x - mu)/sigma^2 the derivative
// magnitude is |y| e^{-2 mu - 2w - w^2/(2 sigma^2)} / (sigma sqrt(2 pi)),
// w = sigma^2 (y - 1), maximised at the roots of sigma^2 y^2 + sigma^2 y - 1.
double lognormal_density_lipschitz(const Lognormal& p) {
  const double s2 = p.sigma * p.sigma;
  const double disc = std::sqrt(s2 * s2 + 4.0 * s2);
  double best = 0.0;
  for (double y : {(-s2 + disc) / (2.0 * s2), (-s2 - disc) / (2.0 * s2)}) {
    const double w = s2 * (y - 1.0);
    const double v = std::abs(y) * std::exp(-2.0 * p.mu - 2.0 * w - w * w / (2.0 * s2)) /
                     (p.sigma * std::sqrt(2.0 * std::numbers::pi));
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

ServiceLaw::ServiceLaw(Params params) : params_(std::move(params)) {
  std::visit(Overloaded{
                 [](const Exponential& p) {
                   if (!(p.rate > 0.0) || !std::isfinite(p.rate)) {
                     throw ConfigError("exponential rate must be positive");
                   }
                 },
                 [](const Lognormal& p) {
                   if (!std::isfinite(p.mu)) throw ConfigError("lognormal mu must be finite");
                   if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
                     throw ConfigError("lognormal sigma must be positive");
                   }
                 },
                 [](const Uniform& p) {
                   if (!(p.a >= 0.0) || !(p.b > p.a) || !std::isfinite(p.b)) {
                     throw ConfigError("uniform law needs 0 <= a < b");
                   }
                 },
                 [](const Deterministic& p) {
                   if (!(p.value > 0.0) || !std::isfinite(p.value)) {
                     throw ConfigError("deterministic value must be positive");
                   }
                 },
             },
             params_);
}

std::string ServiceLaw::kind() const {
  return std::visit(Overloaded{
                        [](const Exponential&) { return std::string("exponential"); },
                        [](const Lognormal&) { return std::string("lognormal"); },
                        [](const Uniform&) { return std::string("uniform"); },
                        [](const Deterministic&) { return std::string("deterministic"); },
                    },
                    params_);
}

double ServiceLaw::cdf(double x) const {
  if (x < 0.0) return 0.0;
  return std::visit(Overloaded{
                        [x](const Exponential& p) { return -std::expm1(-p.rate * x); },
                        [x](const Lognormal& p) {
                          if (x == 0.0) return 0.0;
                          return 0.5 * std::erfc(-(std::log(x) - p.mu) / (p.sigma * std::numbers::sqrt2));
                        },
                        [x](const Uniform& p) { return std::clamp((x - p.a) / (p.b - p.a), 0.0, 1.0); },
                        [x](const Deterministic& p) { return x >= p.value ? 1.0 : 0.0; },
                    },
                    params_);
}

double ServiceLaw::tail(double x) const { return 1.0 - cdf(x); }

double ServiceLaw::tail_closed(double x) const {
  if (const auto* d = std::get_if<Deterministic>(&params_)) return x <= d->value ? 1.0 : 0.0;
  return tail(x);
}

double ServiceLaw::mean() const {
  return std::visit(Overloaded{
                        [](const Exponential& p) { return 1.0 / p.rate; },
                        [](const Lognormal& p) { return std::exp(p.mu + 0.5 * p.sigma * p.sigma); },
                        [](const Uniform& p) { return 0.5 * (p.a + p.b); },
                        [](const Deterministic& p) { return p.value; },
                    },
                    params_);
}

bool ServiceLaw::has_lipschitz_density() const {
  return std::holds_alternative<Exponential>(params_) || std::holds_alternative<Lognormal>(params_);
}

double ServiceLaw::density(double x) const {
  return std::visit(Overloaded{
                        [x](const Exponential& p) { return x < 0.0 ? 0.0 : p.rate * std::exp(-p.rate * x); },
                        [x](const Lognormal& p) { return lognormal_density(p, x); },
                        [x](const Uniform& p) { return (x >= p.a && x <= p.b) ? 1.0 / (p.b - p.a) : 0.0; },
                        [](const Deterministic&) -> double { throw ConfigError("density required"); },
                    },
                    params_);
}

std::pair<double, double> ServiceLaw::tail_and_density(double x) const {
  if (const auto* e = std::get_if<Exponential>(&params_)) {
    if (x < 0.0) return {1.0, 0.0};
    const double survival = std::exp(-e->rate * x);
    return {survival, e->rate * survival};
  }
  return {tail(x), density(x)};
}

double ServiceLaw::density_bound() const {
  return std::visit(Overloaded{
                        [](const Exponential& p) { return p.rate; },
                        [](const Lognormal& p) {
                          return std::exp(-p.mu + 0.5 * p.sigma * p.sigma) /
                                 (p.sigma * std::sqrt(2.0 * std::numbers::pi));
                        },
                        [](const Uniform& p) { return 1.0 / (p.b - p.a); },
                        [](const Deterministic&) { return kInf; },
                    },
                    params_);
}

double ServiceLaw::density_lipschitz() const {
  return std::visit(Overloaded{
                        [](const Exponential& p) { return p.rate * p.rate; },
                        [](const Lognormal& p) { return lognormal_density_lipschitz(p); },
                        [](const Uniform&) { return kInf; },
                        [](const Deterministic&) { return kInf; },
                    },
                    params_);
}

double ServiceLaw::sample(Rng& rng) const {
  return std::visit(Overloaded{
                        [&rng](const Exponential& p) { return -std::log(uniform_open(rng)) / p.rate; },
                        [&rng](const Lognormal& p) { return std::exp(p.mu + p.sigma * standard_normal(rng)); },
                        [&rng](const Uniform& p) { return p.a + (p.b - p.a) * uniform_open(rng); },
                        [](const Deterministic& p) { return p.value; },
                    },
                    params_);
}

ServiceLaw make_exponential(double rate) { return ServiceLaw(Exponential{rate}); }
ServiceLaw make_lognormal(double mu, double sigma) { return ServiceLaw(Lognormal{mu, sigma}); }
ServiceLaw make_uniform(double a, double b) { return ServiceLaw(Uniform{a, b}); }
ServiceLaw make_deterministic(double value) { return ServiceLaw(Deterministic{value}); }

ArrivalLaw::ArrivalLaw(ServiceLaw shape, double mean) : shape_(std::move(shape)), mean_(mean) {
  if (!(mean > 0.0)) throw ConfigError("mean inter-arrival time must be positive");
}

double ArrivalLaw::sample(Rng& rng) const {
  if (std::holds_alternative<Deterministic>(shape_.params())) return mean_;
  return mean_ * (shape_.sample(rng) / shape_.mean());
}

RateFunction::RateFunction(Params params) : params_(std::move(params)) {
  std::visit(Overloaded{
                 [this](const ConstantRate& p) {
                   if (!(p.value >= 0.0) || !std::isfinite(p.value)) {
                     throw ConfigError("constant rate must be finite and nonnegative");
                   }
                   bound_ = p.value;
                   lipschitz_ = 0.0;
                 },
                 [this](const CappedLinearRate& p) {
                   if (!(p.cap >= 0.0) || !std::isfinite(p.cap) || !std::isfinite(p.intercept) ||
                       !std::isfinite(p.slope)) {
                     throw ConfigError("capped-linear rate needs finite parameters and cap >= 0");
                   }
                   bound_ = p.cap;
                   lipschitz_ = std::abs(p.slope);
                 },
                 [this](const TableRate& p) {
                   if (p.x.empty() || p.x.size() != p.k.size()) {
                     throw ConfigError("rate table needs matching, nonempty x and k columns");
                   }
                   double slope = 0.0;
                   for (std::size_t i = 0; i < p.x.size(); ++i) {
                     if (!(p.k[i] >= 0.0) || !std::isfinite(p.k[i])) {
                       throw ConfigError("rate table values must be finite and nonnegative");
                     }
                     if (i > 0) {
                       if (!(p.x[i] > p.x[i - 1])) throw ConfigError("rate table x must be strictly increasing");
                       slope = std::max(slope, std::abs(p.k[i] - p.k[i - 1]) / (p.x[i] - p.x[i - 1]));
                     }
                   }
                   if (slope > p.lipschitz * (1.0 + 1e-12)) {
                     throw ConfigError(fmt::format("rate table declares Lipschitz constant {} but has slope {}",
                                                   p.lipschitz, slope));
                   }
                   bound_ = *std::max_element(p.k.begin(), p.k.end());
                   lipschitz_ = p.lipschitz;
                 },
             },
             params_);
}

std::string RateFunction::kind() const {
  return std::visit(Overloaded{
                        [](const ConstantRate&) { return std::string("constant"); },
                        [](const CappedLinearRate&) { return std::string("capped_linear"); },
                        [](const TableRate&) { return std::string("table"); },
                    },
                    params_);
}

double RateFunction::operator()(double x) const {
  return std::visit(Overloaded{
                        [](const ConstantRate& p) { return p.value; },
                        [x](const CappedLinearRate& p) { return std::clamp(p.intercept + p.slope * x, 0.0, p.cap); },
                        [x](const TableRate& p) {
                          if (x <= p.x.front()) return p.k.front();
                          if (x >= p.x.back()) return p.k.back();
                          auto hi = static_cast<std::size_t>(std::upper_bound(p.x.begin(), p.x.end(), x) -
                                                             p.x.begin());
                          const std::size_t lo = hi - 1;
                          const double w = (x - p.x[lo]) / (p.x[hi] - p.x[lo]);
                          return p.k[lo] + w * (p.k[hi] - p.k[lo]);
                        },
                    },
                    params_);
}

InitialTail InitialTail::from_law(double scale, ServiceLaw law) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("initial tail scale must be nonnegative");
  InitialTail out;
  if (scale > 0.0) out.source_ = FromLaw{scale, std::move(law)};
  return out;
}

InitialTail InitialTail::from_grid(TailFunction tail) {
  InitialTail out;
  if (tail.values().front() > 0.0) out.source_ = std::move(tail);
  return out;
}

double InitialTail::operator()(double x) const {
  return std::visit(Overloaded{
                        [](const std::monostate&) { return 0.0; },
                        [x](const FromLaw& f) { return f.scale * f.law.tail(x); },
                        [x](const TailFunction& f) { return f(x); },
                    },
                    source_);
}

double InitialTail::mass() const { return (*this)(0.0); }

double InitialTail::lipschitz() const {
  return std::visit(Overloaded{
                        [](const std::monostate&) { return 0.0; },
                        [](const FromLaw& f) { return f.scale * f.law.density_bound(); },
                        [](const TailFunction& f) { return f.lipschitz(); },
                    },
                    source_);
}

double InitialTail::sample(Rng& rng) const {
  return std::visit(Overloaded{
                        [](const std::monostate&) -> double { throw ConfigError("empty initial tail has no law"); },
                        [&rng](const FromLaw& f) { return f.law.sample(rng); },
                        [&rng](const TailFunction& f) -> double {
                          auto x = f.grid();
                          auto z = f.values();
                          if (z.back() > 0.0) throw ConfigError("initial grid tail must reach 0 to be sampled");
                          const double target = uniform_open(rng) * z.front();
                          // first grid point whose value drops to or below target
                          std::size_t hi = 1;
                          while (z[hi] > target) ++hi;
                          const std::size_t lo = hi - 1;
                          const double w = (z[lo] - target) / (z[lo] - z[hi]);
                          return x[lo] + w * (x[hi] - x[lo]);
                        },
                    },
                    source_);
}

}  // namespace fluidq
