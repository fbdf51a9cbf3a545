#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fluidq/distributions.hpp"
#include "fluidq/fluid.hpp"

namespace fluidq {

/// Evenly spaced levels start, start + step, ..., up to stop.
struct LevelGrid {
  double start = 0.0;
  double stop = 10.0;
  double step = 0.05;

  std::vector<double> points() const;
  friend bool operator==(const LevelGrid&, const LevelGrid&) = default;
};

/// Everything one experiment needs: the model, the discretisation and the
/// Monte Carlo design.
///
/// Text form is one `key = value` per line, `#` starts a comment. Laws and
/// rate functions are written as a kind followed by `name=value` parameters:
///
///   name         = underloaded
///   lambda       = 0.5                        # per-server arrival rate
///   arrival      = exponential rate=1         # inter-arrival shape, rescaled to mean 1/(n lambda)
///   service      = exponential rate=1         # | lognormal mu= sigma= | uniform a= b= | deterministic value=
///   rate         = constant value=1           # | capped_linear intercept= slope= cap= | table x=.. k=.. lipschitz=
///   initial      = empty                      # | scaled_law scale= | grid x=.. values=..
///   initial_law  = exponential rate=1         # required by initial = scaled_law
///   q0           = 0
///   horizon      = 5
///   dt           = 0.001
///   report_step  = 0.05
///   x_grid       = 0:10:0.05
///   snapshots    = 1,2.5,5
///   n_list       = 10,100,1000
///   replications = 3
///   seed         = 1
///   gc_m         = 2
///   gc_l         = 2
///
/// `lambda`, `service` and `horizon` are required; the rest default to the
/// values shown except `snapshots` (none) and `initial_law` (unset).
struct Scenario {
  std::string name = "scenario";
  double lambda = 0.0;
  ServiceLaw arrival = make_exponential(1.0);
  ServiceLaw service = make_exponential(1.0);
  RateFunction rate = RateFunction(ConstantRate{1.0});
  InitialTail initial;
  double q0 = 0.0;
  double horizon = 1.0;
  double dt = 1e-3;
  double report_step = 0.05;
  LevelGrid x_grid;
  std::vector<double> snapshots;
  std::vector<int> n_list = {10, 100, 1000};
  int replications = 3;
  std::uint64_t seed = 1;
  double gc_m = 2.0;
  double gc_l = 2.0;

  friend bool operator==(const Scenario&, const Scenario&) = default;

  /// Throws ConfigError on any inconsistency.
  void validate() const;

  fluid::FluidParams fluid_params() const;
  bool has_fluid_target() const { return service.has_lipschitz_density(); }
  /// Inter-arrival law of the n-server system (mean 1 / (n lambda)).
  ArrivalLaw arrival_law(int n) const;

  std::size_t steps() const;
  std::size_t report_stride() const;
  /// Grid indices of the report times 0, report_step, ... <= horizon.
  std::vector<std::size_t> report_indices() const;
  std::vector<double> report_times() const;
  std::vector<std::size_t> snapshot_indices() const;
  /// Replication seeds: seed, seed + 1, ...
  std::vector<std::uint64_t> seeds() const;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
/// Canonical text form; parse_scenario(serialize(s)) == s.
std::string serialize(const Scenario& s);
/// FNV-1a of the canonical text, as 16 hex digits.
std::string scenario_hash(const Scenario& s);

}  // namespace fluidq
