#include "fluidq/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <system_error>
#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "fluidq/error.hpp"
#include "fluidq/harness.hpp"

namespace fluidq::cli {

namespace {

namespace fs = std::filesystem;

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string header(std::string_view command, const Scenario& s, std::string_view seed) {
  return fmt::format("# fluidq {}\n# scenario {} hash {}\n# seed {}\n", command, s.name, scenario_hash(s), seed);
}

std::vector<int> servers(const Scenario& s, const Overrides& o) { return o.n_list.empty() ? s.n_list : o.n_list; }

std::vector<std::uint64_t> seeds(const Scenario& s, const Overrides& o) {
  if (!o.seed) return s.seeds();
  Scenario copy = s;
  copy.seed = *o.seed;
  return copy.seeds();
}

std::string seed_list(std::span<const std::uint64_t> seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

std::string measure_rows(const AtomicMeasure& m) {
  std::string out = "location,weight\n";
  for (const Atom& a : m.atoms()) out += fmt::format("{},{}\n", num(a.location), num(a.weight));
  return out;
}

}  // namespace

std::vector<Artifact> simulate_artifacts(const Scenario& scenario, const Overrides& overrides) {
  std::vector<Artifact> out;
  for (int n : servers(scenario, overrides)) {
    for (std::uint64_t seed : seeds(scenario, overrides)) {
      const std::string tag = fmt::format("n{}_seed{}", n, seed);
      const std::string head = header("simulate", scenario, std::to_string(seed)) + fmt::format("# n {}\n", n);
      // A zero horizon has nothing to replay.
      const sim::Trajectory traj =
          scenario.horizon > 0.0 ? harness::simulate(scenario, n, seed) : sim::Trajectory{n, {}, {}, {}, {}};

      std::string paths = head + "time,X,Q,Z,B,S\n";
      for (const auto& p : traj.samples) {
        paths += fmt::format("{},{},{},{},{},{}\n", num(p.time), p.X, p.Q, p.Z, p.B, num(p.S));
      }
      out.push_back({fmt::format("trajectory_{}.csv", tag), std::move(paths)});

      std::string events = head + "time,kind,customer\n";
      for (const auto& e : traj.events) events += fmt::format("{},{},{}\n", num(e.time), sim::to_string(e.kind), e.customer);
      out.push_back({fmt::format("events_{}.csv", tag), std::move(events)});

      for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& snap = traj.snapshots[k];
        out.push_back({fmt::format("snapshot_{}_{}.csv", tag, k),
                       head + fmt::format("# time {}\n", num(snap.time)) + measure_rows(snap.measure)});
      }
    }
  }
  return out;
}

std::vector<Artifact> solve_artifacts(const Scenario& scenario) {
  const fluid::FluidSolution sol = harness::solve_scenario(scenario);
  const auto& d = sol.diagnostics;
  std::string head = header("solve", scenario, "none");
  head += fmt::format("# dt {} steps {} horizon {}\n", num(scenario.dt), scenario.steps(), num(scenario.horizon));
  head += fmt::format("# contraction_constant {} cutoff_radius {} window {} window_steps {} windows {}\n",
                      num(d.rule.contraction_constant), num(d.rule.cutoff_radius), num(d.rule.window),
                      d.window_steps, d.windows);
  std::string iterations;
  for (std::size_t i = 0; i < d.iterations.size(); ++i) iterations += (i ? "," : "") + std::to_string(d.iterations[i]);
  head += fmt::format("# iterations {}\n# residual {}\n", iterations.empty() ? "none" : iterations, num(d.residual));

  std::string paths = head + "t,X,Q,B,S\n";
  for (std::size_t i = 0; i < sol.t.size(); ++i) {
    paths += fmt::format("{},{},{},{},{}\n", num(sol.t[i]), num(sol.X[i]), num(sol.Q[i]), num(sol.B[i]),
                         num(sol.S[i]));
  }
  // Matrix layout: first column t, then one column per level x.
  std::string tail = head + "t";
  for (double x : sol.x_grid) tail += "," + num(x);
  tail += "\n";
  for (std::size_t r = 0; r < sol.tail_rows.size(); ++r) {
    tail += num(sol.t[sol.tail_rows[r]]);
    for (std::size_t c = 0; c < sol.x_grid.size(); ++c) tail += "," + num(sol.z(r, c));
    tail += "\n";
  }
  return {{"fluid_paths.csv", std::move(paths)}, {"fluid_tail.csv", std::move(tail)}};
}

std::vector<Artifact> compare_artifacts(const Scenario& scenario, const Overrides& overrides) {
  const std::vector<int> ns = servers(scenario, overrides);
  const std::vector<std::uint64_t> ss = seeds(scenario, overrides);
  std::optional<fluid::FluidSolution> sol;
  if (scenario.has_fluid_target()) sol = harness::solve_scenario(scenario);
  const harness::ConvergenceReport report =
      harness::convergence_experiment(scenario, sol ? &*sol : nullptr, ns, ss);

  const std::string head = header("compare", scenario, seed_list(ss)) +
                           fmt::format("# simulation_only {}\n# grid_width {}\n", report.simulation_only ? 1 : 0,
                                       num(report.grid_width));
  std::string rows = head + "n,seed,x_gap,q_gap,b_gap,final_x";
  for (double t : report.snapshot_times) rows += fmt::format(",prohorov_t{0},prohorov_bound_t{0}", num(t));
  rows += "\n";
  for (const auto& r : report.rows) {
    rows += fmt::format("{},{},{},{},{},{}", r.n, r.seed, num(r.x_gap), num(r.q_gap), num(r.b_gap), num(r.final_x));
    for (double p : r.prohorov) rows += fmt::format(",{},{}", num(p), num(p + report.grid_width));
    rows += "\n";
  }

  std::string summary = head + "n,mean_x,max_x,mean_q,max_q,mean_b,max_b";
  for (double t : report.snapshot_times) summary += fmt::format(",mean_prohorov_bound_t{0},max_prohorov_bound_t{0}", num(t));
  summary += "\n";
  std::string text = head;
  if (report.simulation_only) text += "no fluid target: the service law has no Lipschitz density\n";
  for (const auto& s : report.summary) {
    summary += fmt::format("{},{},{},{},{},{},{}", s.n, num(s.mean_x), num(s.max_x), num(s.mean_q), num(s.max_q),
                           num(s.mean_b), num(s.max_b));
    for (std::size_t k = 0; k < s.mean_prohorov.size(); ++k) {
      summary += fmt::format(",{},{}", num(s.mean_prohorov[k] + report.grid_width),
                             num(s.max_prohorov[k] + report.grid_width));
    }
    summary += "\n";
    if (report.simulation_only) continue;
    text += fmt::format("n = {:>6}  sup|X^n - X| mean {:.4f} max {:.4f}   sup|Q^n - Q| mean {:.4f}   sup|B^n - B| mean {:.4f}\n",
                        s.n, s.mean_x, s.max_x, s.mean_q, s.mean_b);
    for (std::size_t k = 0; k < s.mean_prohorov.size(); ++k) {
      text += fmt::format("           prohorov at t = {:<6g} mean {:.4f} (+ grid width {:g})\n",
                          report.snapshot_times[k], s.mean_prohorov[k], report.grid_width);
    }
  }
  return {{"convergence.csv", std::move(rows)}, {"convergence_summary.csv", std::move(summary)},
          {"convergence_summary.txt", std::move(text)}};
}

std::vector<Artifact> gc_check_artifacts(const Scenario& scenario, const Overrides& overrides) {
  const std::vector<int> ns = servers(scenario, overrides);
  const std::vector<std::uint64_t> ss = seeds(scenario, overrides);
  const std::vector<double> xs = scenario.x_grid.points();
  std::string rows = header("gc-check", scenario, seed_list(ss)) +
                     fmt::format("# M {} L {}\nn,seed,deviation,m,ell,x,set\n", num(scenario.gc_m), num(scenario.gc_l));
  for (int n : ns) {
    for (std::uint64_t seed : ss) {
      const auto r = harness::glivenko_cantelli_check(scenario.service, n, scenario.gc_m, scenario.gc_l, xs, seed);
      rows += fmt::format("{},{},{},{},{},{},{}\n", n, seed, num(r.deviation), r.m, num(r.ell), num(r.x),
                          r.open ? "open" : "closed");
    }
  }
  return {{"gc_check.csv", std::move(rows)}};
}

void write_artifacts(const fs::path& out, const std::vector<Artifact>& artifacts) {
  fs::create_directories(out);
  const fs::path staging = out / fmt::format(".staging-{}", ::getpid());
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    for (const Artifact& a : artifacts) {
      std::ofstream file(staging / a.name, std::ios::binary);
      file << a.content;
      file.close();
      if (!file) throw std::runtime_error(fmt::format("cannot write {}", (staging / a.name).string()));
    }
    for (const Artifact& a : artifacts) fs::rename(staging / a.name, out / a.name);
  } catch (...) {
    std::error_code ignored;
    for (const Artifact& a : artifacts) {
      if (!fs::exists(staging / a.name, ignored)) fs::remove(out / a.name, ignored);
    }
    fs::remove_all(staging, ignored);
    throw;
  }
  fs::remove_all(staging);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GI/G/n queues with state-dependent service rates: simulation and fluid model"};
  app.require_subcommand(1);
  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::vector<int> n_list;
  bool quiet = false;

  std::vector<std::pair<std::string, CLI::App*>> commands;
  for (const char* name : {"simulate", "solve", "compare", "gc-check"}) {
    static const std::map<std::string, std::string> help = {
        {"simulate", "run the n-server simulator for every (n, seed)"},
        {"solve", "solve the fluid model"},
        {"compare", "convergence report: scaled simulations against the fluid solution"},
        {"gc-check", "empirical Glivenko-Cantelli deviation of the service law"},
    };
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--scenario", scenario_path, "scenario file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "base seed override");
    sub->add_option("--n", n_list, "server counts override")->delimiter(',');
    sub->add_flag("--quiet", quiet, "no summary on stdout");
    commands.emplace_back(name, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::config_error;
  }

  try {
    if (const char* env = std::getenv("FLUIDQ_THREADS"); env != nullptr && *env != '\0') {
      char* end = nullptr;
      const long threads = std::strtol(env, &end, 10);
      if (*end != '\0' || threads < 1) throw ConfigError(fmt::format("FLUIDQ_THREADS must be a positive integer, got '{}'", env));
      omp_set_num_threads(static_cast<int>(threads));
    }
    for (int n : n_list) {
      if (n < 1) throw ConfigError("--n entries must be positive");
    }
    const Scenario scenario = load_scenario(scenario_path);
    const Overrides overrides{seed, n_list};

    std::vector<Artifact> artifacts;
    std::string command;
    for (const auto& [name, sub] : commands) {
      if (sub->parsed()) command = name;
    }
    if (command == "simulate") {
      artifacts = simulate_artifacts(scenario, overrides);
    } else if (command == "solve") {
      artifacts = solve_artifacts(scenario);
    } else if (command == "compare") {
      artifacts = compare_artifacts(scenario, overrides);
    } else {
      artifacts = gc_check_artifacts(scenario, overrides);
    }
    write_artifacts(out_dir, artifacts);
    if (!quiet) {
      for (const Artifact& a : artifacts) {
        if (a.name == "convergence_summary.txt") out << a.content;
      }
      out << fmt::format("{}: wrote {} file(s) to {}\n", command, artifacts.size(), out_dir);
    }
    return ExitCode::ok;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return ExitCode::config_error;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return ExitCode::numeric_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fluidq::cli
