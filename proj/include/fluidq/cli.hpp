#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fluidq/scenario.hpp"

namespace fluidq::cli {

enum ExitCode : int { ok = 0, config_error = 2, numeric_failure = 3 };

/// One output file: name relative to the output directory, full text.
struct Artifact {
  std::string name;
  std::string content;
};

struct Overrides {
  std::optional<std::uint64_t> seed;  // base seed
  std::vector<int> n_list;            // empty keeps the scenario's list
};

// Each command builds its artifacts in memory; nothing touches the disk.
std::vector<Artifact> simulate_artifacts(const Scenario& scenario, const Overrides& overrides = {});
std::vector<Artifact> solve_artifacts(const Scenario& scenario);
std::vector<Artifact> compare_artifacts(const Scenario& scenario, const Overrides& overrides = {});
std::vector<Artifact> gc_check_artifacts(const Scenario& scenario, const Overrides& overrides = {});

/// Writes into a staging directory under `out` and moves the files into
/// place only when all of them are written.
void write_artifacts(const std::filesystem::path& out, const std::vector<Artifact>& artifacts);

/// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fluidq::cli
