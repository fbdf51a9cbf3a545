#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fluidq/cli.hpp"

namespace fs = std::filesystem;
using namespace fluidq;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fluidq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string scenario_file(const std::string& name) { return std::string(FLUIDQ_SOURCE_DIR "/scenarios/") + name; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_file(e.path());
  return files;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("fluidq_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    fs::remove_all(dir_);
    ::unsetenv("FLUIDQ_THREADS");
  }
  fs::path sub(const std::string& name) const { return dir_ / name; }
  fs::path write(const std::string& name, const std::string& text) const {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli({"solve", "--scenario", scenario_file("zero.scn"), "--out", sub("a").string(), "--quiet"}).code, 0);
  const auto bad = write("bad.scn", "lambda = -1\nservice = exponential rate=1\nhorizon = 1\n");
  const auto r = run_cli({"solve", "--scenario", bad.string(), "--out", sub("b").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lambda"), std::string::npos);
  EXPECT_EQ(run_cli({"solve", "--scenario", sub("missing.scn").string(), "--out", sub("c").string()}).code, 2);
  const auto det = run_cli({"solve", "--scenario", scenario_file("deterministic_service.scn"), "--out", sub("d").string()});
  EXPECT_EQ(det.code, 2);
  EXPECT_NE(det.err.find("density required"), std::string::npos);
  EXPECT_NE(run_cli({"frobnicate"}).code, 0);
  EXPECT_NE(run_cli({"solve"}).code, 0);
}

TEST_F(CliTest, ArtifactsAreReproducibleAcrossRunsAndThreads) {
  const std::vector<std::string> common = {"--scenario", scenario_file("underloaded_exponential.scn"), "--n", "10,50",
                                           "--quiet"};
  for (const std::string cmd : {"simulate", "solve", "compare"}) {
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* threads : {"1", "1", "3"}) {
      ::setenv("FLUIDQ_THREADS", threads, 1);
      const auto out = sub(cmd + std::to_string(runs.size()));
      auto args = common;
      args.insert(args.begin(), cmd);
      args.push_back("--out");
      args.push_back(out.string());
      ASSERT_EQ(run_cli(args).code, 0) << cmd;
      runs.push_back(read_dir(out));
    }
    EXPECT_FALSE(runs[0].empty());
    EXPECT_EQ(runs[0], runs[1]) << cmd;
    EXPECT_EQ(runs[0], runs[2]) << cmd;
  }
}

TEST_F(CliTest, HeadersCarrySeedAndHash) {
  ASSERT_EQ(run_cli({"simulate", "--scenario", scenario_file("zero.scn"), "--out", sub("o").string(), "--seed", "99",
                     "--n", "10", "--quiet"})
                .code,
            0);
  const auto files = read_dir(sub("o"));
  ASSERT_TRUE(files.count("trajectory_n10_seed99.csv"));
  const auto& text = files.at("trajectory_n10_seed99.csv");
  EXPECT_EQ(text.rfind("# fluidq simulate\n# scenario zero hash ", 0), 0u);
  EXPECT_NE(text.find("# seed 99\n"), std::string::npos);
  EXPECT_NE(text.find("time,X,Q,Z,B,S\n"), std::string::npos);
}

TEST_F(CliTest, ZeroHorizonSimulateWritesEmptyTables) {
  const auto scn = write("h0.scn", "name = h0\nlambda = 1\nservice = exponential rate=1\nhorizon = 0\nn_list = 5\n"
                                   "replications = 1\n");
  ASSERT_EQ(run_cli({"simulate", "--scenario", scn.string(), "--out", sub("o").string(), "--quiet"}).code, 0);
  const auto text = read_file(sub("o") / "trajectory_n5_seed1.csv");
  EXPECT_EQ(text.substr(text.find("time,")), "time,X,Q,Z,B,S\n");
  const auto events = read_file(sub("o") / "events_n5_seed1.csv");
  EXPECT_EQ(events.substr(events.find("time,")), "time,kind,customer\n");
}

TEST_F(CliTest, ZeroArrivalSolveHasZeroPath) {
  ASSERT_EQ(run_cli({"solve", "--scenario", scenario_file("zero.scn"), "--out", sub("o").string(), "--quiet"}).code, 0);
  std::istringstream in(read_file(sub("o") / "fluid_paths.csv"));
  std::string line;
  int rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      EXPECT_EQ(line, "t,X,Q,B,S");
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    EXPECT_EQ(line.substr(c1 + 1, c2 - c1 - 1), "0") << line;
    ++rows;
  }
  EXPECT_EQ(rows, 2001);
}

TEST_F(CliTest, FailedWriteLeavesNothingBehind) {
  const std::vector<cli::Artifact> artifacts = {{"a.csv", "x\n"}, {"missing_dir/b.csv", "y\n"}};
  EXPECT_ANY_THROW(cli::write_artifacts(dir_, artifacts));
  EXPECT_TRUE(fs::is_empty(dir_));
}

TEST_F(CliTest, StdoutSummary) {
  const auto r = run_cli({"compare", "--scenario", scenario_file("zero.scn"), "--out", sub("o").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("wrote 3 file(s)"), std::string::npos);
  EXPECT_TRUE(run_cli({"compare", "--scenario", scenario_file("zero.scn"), "--out", sub("q").string(), "--quiet"})
                  .out.empty());
}

TEST_F(CliTest, CompareMatchesCommittedFixture) {
  for (const std::string name : {"underloaded_exponential", "state_dependent"}) {
    const auto out = sub(name);
    ASSERT_EQ(run_cli({"compare", "--scenario", scenario_file(name + ".scn"), "--out", out.string(), "--quiet"}).code,
              0);
    const fs::path fixture = fs::path(FLUIDQ_SOURCE_DIR) / "tests" / "fixtures" / name;
    for (const char* file : {"convergence.csv", "convergence_summary.csv"}) {
      EXPECT_EQ(read_file(out / file), read_file(fixture / file)) << name << "/" << file;
    }
  }
}

TEST_F(CliTest, GcCheckMatchesCommittedFixture) {
  ASSERT_EQ(run_cli({"gc-check", "--scenario", scenario_file("gc_exponential.scn"), "--out", sub("o").string(),
                     "--quiet"})
                .code,
            0);
  EXPECT_EQ(read_file(sub("o") / "gc_check.csv"),
            read_file(fs::path(FLUIDQ_SOURCE_DIR) / "tests" / "fixtures" / "gc_exponential" / "gc_check.csv"));
}
