// Runs the command-line tool as a subprocess.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kTool = DREAMHOP_CLI_PATH;

struct Run {
  int status = -1;
  std::string output;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + kTool.string() + "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dreamhop_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  [[nodiscard]] std::string at(const std::string& name) const { return "\"" + (dir_ / name).string() + "\""; }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpListsSubcommands) {
  const auto r = run("--help");
  EXPECT_EQ(r.status, 0);
  for (const char* sub : {"coupling", "theory", "retrieval", "simulate", "reproduce", "verify"}) {
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
  }
}

TEST_F(Cli, CouplingBuildWritesDumpAndSidecar) {
  const auto r = run("coupling build --N 40 --alpha 0.25 --t inf --out " + at("j.bin") + " --dataset-out " +
                     at("d.bin"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(fs::file_size(dir_ / "j.bin"), 40U * 40U * 8U);
  std::ifstream side(dir_ / "j.bin.json");
  const auto meta = nlohmann::json::parse(side);
  EXPECT_EQ(meta.at("N"), 40);
  EXPECT_TRUE(fs::exists(dir_ / "d.bin.json"));
}

TEST_F(Cli, TheoryCsvSchemas) {
  ASSERT_EQ(run("theory density --alpha 0.2 --t 1 --grid 20 --out " + at("dens.csv")).status, 0);
  EXPECT_EQ(first_line(dir_ / "dens.csv"), "lambda,density,peak_location,peak_mass");
  ASSERT_EQ(run("retrieval theory --scenario storing --alpha 0.2 --sweep p=0:1:0.25 --out " + at("rt.csv")).status, 0);
  EXPECT_EQ(first_line(dir_ / "rt.csv"), "x,m1_theory,ga_bound");
  EXPECT_TRUE(fs::exists(dir_ / "rt.csv.json"));
}

TEST_F(Cli, SimulateCsvSchemas) {
  ASSERT_EQ(run("simulate retrieval --N 100 --alpha 0.1 --t 0,1 --p 1,0.5 --trials 2 --probes 2 --out " +
                at("ret.csv"))
                .status,
            0);
  EXPECT_EQ(first_line(dir_ / "ret.csv"),
            "t,x,m0_mean,m1_mean,m1_stderr,m1_between_var,m1_within_var,m1_theory,ga_bound");
  ASSERT_EQ(run("simulate se --setting supervised --N 80 --alpha 0.1 --r 0.5 --M 20 --trials 2 --out " +
                at("se.csv"))
                .status,
            0);
  EXPECT_EQ(first_line(dir_ / "se.csv"), "t,se_mean,se_stderr,se_theory");
  ASSERT_EQ(run("simulate spectrum --N 80 --alpha 0.2 --trials 1 --bins 10 --out " + at("sp.csv")).status, 0);
  EXPECT_EQ(first_line(dir_ / "sp.csv"), "t,bin_low,bin_high,density");
  ASSERT_EQ(run("simulate dynamics --N 80 --alpha 0.1 --trials 1 --steps 2 --out " + at("dy.csv")).status, 0);
  EXPECT_EQ(first_line(dir_ / "dy.csv"), "t,trial,step,m");
}

TEST_F(Cli, OutputDirFromEnvironment) {
  const auto r = run("theory density --grid 5 --out env.csv", "DREAMHOP_OUTPUT_DIR=\"" + dir_.string() + "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "env.csv"));
}

TEST_F(Cli, ReproduceRoundTripsThroughMetadata) {
  const auto first = run("reproduce fig3 --panel stability --alpha 0.1,0.2 --t 0 --N 100 --trials 2 --threads 1 "
                         "--out-dir " +
                         at("a"));
  ASSERT_EQ(first.status, 0) << first.output;
  const auto second =
      run("reproduce --from-metadata " + at("a/fig3_stability.json") + " --out-dir " + at("b"));
  ASSERT_EQ(second.status, 0) << second.output;
  const auto csv = "fig3_stability_t0.csv";
  ASSERT_TRUE(fs::exists(dir_ / "a" / csv));
  EXPECT_EQ(slurp(dir_ / "a" / csv), slurp(dir_ / "b" / csv));
}

TEST_F(Cli, ReproduceGuardExitsWithResourceCode) {
  const auto r = run("reproduce fig3 --panel stability --N 400000 --max-runtime 10 --out-dir " + at("x"));
  EXPECT_EQ(r.status, 3) << r.output;
  EXPECT_NE(r.output.find("--N"), std::string::npos);
}

TEST_F(Cli, BadArgumentsExitNonzero) {
  EXPECT_NE(run("theory density --alpha 2 --out " + at("bad.csv")).status, 0);
  EXPECT_NE(run("frobnicate").status, 0);
}

TEST_F(Cli, VerifyFailsWithACoarseQuadrature) {
  const auto r = run("verify fast --quadrature-nodes 4");
  EXPECT_EQ(r.status, 1) << r.output;
  EXPECT_NE(r.output.find("FAIL"), std::string::npos);
}
