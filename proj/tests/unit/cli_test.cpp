#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "dpt/report.hpp"
#include "test_support.hpp"

namespace dpt {
namespace {

using testing::TempDir;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dpt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string last_line(const std::string& text) {
  std::string s = text;
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s.substr(s.rfind('\n') == std::string::npos ? 0 : s.rfind('\n') + 1);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CliFixture : ::testing::Test {
  TempDir dir;
  std::string ds = (dir / "ds").string();
  void SetUp() override {
    ASSERT_EQ(run_cli({"gen", "--out", ds, "--items", "64", "--item-bytes", "256", "--seed", "4"}).code, 0);
  }
  std::string out(const std::string& name) const { return (dir / name).string(); }
};

TEST(CliGen, ResolutionExpandsToRgbBytes) {
  TempDir dir;
  auto r = run_cli({"gen", "--out", (dir / "a").string(), "--resolution", "32", "--items", "3"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("item_bytes=3072"), std::string::npos);
  EXPECT_NE(r.out.find("total_bytes=9216"), std::string::npos);
  r = run_cli({"gen", "--out", (dir / "b").string(), "--resolution", "640", "--items", "1"});
  EXPECT_NE(r.out.find("item_bytes=1228800"), std::string::npos);
}

TEST(CliGen, UsageErrors) {
  TempDir dir;
  EXPECT_EQ(run_cli({"gen", "--items", "3", "--item-bytes", "4"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"gen", "--out", (dir / "x").string(), "--items", "3"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"gen", "--out", (dir / "x").string(), "--items", "3", "--item-bytes", "4",
                     "--resolution", "2"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
}

TEST(CliGen, IoFailureExitsOne) {
  TempDir dir;
  std::ofstream(dir / "file") << "x";
  EXPECT_EQ(run_cli({"gen", "--out", (dir / "file" / "ds").string(), "--items", "1", "--item-bytes", "1"}).code,
            cli::kExitIo);
}

TEST_F(CliFixture, BenchBaselineTwoEpochs) {
  const auto r = run_cli({"bench", "--manifest", ds, "--workers", "6", "--prefetch", "2", "--epochs", "2",
                          "--out", out("bench")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("epoch=0 workers=6 prefetch=2"), std::string::npos);
  EXPECT_NE(r.out.find("epoch=1 workers=6 prefetch=2"), std::string::npos);
  const auto grid = read_grid_csv(dir / "bench" / kGridFileName);
  EXPECT_EQ(grid.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir / "bench" / "config.json"));
}

TEST_F(CliFixture, BenchOverflowExitsThree) {
  auto r = run_cli({"bench", "--manifest", ds, "--batch", "32", "--sink-budget", "1KiB", "--out", out("o1")});
  EXPECT_EQ(r.code, cli::kExitOverflow);
  EXPECT_NE(r.out.find("status=sink_overflow"), std::string::npos);
  r = run_cli({"bench", "--manifest", ds, "--host-budget", "1KiB", "--cache-capacity", "0", "--out", out("o2")});
  EXPECT_EQ(r.code, cli::kExitOverflow);
  EXPECT_NE(r.out.find("status=host_overflow"), std::string::npos);
}

TEST_F(CliFixture, BenchBadInputs) {
  EXPECT_EQ(run_cli({"bench", "--manifest", out("nope")}).code, cli::kExitIo);
  EXPECT_EQ(run_cli({"bench", "--manifest", ds, "--miss-seek", "soon"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"bench", "--manifest", ds, "--mode", "warp"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"bench", "--manifest", ds, "--workers", "0"}).code, cli::kExitUsage);
}

TEST_F(CliFixture, TuneAttemptsFullGridAndPrintsOptimumLast) {
  const auto r = run_cli({"tune", "--manifest", ds, "--cpus", "12", "--gpus", "1", "--max-prefetch", "4",
                          "--batch", "8", "--epochs", "1", "--out", out("t")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("attempted=48"), std::string::npos);
  EXPECT_TRUE(std::regex_match(last_line(r.out), std::regex(R"(nWorker=\d+ nPrefetch=\d+ optimal_time=[0-9.]+s)")))
      << last_line(r.out);
  const auto o = read_outcome_json(dir / "t" / kOutcomeFileName);
  EXPECT_EQ(o.trials.size(), 48u);
  EXPECT_EQ(o.baseline.cell(), kBaselineCell);
  EXPECT_TRUE(std::filesystem::exists(dir / "t" / "config.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "t" / "log.txt"));
}

TEST_F(CliFixture, TuneWorkerValuesAreMultiplesOfGpus) {
  const auto r = run_cli({"tune", "--manifest", ds, "--cpus", "12", "--gpus", "4", "--max-prefetch", "2",
                          "--epochs", "1", "--out", out("g4")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::set<std::size_t> workers;
  for (const auto& g : read_grid_csv(dir / "g4" / kGridFileName)) workers.insert(g.n_worker);
  EXPECT_EQ(workers, (std::set<std::size_t>{4, 8, 12}));
}

TEST_F(CliFixture, TuneIsBitReproducibleInVirtualMode) {
  const std::vector<std::string> flags{"tune", "--manifest", ds, "--cpus", "6", "--gpus", "2", "--max-prefetch", "3",
                                       "--shuffle", "--seed", "9", "--cache-capacity", "8KiB", "--jitter", "50us"};
  auto a = flags;
  a.insert(a.end(), {"--out", out("r1")});
  auto b = flags;
  b.insert(b.end(), {"--out", out("r2")});
  ASSERT_EQ(run_cli(a).code, 0);
  ASSERT_EQ(run_cli(b).code, 0);
  EXPECT_EQ(read_file(dir / "r1" / kOutcomeFileName), read_file(dir / "r2" / kOutcomeFileName));
  EXPECT_EQ(read_file(dir / "r1" / kGridFileName), read_file(dir / "r2" / kGridFileName));
}

TEST_F(CliFixture, TuneInfeasibleExitsFour) {
  const auto r = run_cli({"tune", "--manifest", ds, "--cpus", "4", "--host-budget", "10", "--cache-capacity", "0",
                          "--out", out("inf")});
  EXPECT_EQ(r.code, cli::kExitInfeasible) << r.err;
}

TEST_F(CliFixture, TuneUsesRunDirEnvironment) {
  const std::string root = out("envroot");
  setenv("DPT_RUN_DIR", root.c_str(), 1);
  const auto r = run_cli({"tune", "--manifest", ds, "--cpus", "2", "--max-prefetch", "1", "--epochs", "1"});
  unsetenv("DPT_RUN_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("run_dir=" + root), std::string::npos) << r.out;
}

TEST_F(CliFixture, ReportWritesNormalizedAndSpeedup) {
  ASSERT_EQ(run_cli({"tune", "--manifest", ds, "--cpus", "8", "--gpus", "2", "--max-prefetch", "3", "--out",
                     out("rep")}).code,
            0);
  const auto r = run_cli({"report", "--run", out("rep"), "--variant", "16x16"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("speedup"), std::string::npos);
  EXPECT_NE(r.out.find("x\n"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "rep" / kNormalizedFileName));
  EXPECT_TRUE(std::filesystem::exists(dir / "rep" / kSummaryFileName));
}

TEST_F(CliFixture, ReportSinglePrefetchGroupPeaksAtOne) {
  ASSERT_EQ(run_cli({"tune", "--manifest", ds, "--cpus", "4", "--max-prefetch", "1", "--epochs", "1", "--out",
                     out("one")}).code,
            0);
  ASSERT_EQ(run_cli({"report", "--run", out("one")}).code, 0);
  const std::string text = read_file(dir / "one" / kNormalizedFileName);
  EXPECT_NE(text.find(",1\n"), std::string::npos);
}

TEST_F(CliFixture, ReportWithBaselineRun) {
  ASSERT_EQ(run_cli({"bench", "--manifest", ds, "--workers", "6", "--prefetch", "2", "--out", out("base")}).code, 0);
  ASSERT_EQ(run_cli({"bench", "--manifest", ds, "--workers", "2", "--prefetch", "1", "--out", out("cand")}).code, 0);
  const auto r = run_cli({"report", "--run", out("cand"), "--baseline-run", out("base")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("x\n"), std::string::npos);
}

TEST_F(CliFixture, ReportErrors) {
  EXPECT_EQ(run_cli({"report", "--run", out("missing")}).code, cli::kExitUsage);
  std::filesystem::create_directories(dir / "broken");
  std::ofstream(dir / "broken" / kGridFileName) << "n_worker,n_prefetch,epoch,transfer_time_s,status\n1,1,0,abc,ok\n";
  const auto r = run_cli({"report", "--run", out("broken")});
  EXPECT_EQ(r.code, cli::kExitIo);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

}  // namespace
}  // namespace dpt
