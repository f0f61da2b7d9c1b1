#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "eon/ilp.hpp"
#include "eon/scenario.hpp"
#include "support/fixtures.hpp"

using namespace eon;
using namespace eon::scenario;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

/// Runs eonsim with `args` (shell syntax), capturing stdout and stderr.
CliResult eonsim(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + EONSIM_BINARY + std::string(" ") + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

class ScratchDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("eonsim_test_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

const std::string kUs = eon::testing::data_path("us_backbone.txt");
const std::string kAbilene = eon::testing::data_path("abilene.txt");

}  // namespace

TEST(ScenarioValues, Durations) {
  EXPECT_EQ(parse_duration("250us"), 250'000'000);
  EXPECT_EQ(parse_duration("250\xC2\xB5s"), 250'000'000);
  EXPECT_EQ(parse_duration("128ms"), 128'000'000'000);
  EXPECT_EQ(parse_duration("1.5ms"), 1'500'000'000);
  EXPECT_EQ(parse_duration("40ps"), 40);
  EXPECT_EQ(parse_duration("2s"), 2'000'000'000'000);
  EXPECT_EQ(parse_duration("0"), 0);
  EXPECT_THROW(parse_duration("250"), ScenarioError);
  EXPECT_THROW(parse_duration("-1ms"), ScenarioError);
  EXPECT_THROW(parse_duration("fast"), ScenarioError);
  for (Picoseconds ps : {Picoseconds{0}, Picoseconds{7}, Picoseconds{250'000'000}, Picoseconds{1'500'000'000},
                         Picoseconds{128'000'000'000}, Picoseconds{3'000'000'000'000}}) {
    EXPECT_EQ(parse_duration(format_duration(ps)), ps);
  }
  EXPECT_EQ(format_duration(250'000'000), "250us");
  EXPECT_EQ(format_duration(1'500'000'000), "1500us");
}

TEST(ScenarioValues, PoliciesAndDemands) {
  EXPECT_EQ(parse_policy("st").mode, Mode::single_path);
  EXPECT_EQ(parse_policy("pt-1").max_differential_delay, milliseconds_to_ps(128));
  EXPECT_EQ(parse_policy("pt-2").max_differential_delay, microseconds_to_ps(250));
  const auto custom = parse_policy("pt@0.3ms");
  EXPECT_EQ(custom.label, "pt@300us");
  EXPECT_EQ(custom.max_differential_delay, microseconds_to_ps(300));
  EXPECT_THROW(parse_policy("pt-3"), ScenarioError);

  EXPECT_EQ(parse_demand("10").lo, 10);
  EXPECT_TRUE(parse_demand("10").deterministic());
  const auto u = parse_demand("1-4");
  EXPECT_EQ(u.lo, 1);
  EXPECT_EQ(u.hi, 4);
  EXPECT_EQ(format_demand(u), "1-4");
  EXPECT_THROW(parse_demand("4-1"), ScenarioError);
  EXPECT_THROW(parse_demand("0"), ScenarioError);
}

TEST(ScenarioFile, ParsesGridKeys) {
  const auto sc = parse_scenario(R"(
# comment
topology = nets/us.txt
slots = 64
policies = [st, "pt-1", pt@1ms]   # trailing comment
k = [10, 40]
gb = 3
load = [30, 45.5]
tr = [5, 1-4]
seeds = 3
seed = 9
requests = 1000
warmup = 0
)",
                                 "/base/dir");
  EXPECT_EQ(sc.topology, "/base/dir/nets/us.txt");
  EXPECT_EQ(sc.topo.slots_per_link, 64);
  ASSERT_EQ(sc.policies.size(), 3u);
  EXPECT_EQ(sc.policies[2].label, "pt@1ms");
  EXPECT_EQ(sc.ks, (std::vector<int>{10, 40}));
  EXPECT_EQ(sc.gbs, (std::vector<int>{3}));
  EXPECT_EQ(sc.loads, (std::vector<double>{30, 45.5}));
  EXPECT_EQ(sc.seed_list(), (std::vector<std::uint64_t>{9, 10, 11}));
  EXPECT_EQ(sc.max_demand(), 5);
  EXPECT_EQ(sc.warmup, 0.0);
  EXPECT_NO_THROW(sc.validate());
  EXPECT_EQ(simulate_cells(sc).size(), 2u * 3u * 2u * 1u * 2u * 3u);
}

TEST(ScenarioFile, CellOrder) {
  auto sc = parse_scenario("topology = x\nload = [1, 2]\npolicies = [st, pt-1]\nseeds = 2\n");
  const auto cells = simulate_cells(sc);
  ASSERT_EQ(cells.size(), 8u);
  EXPECT_EQ(cells[0].load, 1);
  EXPECT_EQ(cells[0].policy.label, "st");
  EXPECT_EQ(cells[0].seed, 1u);
  EXPECT_EQ(cells[1].seed, 2u);
  EXPECT_EQ(cells[2].policy.label, "pt-1");
  EXPECT_EQ(cells[4].load, 2);
}

TEST(ScenarioFile, ErrorsNameTheLine) {
  try {
    parse_scenario("topology = x\n\nbogus = 3\n");
    FAIL() << "unknown key accepted";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_scenario("k = [1, 2\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("slots 16\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("seeds = [1, 2]\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("slots = lots\n"), ScenarioError);
}

TEST(ScenarioFile, ValidationRejectsInconsistentGrids) {
  auto sc = parse_scenario("topology = x\nslots = 8\nload = 10\ntr = 9\n");
  EXPECT_THROW(sc.validate(), ScenarioError);
  sc = parse_scenario("topology = x\nload = 10\nk = 0\n");
  EXPECT_THROW(sc.validate(), ScenarioError);
  sc = parse_scenario("topology = x\nload = 0\n");
  EXPECT_THROW(sc.validate(), ScenarioError);
  sc = parse_scenario("load = 10\n");
  EXPECT_THROW(sc.validate(), ScenarioError);
  sc = parse_scenario("topology = x\nload = 10\ngb = -1\n");
  EXPECT_THROW(sc.validate(), ScenarioError);
}

TEST(ScenarioFile, ShippedScenariosAreValid) {
  const fs::path dir = fs::path(EON_DATA_DIR) / "scenarios";
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto sc = load_scenario_file(entry.path());
    EXPECT_NO_THROW(sc.validate()) << entry.path();
    EXPECT_TRUE(fs::exists(sc.topology)) << sc.topology;
    EXPECT_NO_THROW(load_topology_file(sc.topology, sc.topo));
    ++n;
  }
  EXPECT_GE(n, 3u);
}

TEST_F(ScratchDir, SimulateWritesContractedCsv) {
  const auto r = eonsim("simulate --topology " + kUs + " --mode pt --k 30 --gb 0 --tr 10 --load 75 --seeds 5 --requests 2000 --out " +
                        dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = read_csv(dir_ / "metrics.csv");
  ASSERT_EQ(rows.size(), 6u);
  const std::vector<std::string> head{"load", "policy", "mode", "k", "gb", "m_ps", "tr", "seed", "offered", "blocked",
                                      "served", "blocking_prob", "agg_ratio"};
  ASSERT_EQ(rows[0].size(), head.size() + 10);
  for (std::size_t i = 0; i < head.size(); ++i) EXPECT_EQ(rows[0][i], head[i]);
  EXPECT_EQ(rows[0].back(), "hist_10");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), rows[0].size());
    const double b = std::stod(rows[i][11]);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
    EXPECT_EQ(rows[i][5], "128000000000");
    EXPECT_EQ(std::stoull(rows[i][8]), std::stoull(rows[i][9]) + std::stoull(rows[i][10]));
    EXPECT_EQ(rows[i][7], std::to_string(i));
  }
  EXPECT_TRUE(fs::exists(dir_ / "path_dist.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "cells" / "cell_4.csv"));
  EXPECT_NE(r.out.find("blocking"), std::string::npos);
}

TEST_F(ScratchDir, SameSeedSameBytesAcrossJobCounts) {
  const auto args = "simulate --topology " + kAbilene + " --slots 32 --policy st,pt-1,pt-2 --k 5 --gb 0,2 --tr 1-6 --load 20,40 " +
                    "--seeds 2 --requests 1500 ";
  ASSERT_EQ(eonsim(args + "--out " + (dir_ / "a").string()).code, 0);
  ASSERT_EQ(eonsim(args + "--jobs 3 --out " + (dir_ / "b").string()).code, 0);
  for (const char* f : {"metrics.csv", "path_dist.csv"}) {
    const auto a = slurp(dir_ / "a" / f);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "b" / f)) << f;
  }
  ASSERT_EQ(eonsim(args + "--seed 5 --out " + (dir_ / "c").string()).code, 0);
  EXPECT_NE(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "c" / "metrics.csv"));
}

TEST_F(ScratchDir, ScenarioFileWithOverrides) {
  const auto file = dir_ / "s.toml";
  std::ofstream(file) << "topology = " << kAbilene << "\nslots = 16\npolicies = [st, pt-1]\nload = [5, 50]\ntr = 1-4\n"
                      << "requests = 800\nk = 4\n";
  EXPECT_NE(eonsim(file.string()).code, 0);  // a subcommand is required
  const auto r = eonsim("simulate " + file.string() + " --load 30 --out " + (dir_ / "o").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = read_csv(dir_ / "o" / "metrics.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "30");
  EXPECT_EQ(rows[1][1], "st");
  EXPECT_EQ(rows[2][1], "pt-1");
  EXPECT_EQ(rows[0].back(), "hist_4");
}

TEST_F(ScratchDir, MaxDelayFlagsRelabelParallelPolicies) {
  const auto r = eonsim("simulate --topology " + kAbilene + " --mode pt --max-dd-us 250,1000 --load 5 --tr 2 --requests 300 --out " +
                        dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = read_csv(dir_ / "metrics.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][1], "pt@250us");
  EXPECT_EQ(rows[1][5], "250000000");
  EXPECT_EQ(rows[2][1], "pt@1ms");
}

TEST_F(ScratchDir, OutputDirFromEnvironment) {
  const auto r = eonsim("simulate --topology " + kAbilene + " --load 5 --tr 2 --requests 200",
                        "EONSIM_OUT=" + (dir_ / "env").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "env" / "metrics.csv"));
}

TEST_F(ScratchDir, ProbeWritesCsv) {
  const auto r = eonsim("probe --topology " + kUs + " --slots 16 --tr 1-4 --policy pt-1 --k 10,40 --load 40 --seeds 2 " +
                        "--probes 20 --interval 5 --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = read_csv(dir_ / "probe.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "load");
  EXPECT_EQ(rows[0][3], "policy");
  EXPECT_EQ(rows[1][4], "10");
  EXPECT_EQ(rows[2][4], "40");
  EXPECT_EQ(rows[1][8], "20");
  EXPECT_LE(std::stoi(rows[2][9]), std::stoi(rows[1][9]));
}

TEST(Cli, RejectsBadInput) {
  EXPECT_NE(eonsim("simulate --no-such-flag").code, 0);
  EXPECT_NE(eonsim("").code, 0);
  const auto tr = eonsim("simulate --topology " + kUs + " --tr 200 --load 5");
  EXPECT_NE(tr.code, 0);
  EXPECT_NE(tr.out.find("exceeds"), std::string::npos) << tr.out;
  EXPECT_NE(eonsim("simulate --topology /nonexistent.txt --load 5").code, 0);
  EXPECT_NE(eonsim("simulate --topology " + kUs).code, 0);  // no load
  EXPECT_NE(eonsim("simulate --topology " + kUs + " --load 5 --policy pt-9").code, 0);
}

TEST(Cli, ExportIlpReportsMeshAccounting) {
  const auto r = eonsim("export-ilp --topology " + eon::testing::data_path("mesh15.txt") + " --paths 4 --slots 16");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("y variables per request: 64\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("node pairs: 210\n"), std::string::npos);
  EXPECT_NE(r.out.find("y variables over all pairs: 13440\n"), std::string::npos);
}

TEST_F(ScratchDir, ExportIlpWritesParsableLp) {
  const auto lp = dir_ / "req.lp";
  const auto r = eonsim("export-ilp --topology " + kAbilene + " --paths 3 --slots 8 --tr 3 --gb 1 --gvd --source " +
                        "ATLAng --dest NYCMng --out " + lp.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto model = ilp::parse_lp(slurp(lp));
  EXPECT_EQ(model.count(ilp::VarKind::path_slot), 24u);
  EXPECT_EQ(ilp::export_lp(model), slurp(lp));
}

TEST(Cli, OracleCheckPasses) {
  const auto r = eonsim("oracle-check --seed 7 --instances 20");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("all cross-checks passed"), std::string::npos);
}

TEST(Cli, TopoInfo) {
  const auto r = eonsim("topo-info " + kUs);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("nodes: 24\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("links: 42\n"), std::string::npos);
  EXPECT_NE(r.out.find("arcs: 84\n"), std::string::npos);
}
