#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "occlab/cli.hpp"

namespace oc = occlab::cli;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(OCCLAB_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("occlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, ParsesKeyValueLines) {
  auto kv = oc::parse_config_text("# comment\nkind = dk\n  n=1e6   # trailing\n\nseed = 7\n");
  EXPECT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv.at("n"), "1e6");
  EXPECT_THROW(oc::parse_config_text("kind dk\n"), occlab::ValidationError);
  EXPECT_THROW(oc::parse_config_text("n = 1\nn = 2\n"), occlab::ValidationError);
  EXPECT_THROW(oc::parse_config_text("= 2\n"), occlab::ValidationError);
}

TEST(Config, ListsEveryMissingField) {
  try {
    oc::resolve({{"kind", "dk"}});
    FAIL();
  } catch (const occlab::ValidationError& e) {
    std::string m = e.what();
    EXPECT_NE(m.find("seed"), std::string::npos);
    EXPECT_NE(m.find("n\n"), std::string::npos);
    EXPECT_NE(m.find("trials"), std::string::npos);
  }
  EXPECT_THROW(oc::resolve({}), occlab::ValidationError);
  EXPECT_THROW(oc::resolve({{"kind", "bogus"}}), occlab::ValidationError);
}

TEST(Config, RejectsUnknownKeys) {
  try {
    oc::resolve({{"kind", "duality"}, {"n", "10"}, {"trials", "1"}, {"seed", "1"}, {"colour", "red"}});
    FAIL();
  } catch (const occlab::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
}

TEST(Config, ScientificIntegers) {
  auto c = oc::resolve({{"kind", "duality"}, {"n", "1e6"}, {"trials", "2.0"}, {"seed", "7"}});
  EXPECT_EQ(c.integer("n"), 1000000u);
  EXPECT_EQ(c.integer("trials"), 2u);
  c.values["n"] = "1.5";
  EXPECT_THROW(c.integer("n"), occlab::ValidationError);
  c.values["n"] = "-3";
  EXPECT_THROW(c.integer("n"), occlab::ValidationError);
  c.values["n"] = "abc";
  EXPECT_THROW(c.real("n"), occlab::ValidationError);
  c.values["checkpoints"] = "1e2,1e3";
  EXPECT_EQ(c.integer_list("checkpoints"), (std::vector<std::uint64_t>{100, 1000}));
}

TEST(Describe, CardsAreStable) {
  for (const auto& [kind, schema] : oc::schemas()) {
    EXPECT_EQ(oc::describe(kind), oc::describe(kind));
    EXPECT_NE(oc::describe(kind).find("Threshold"), std::string::npos) << kind;
  }
  EXPECT_NE(oc::describe("dk").find("Mittag-Leffler"), std::string::npos);
  EXPECT_NE(oc::describe("renewal").find("renewal chain"), std::string::npos);
  EXPECT_THROW(oc::describe("bogus"), occlab::ValidationError);
}

TEST(Run, ReproducibleTables) {
  auto dir = scratch("repro");
  oc::KeyValues kv{{"kind", "ratio"}, {"n", "1e5"}, {"trials", "4"}, {"seed", "3"}, {"output", dir.string()}};
  auto a = oc::run_experiment(oc::resolve(kv));
  auto b = oc::run_experiment(oc::resolve(kv));
  EXPECT_EQ(a.tables, b.tables);
  oc::write_result(a);
  auto meta = nlohmann::json::parse(slurp(dir / "ratio.json"));
  EXPECT_EQ(meta["config"]["seed"], "3");
  EXPECT_EQ(meta["version"], oc::version);
  // re-running the embedded config reproduces the table
  oc::KeyValues again;
  for (auto& [k, v] : meta["config"].items()) again[k] = v.get<std::string>();
  EXPECT_EQ(oc::run_experiment(oc::resolve(again)).tables.at("ratio_traces"), slurp(dir / "ratio_traces.csv"));
}

TEST(Run, HypothesisErrorsSurface) {
  EXPECT_THROW(oc::run_experiment(oc::resolve({{"kind", "dk"}, {"p1", "2"}, {"n", "100"}, {"trials", "1"}, {"seed", "1"}})),
               occlab::HypothesisError);
}

TEST(Binary, ExitCodes) {
  auto dir = scratch("bin");
  EXPECT_EQ(run_cli("describe dk"), 0);
  EXPECT_EQ(run_cli("describe bogus"), 1);
  EXPECT_EQ(run_cli("dk"), 1);
  EXPECT_EQ(run_cli("dk --n 1e3 --trials 2 --seed 1 --p1 2"), 2);
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.cfg").string()), 4);
  std::ofstream(dir / "empty.cfg") << "";
  EXPECT_EQ(run_cli("run --config " + (dir / "empty.cfg").string()), 1);
  std::ofstream(dir / "bad.cfg") << "kind = duality\nn = 100\ntrials = 1\nseed = 1\nextra = 2\n";
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.cfg").string()), 1);
  EXPECT_EQ(run_cli("duality --n 1e5 --trials 100 --seed 1 --output " + dir.string()), 0);
  auto meta = nlohmann::json::parse(slurp(dir / "duality.json"));
  EXPECT_EQ(meta["summary"]["violations"], 0);
  std::ofstream(dir / "ok.cfg") << "kind = iterate-sums\nn = 1000\noutput = " << (dir / "cfg").string() << "\n";
  EXPECT_EQ(run_cli("run --config " + (dir / "ok.cfg").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "cfg" / "iterate_table.csv"));
}

TEST(Binary, OutputDirectoryFromEnvironment) {
  auto dir = scratch("env");
  std::string cmd = "OCCLAB_OUTPUT_DIR=" + dir.string() + " " + OCCLAB_CLI + " compare-sums --n 1000 >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "compare_sums.csv"));
  EXPECT_TRUE(fs::exists(dir / "compare-sums.json"));
}
