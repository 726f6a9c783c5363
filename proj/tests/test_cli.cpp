#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out;
};

CliRun run(const std::string& args) {
  std::string cmd = std::string(INFOGEO_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[512];
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("infogeo_cli_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_ini(const std::string& name, const std::string& body) {
  fs::path p = fs::temp_directory_path() / ("infogeo_cli_test_" + name + ".ini");
  std::ofstream(p) << body;
  return p;
}

void expect_config_error(const std::string& args, const fs::path& out) {
  CliRun r = run(args + " --out " + out.string());
  EXPECT_EQ(r.code, 2) << r.out;
  auto rec = json::parse(r.out);
  EXPECT_EQ(rec["status"], "error");
  EXPECT_EQ(rec["kind"], "config_error");
  EXPECT_FALSE(fs::exists(out));
}

}  // namespace

TEST(Cli, MalformedConfig) {
  auto ini = write_ini("malformed", "[problem\nfixture\n");
  expect_config_error("solve --config " + ini.string(), scratch("malformed"));
}

TEST(Cli, UnknownKey) {
  auto ini = write_ini("unknown", "[problem]\nfixture = square_ex1\nbogus = 1\n");
  expect_config_error("solve --config " + ini.string(), scratch("unknown"));
}

TEST(Cli, PsiFixtureMismatch) {
  expect_config_error("fisher --fixture square_ex1 --psi disk_quadrant_bump", scratch("mismatch"));
}

TEST(Cli, MissingConfigFile) {
  expect_config_error("solve --config /nonexistent/none.ini", scratch("missing"));
}

TEST(Cli, NoSubcommand) {
  CliRun r = run("--fixture square_ex1");
  EXPECT_NE(r.code, 0);
}

TEST(Cli, FisherFlagsSquareBump) {
  auto out = scratch("fisher");
  CliRun r = run("fisher --fixture square_ex1 --psi square_bump --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  auto s = json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(s["result"]["sweep"]["verdict"], "out_of_range_divergent");
  EXPECT_TRUE(fs::exists(out / "fisher_sweep.csv"));
  auto m = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["subcommand"], "fisher");
  EXPECT_EQ(m["files"].size(), 2u);
}

TEST(Cli, TransportDiskQuadrantBump) {
  auto out = scratch("transport_disk");
  CliRun r = run("transport --fixture disk_ex2 --psi disk_quadrant_bump --resolution 129 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  auto s = json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(s["result"]["verdict"]["status"], "constant_offset_detected");
}

TEST(Cli, RerunIsByteIdentical) {
  auto ini = write_ini("rerun",
                       "[problem]\nfixture = square_ex1\nresolutions = 33\nseed = 5\n"
                       "[simulate]\nn = 500\nreplicates = 50\ngram_n = 2000\nrisk_n = 200,400\nrisk_replicates = 20\n");
  auto a = scratch("rerun_a"), b = scratch("rerun_b");
  for (const auto& d : {a, b}) {
    CliRun r = run("simulate --config " + ini.string() + " --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.out;
  }
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  int csvs = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++csvs;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
  EXPECT_GT(csvs, 0);
}
