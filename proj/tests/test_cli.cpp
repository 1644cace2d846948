#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using polybm::testing::test_data_dir;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome cli(const std::string& args) {
  const std::string cmd = std::string(POLYBM_CLI) + " " + args + " 2>/dev/null";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("polybm_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, ValidateExitCodes) {
  EXPECT_EQ(cli("validate --complex book_3").code, 0);
  EXPECT_EQ(cli("validate --complex " + (test_data_dir() / "dangling_edge.json").string()).code, 2);
  EXPECT_EQ(cli("validate --complex " + (test_data_dir() / "malformed.json").string()).code, 1);
  EXPECT_EQ(cli("nonsense").code, 1);
}

TEST(Cli, SolveTripodCentre) {
  const Outcome r = cli("solve --complex star_3 --bc tripod_bc.json --mesh-h 0.01");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("# config: ", 0), 0u);
  std::istringstream in(r.out);
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind("0,0,", 0) != 0) continue;
    // Node 0 is the centre, first vertex of every edge.
    EXPECT_NEAR(std::stod(line.substr(line.rfind(',') + 1)), 1.0, 1e-10);
    found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Cli, VerifyWalshWritesReport) {
  const fs::path out = scratch("walsh");
  const Outcome r = cli("verify --suite walsh --n 10000 --seed 3 --out " + out.string());
  EXPECT_EQ(r.code, 0);
  std::ifstream f(out / "report.json");
  ASSERT_TRUE(f);
  std::stringstream ss;
  ss << f.rdbuf();
  const nlohmann::json j = nlohmann::json::parse(ss.str());
  EXPECT_EQ(j["config"]["seed"], 3);
  ASSERT_TRUE(j.contains("reports"));
  EXPECT_EQ(j["reports"].size(), 3u);
  fs::remove_all(out);
}

TEST(Cli, SimulateIsReproducible) {
  const std::string args = "simulate --complex book_3 --seed 5 --n 20 --horizon 0.01 --grid 0.005,0.01";
  const Outcome a = cli(args), b = cli(args + " --threads 3");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("path_id,time,simplex_id"), std::string::npos);
}

TEST(Cli, BadInputsMapToCodes) {
  EXPECT_EQ(cli("verify --suite walsh --n 100").code, 5);
  EXPECT_EQ(cli("solve --complex star_3 --bc tripod_bc.json --mesh-h 5").code, 4);
  EXPECT_EQ(cli("simulate --complex book_3 --start s0 --n 2").code, 3);
  EXPECT_EQ(cli("simulate --complex book_3 --step -1").code, 1);
}
