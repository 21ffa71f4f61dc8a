// Copyright 2026 The bb84lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct Output {
  int status = -1;
  std::string out;
};

// Runs the CLI through the shell, capturing stdout; stderr is appended when
// `with_stderr` is set.
Output cli(const std::string& args, bool with_stderr = false) {
  const std::string cmd = std::string(BB84LAB_CLI_PATH) + " " + args + (with_stderr ? " 2>&1" : " 2>/dev/null");
  Output o;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return o;
  char buf[4096];
  std::size_t k;
  while ((k = std::fread(buf, 1, sizeof buf, p)) > 0) o.out.append(buf, k);
  const int st = ::pclose(p);
  o.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return o;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("bb84lab_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    ::unsetenv("BB84LAB_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string file(const std::string& name, const std::string& content = {}) {
    const fs::path p = dir_ / name;
    if (!content.empty()) std::ofstream(p) << content;
    return "'" + p.string() + "'";
  }

  fs::path dir_;
};

TEST_F(CliTest, NoiselessSimulationSucceeds) {
  const auto o = cli("simulate --set N=256 --set epsilon=0.2 --seed 4");
  EXPECT_EQ(o.status, 0);
  const auto rows = csv_rows(o.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][column(rows[0], "delta")], "0");
  EXPECT_EQ(rows[1][column(rows[0], "abort_reason")], "");
  EXPECT_EQ(rows[1][column(rows[0], "keys_equal")], "1");
}

TEST_F(CliTest, InterceptResendAbortsWithExitTwo) {
  const auto o = cli("simulate --set N=2048 --set epsilon=0.1 --set channel=intercept_resend --seed 2");
  EXPECT_EQ(o.status, 2);
  const auto rows = csv_rows(o.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][column(rows[0], "abort_reason")], "delta_exceeded");
}

TEST_F(CliTest, OutputsAreByteIdenticalForTheSameSeed) {
  const std::string base = "simulate --set N=128 --set channel=depolarizing --set channel.p=0.06 --runs 3 --seed 11";
  const auto a = cli(base), b = cli(base);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, cli("simulate --set N=128 --set channel=depolarizing --set channel.p=0.06 --runs 3 --seed 12").out);

  const std::string t1 = file("t1"), t2 = file("t2");
  cli("simulate --set N=128 --seed 3 --transcript-out " + t1);
  cli("simulate --set N=128 --seed 3 --transcript-out " + t2);
  std::ifstream f1(dir_ / "t1"), f2(dir_ / "t2");
  const std::string s1((std::istreambuf_iterator<char>(f1)), {}), s2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_FALSE(s1.empty());
  EXPECT_EQ(s1, s2);
}

TEST_F(CliTest, SeedPrecedence) {
  auto seed_of = [](const Output& o) {
    const auto rows = csv_rows(o.out);
    return rows.size() > 1 ? rows[1][1] : "";
  };
  const std::string conf = file("c.conf", "N = 64\nseed = 5\n");
  EXPECT_EQ(seed_of(cli("simulate --config " + conf)), "5");
  ::setenv("BB84LAB_SEED", "6", 1);
  EXPECT_EQ(seed_of(cli("simulate --config " + conf)), "6");
  EXPECT_EQ(seed_of(cli("simulate --config " + conf + " --seed 7")), "7");
  ::setenv("BB84LAB_SEED", "junk", 1);
  EXPECT_EQ(cli("simulate --config " + conf).status, 3);
  ::unsetenv("BB84LAB_SEED");
}

TEST_F(CliTest, ConfigErrorsReportLineAndExitThree) {
  const auto o = cli("simulate --config " + file("bad.conf", "N = 64\n# ok\nepsilon = lots\n"), true);
  EXPECT_EQ(o.status, 3);
  EXPECT_NE(o.out.find("line 3"), std::string::npos) << o.out;
  EXPECT_EQ(cli("simulate --config " + file("missing.conf")).status, 3);
  EXPECT_EQ(cli("simulate --set source=leaky_two_copy").status, 3);
  EXPECT_EQ(cli("simulate --bogus").status, 3);
  EXPECT_EQ(cli("").status, 3);
}

TEST_F(CliTest, RefusesToOverwriteWithoutForce) {
  const std::string out = file("stats.csv", "keep me\n");
  EXPECT_EQ(cli("simulate --set N=64 --out " + out).status, 3);
  std::ifstream f(dir_ / "stats.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "keep me");
  EXPECT_EQ(cli("simulate --set N=64 --force --out " + out).status, 0);
  std::ifstream g(dir_ / "stats.csv");
  std::getline(g, line);
  EXPECT_EQ(line.rfind("run_id,", 0), 0u);
}

TEST_F(CliTest, DepolarizingSweepHasNondecreasingDelta) {
  const auto o = cli(
      "sweep --set N=512 --set epsilon=0.1 --set channel=depolarizing --param channel.p --range 0:0.2:0.02 "
      "--runs-per-point 8 --seed 1");
  ASSERT_EQ(o.status, 0);
  const auto rows = csv_rows(o.out);
  const std::size_t vcol = column(rows[0], "value"), dcol = column(rows[0], "delta");
  std::map<double, std::pair<double, int>> by_p;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto& [sum, count] = by_p[std::stod(rows[i][vcol])];
    sum += std::stod(rows[i][dcol]);
    ++count;
  }
  ASSERT_EQ(by_p.size(), 11u);
  double prev = -1.0;
  for (const auto& [p, acc] : by_p) {
    const double mean = acc.first / acc.second;
    EXPECT_GE(mean, prev) << "p = " << p;
    EXPECT_NEAR(mean, p / 2, 0.02) << "p = " << p;
    prev = mean;
  }
}

TEST_F(CliTest, BoundsTable) {
  const auto o = cli("bounds --delta-min 0 --delta-max 0.11 --points 12 --n 200 --epsilon 0.1");
  ASSERT_EQ(o.status, 0);
  const auto rows = csv_rows(o.out);
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"delta", "h", "rate", "rate_mayers", "sampling_bound"}));
  EXPECT_EQ(rows[1][2], "1");
  EXPECT_EQ(rows[1][3], "1");
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_GT(std::stod(rows[i][2]), std::stod(rows[i][3]));
  EXPECT_EQ(cli("bounds --delta-max 0.6").status, 3);
}

TEST_F(CliTest, HelpDocumentsEveryColumn) {
  const auto sim = cli("simulate --help");
  const auto header = csv_rows(cli("simulate --set N=64").out)[0];
  for (const auto& col : header) EXPECT_NE(sim.out.find("  " + col + " "), std::string::npos) << col;
  const auto bounds = cli("bounds --help");
  for (const auto& col : {"delta", "h", "rate", "rate_mayers", "sampling_bound"}) {
    EXPECT_NE(bounds.out.find(std::string("  ") + col + " "), std::string::npos) << col;
  }
}

TEST_F(CliTest, AuditReportsAsJson) {
  const auto o = cli("audit --code repetition/3/1/0 --attack identity --attack rotation:0.1 --attack swap");
  ASSERT_EQ(o.status, 0);
  const auto doc = nlohmann::json::parse(o.out);
  ASSERT_EQ(doc["reports"].size(), 3u);
  const auto& id = doc["reports"][0];
  EXPECT_EQ(id["eta"], 0.0);
  for (const auto& [name, ok] : id["checks"].items()) EXPECT_TRUE(ok.get<bool>()) << name;
  EXPECT_LT(doc["reports"][1]["eta"].get<double>(), 1e-3);
  EXPECT_TRUE(doc["reports"][2]["vacuous"].get<bool>());
  EXPECT_TRUE(doc["reports"][2]["verification_failure_dominant"].get<bool>());
  EXPECT_EQ(cli("audit --code hamming/7/4/0").status, 3);
  EXPECT_EQ(cli("audit --attack teleport").status, 3);
}

}  // namespace
