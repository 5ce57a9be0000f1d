// Copyright 2026 The trion-dynamics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trion/io.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string output;
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string(TRION_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[512];
  while (std::fgets(buf, sizeof(buf), pipe)) r.output += buf;
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("trion_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

TEST(Cli, SelfTestPasses) {
  const Result r = run_cli("selftest --seed 3 --cases 3");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("PASS"), std::string::npos);
  EXPECT_EQ(r.output.find("FAIL"), std::string::npos);
}

TEST(Cli, ZeemanRunWritesFiles) {
  const fs::path out = scratch("zeeman");
  const Result r = run_cli("zeeman --set b_max=5 --set b_count=6 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream is(out / "values.csv");
  const trion::Table t = trion::read_csv(is);
  EXPECT_EQ(t.rows.size(), 6u);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  fs::remove_all(out);
}

TEST(Cli, ConfigFileAndDetuningFlag) {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "cfg.json");
    os << R"({"grids": {"area": [0, 0.5, 1]}})";
  }
  const Result r = run_cli("rabi --config " + (dir / "cfg.json").string() + " --detuning 5 --out " + (dir / "o").string());
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream is(dir / "o" / "manifest.json");
  const auto m = nlohmann::json::parse(is);
  EXPECT_EQ(m["config"]["sequence"]["detuning"], 5.0);
  fs::remove_all(dir);
}

TEST(Cli, FitSubcommand) {
  const fs::path dir = scratch("fit");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "decay.csv");
    os << "coarse_delay_ps,signal\n";
    for (int i = 0; i < 31; ++i) {
      const double x = 80.0 + 100.0 * i / 30.0;
      os << trion::format_number(x) << "," << trion::format_number(0.4 * std::exp(-x / 43.0)) << "\n";
    }
  }
  const Result r = run_cli("fit --kind exponential --input " + (dir / "decay.csv").string() + " --out " +
                           (dir / "fit").string());
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream is(dir / "fit" / "fits.json");
  const auto j = nlohmann::json::parse(is);
  EXPECT_NE(j.dump().find("tau"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("rabi --no-such-flag").code, 2);
  const Result bad = run_cli("rabi --set system.gamma_spont=-1 --out /tmp/unused_trion");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.output.find("system.gamma_spont"), std::string::npos);
}

}  // namespace
