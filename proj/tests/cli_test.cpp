/* Copyright 2026 The stalloc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stalloc/plan_json.hpp"
#include "stalloc/reshape.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using namespace stalloc;

struct RunResult {
  int status = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(STALLOC_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("stalloc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    sketch_ = path("sketch.ltv");
    save_latent(stalloc::testing::random_latent({4, 8, 16, 16}, 21), sketch_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string plan_args() const {
    return "plan --sketch " + sketch_ + " --frames 21 --height 60 --width 104 --steps 50";
  }

  fs::path dir_;
  std::string sketch_;
};

TEST_F(Cli, NoiseIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(run("noise --shape 2,3,16,16 --seed 7 --out " + path("a.ltv")).status, 0);
  ASSERT_EQ(run("noise --shape 2,3,16,16 --seed 7 --out " + path("b.ltv")).status, 0);
  EXPECT_EQ(slurp(path("a.ltv")), slurp(path("b.ltv")));
  EXPECT_EQ(load_latent(path("a.ltv")), noise_field({2, 3, 16, 16}, 7));
}

TEST_F(Cli, ResizeMatchesLibrary) {
  ASSERT_EQ(run("resize --in " + sketch_ + " --target 5,9,20 --out " + path("r.ltv")).status, 0);
  EXPECT_EQ(load_latent(path("r.ltv")), anchor_resize(load_latent(sketch_), {5, 9, 20}));
}

TEST_F(Cli, DemandMatchesLibrary) {
  const RunResult r = run("demand " + sketch_ + " --sharpness 3");
  ASSERT_EQ(r.status, 0) << r.out;
  DemandConfig cfg;
  cfg.sharpness = 3.0;
  EXPECT_EQ(r.out, dump_canonical(demand_to_json(estimate_demand(load_latent(sketch_), cfg))));
}

TEST_F(Cli, PlanIsDeterministicAndMatchesLibrary) {
  const RunResult a = run(plan_args() + " --seed 99");
  const RunResult b = run(plan_args() + " --seed 99");
  ASSERT_EQ(a.status, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  const Json j = Json::parse(a.out);
  EXPECT_EQ(j.size(), 8u);
  PlannerConfig cfg;
  cfg.seed = 99;
  const SchedulePlan plan = make_plan(load_latent(sketch_), {{21, 60, 104}, 50}, cfg);
  EXPECT_EQ(a.out, dump_canonical(plan_to_json(plan)));
}

TEST_F(Cli, ConfigFilePresetsAndFlagsOverride) {
  {
    std::ofstream cfg(path("plan.toml"));
    cfg << "# preset\nbudget = 0.4\ntolerance = 0.1\nseed = 5\n";
  }
  const RunResult preset = run(plan_args() + " --config " + path("plan.toml"));
  ASSERT_EQ(preset.status, 0) << preset.out;
  const Json p = Json::parse(preset.out);
  EXPECT_NEAR(p["predicted_density"].get<double>(), 0.4, 0.1);
  EXPECT_EQ(p["transitions"][0]["seed"].get<std::uint64_t>(), 5u ^ 1u);

  const RunResult over = run(plan_args() + " --config " + path("plan.toml") + " --seed 8 --budget 0.6");
  ASSERT_EQ(over.status, 0) << over.out;
  const Json o = Json::parse(over.out);
  EXPECT_EQ(o["transitions"][0]["seed"].get<std::uint64_t>(), 8u ^ 1u);
  EXPECT_NEAR(o["predicted_density"].get<double>(), 0.6, 0.1);
}

TEST_F(Cli, SimulateReportsSpeedup) {
  ASSERT_EQ(run(plan_args() + " --out " + path("plan.json")).status, 0);
  const RunResult r = run("simulate --plan " + path("plan.json") + " --model linear");
  ASSERT_EQ(r.status, 0) << r.out;
  const Json j = Json::parse(r.out);
  const Json plan = Json::parse(slurp(path("plan.json")));
  EXPECT_EQ(j["speedup"].get<double>(), 1.0 / plan["predicted_density"].get<double>());
  const RunResult q = run("simulate --plan " + path("plan.json") + " --model quadratic --baseline-steps 100");
  ASSERT_EQ(q.status, 0) << q.out;
  EXPECT_GT(Json::parse(q.out)["speedup"].get<double>(), 2.0 * j["speedup"].get<double>() - 1e-9);
}

TEST_F(Cli, ActionListExportAndImport) {
  ASSERT_EQ(run("actions --steps 46 --stages 2 --grid coarse --out " + path("actions.json")).status, 0);
  const auto actions = action_list_from_json(Json::parse(slurp(path("actions.json"))));
  EXPECT_EQ(actions.size(), 100u);
  const RunResult listed = run(plan_args() + " --actions " + path("actions.json"));
  const RunResult grid = run(plan_args() + " --grid coarse");
  ASSERT_EQ(listed.status, 0) << listed.out;
  EXPECT_EQ(listed.out, grid.out);
}

TEST_F(Cli, ErrorsExitNonZero) {
  const RunResult infeasible = run(plan_args() + " --budget 0.001 --tolerance 0.0005");
  EXPECT_EQ(infeasible.status, 2);
  EXPECT_NE(infeasible.out.find("empty-feasible-set"), std::string::npos) << infeasible.out;
  EXPECT_NE(infeasible.out.find("nearest"), std::string::npos);

  {
    std::ofstream bad(path("bad.ltv"), std::ios::binary);
    bad << "LTV2junk";
  }
  const RunResult malformed = run("demand " + path("bad.ltv"));
  EXPECT_EQ(malformed.status, 2);
  EXPECT_NE(malformed.out.find("error:"), std::string::npos);

  EXPECT_NE(run("resize --in " + path("missing.ltv") + " --target 1,4,4 --out " + path("o.ltv")).status, 0);
  EXPECT_NE(run("plan --frames 4").status, 0);
  EXPECT_NE(run("noise --shape 1,2,3 --seed 1 --out " + path("n.ltv")).status, 0);
}

}  // namespace
