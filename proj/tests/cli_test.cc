// Copyright 2026 The mdeploy Authors
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


#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "mdeploy/cli.h"
#include "mdeploy/io.h"
#include "testing.h"

namespace mdeploy::cli {
namespace {

namespace fs = std::filesystem;
using testing::fixture_path;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mdeploy_cli_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    io::write_text_file(path(name), text);
    return path(name);
  }

  static std::vector<std::string> fig1(std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"--universe", fixture_path("fig1-mini/universe.json"),
                                  "--nodes", fixture_path("fig1-mini/nodes.json")};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  }
  static std::vector<std::string> cmd(const std::string& name,
                                      std::vector<std::string> rest) {
    rest.insert(rest.begin(), name);
    return rest;
  }

  fs::path dir_;
};

TEST_F(CliTest, ValidateFig1) {
  auto r = run_cli(cmd("validate", fig1({"--initial", fixture_path("fig1-mini/initial.json"),
                                         "--target", "MessageReceiver"})));
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("provisionally_correct_only"), std::string::npos) << r.out;
}

TEST_F(CliTest, ValidateStrongCycle) {
  const auto u = write("u.json", R"([
    {"name": "A", "strong": {"p": 1}, "provides": {"q": "inf"}},
    {"name": "B", "strong": {"q": 1}, "provides": {"p": "inf"}}])");
  const auto n = write("n.json", R"([{"name": "n", "cost": 1}])");
  auto r = run_cli({"validate", "--universe", u, "--nodes", n});
  EXPECT_EQ(r.code, kExitInvalidInput);
  EXPECT_NE(r.err.find("cycle: A B"), std::string::npos) << r.err;
}

TEST_F(CliTest, ValidateOverloadedInitial) {
  const auto init = write("i.json", R"({"instances": [
    {"id": "a", "type": "MessageReceiver", "node": "c4_large#1"},
    {"id": "b", "type": "MessageReceiver", "node": "c4_large#1"}]})");
  auto r = run_cli(cmd("validate", fig1({"--initial", init})));
  EXPECT_EQ(r.code, kExitInvalidInput);
  EXPECT_NE(r.err.find("c4_large#1"), std::string::npos) << r.err;
}

TEST_F(CliTest, PlanScratchThenCheck) {
  const auto out = path("plan.json");
  auto r = run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--out", out})));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("cost: 498"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("actions: 9"), std::string::npos) << r.out;
  auto c = run_cli(cmd("check", fig1({"--plan", out})));
  EXPECT_EQ(c.code, kExitOk) << c.out << c.err;
  EXPECT_NE(c.out.find("final cost 498"), std::string::npos);
}

TEST_F(CliTest, PlanIncrementalThenCheck) {
  const auto out = path("plan.json");
  const auto init = fixture_path("fig1-mini/initial.json");
  auto r = run_cli(cmd("plan", fig1({"--initial", init, "--target", "MessageReceiver",
                                     "--mode", "incremental", "--out", out})));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("actions: 5"), std::string::npos) << r.out;
  auto c = run_cli(cmd("check", fig1({"--initial", init, "--plan", out})));
  EXPECT_EQ(c.code, kExitOk) << c.out;
  // Replaying from the wrong initial configuration fails.
  auto wrong = run_cli(cmd("check", fig1({"--plan", out})));
  EXPECT_EQ(wrong.code, kExitNo);
}

TEST_F(CliTest, PlanUnprovidable) {
  const auto u = write("u.json", R"([{"name": "T", "strong": {"p": 1},
                                      "resources": {"cpu": 1}}])");
  const auto n = write("n.json", R"([{"name": "n", "resources": {"cpu": 2}, "cost": 1}])");
  auto r = run_cli({"plan", "--universe", u, "--nodes", n, "--target", "T"});
  EXPECT_EQ(r.code, kExitNo);
  EXPECT_EQ(r.out, "no\n");
}

TEST_F(CliTest, PlanEmitsModels) {
  const auto model = path("model.txt");
  auto r = run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--emit-model", model})));
  ASSERT_EQ(r.code, kExitOk);
  std::ifstream in(model);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "# mdeploy-model v1");
  EXPECT_TRUE(fs::exists(model + ".phase2"));
}

TEST_F(CliTest, PlanBadOptions) {
  EXPECT_EQ(run_cli(cmd("plan", fig1({"--target", "Nope"}))).code, kExitInvalidInput);
  EXPECT_EQ(run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--metric", "fast"})))
                .code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--mode", "lazy"})))
                .code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--bound", "x"})))
                .code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--time-limit",
                                      "-1"})))
                .code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli(cmd("plan", fig1())).code, kExitInvalidInput);
  EXPECT_EQ(run_cli({"plan", "--universe", "/nonexistent.json", "--nodes", "x",
                     "--target", "T"})
                .code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitInvalidInput);
  EXPECT_EQ(run_cli({}).code, kExitInvalidInput);
}

TEST_F(CliTest, PlanZeroTimeLimit) {
  auto r = run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--time-limit", "0"})));
  EXPECT_EQ(r.code, kExitTimeout) << r.out;
}

// Maximizing bindings over the heavy email pipeline cannot be proven
// optimal in a few seconds, but the plan is still emitted and valid.
TEST_F(CliTest, PlanUnprovenMetric) {
  const auto out = path("plan.json");
  auto r = run_cli({"plan", "--universe", fixture_path("email-pipeline/universe-30k.json"),
                    "--nodes", fixture_path("email-pipeline/nodes.json"), "--target",
                    "EmailPipeline", "--metric", "max-bind", "--time-limit", "4", "--out",
                    out});
  ASSERT_EQ(r.code, kExitUnproven) << r.err;
  EXPECT_NE(r.out.find("status: feasible"), std::string::npos) << r.out;
  auto c = run_cli({"check", "--universe", fixture_path("email-pipeline/universe-30k.json"),
                    "--nodes", fixture_path("email-pipeline/nodes.json"), "--plan", out});
  EXPECT_EQ(c.code, kExitOk) << c.out;
}

TEST_F(CliTest, PlanWeightedMetric) {
  const auto m = write("m.json", R"({"sense": "max", "weights": [
    {"interface": "MA", "requirer": "MessageReceiver", "provider": "MessageAnalyzer",
     "weight": 1}]})");
  auto r = run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--metric",
                                     "weighted:" + m})));
  EXPECT_EQ(r.code, kExitOk) << r.err;
  auto bad = write("bad.json", R"({"sense": "max", "weights": [
    {"interface": "ZZ", "requirer": "MessageReceiver", "provider": "MessageAnalyzer",
     "weight": 1}]})");
  EXPECT_EQ(run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--metric",
                                      "weighted:" + bad})))
                .code,
            kExitInvalidInput);
}

class CheckTest : public CliTest {
 protected:
  void SetUp() override {
    CliTest::SetUp();
    plan_ = path("plan.json");
    ASSERT_EQ(run_cli(cmd("plan", fig1({"--target", "MessageReceiver", "--out", plan_})))
                  .code,
              kExitOk);
    file_ = io::read_json_file(plan_);
  }
  io::Json file_;
  std::string plan_;
};

TEST_F(CheckTest, StrongPortBind) {
  auto actions = file_["actions"];
  io::Json bind = {{"kind", "bind"},
                   {"interface", "AA"},
                   {"requirer", "MessageAnalyzer#1"},
                   {"provider", "AttachmentAnalyzer#2"}};
  actions.push_back(bind);
  file_["actions"] = actions;
  const auto edited = write("edited.json", file_.dump());
  auto r = run_cli(cmd("check", fig1({"--plan", edited})));
  EXPECT_EQ(r.code, kExitNo);
  EXPECT_NE(r.out.find("invalid at step 10"), std::string::npos) << r.out;
}

TEST_F(CheckTest, MissingFinalBinds) {
  auto& actions = file_["actions"];
  while (!actions.empty() && actions.back()["kind"] == "bind") actions.erase(actions.size() - 1);
  const auto edited = write("edited.json", file_.dump());
  auto r = run_cli(cmd("check", fig1({"--plan", edited})));
  EXPECT_EQ(r.code, kExitNo);
  EXPECT_NE(r.out.find("invalid at step 6 of 6"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("unmet_weak"), std::string::npos) << r.out;
}

TEST_F(CheckTest, OtherUniverse) {
  file_["universe_hash"] = "0000000000000000";
  const auto edited = write("edited.json", file_.dump());
  EXPECT_EQ(run_cli(cmd("check", fig1({"--plan", edited}))).code, kExitInvalidInput);
}

TEST_F(CheckTest, WrongTarget) {
  auto r = run_cli(cmd("check", fig1({"--plan", plan_, "--target", "MessageAnalyzer"})));
  EXPECT_EQ(r.code, kExitOk);
  r = run_cli(cmd("check", fig1({"--plan", plan_, "--target", "Nope"})));
  EXPECT_EQ(r.code, kExitNo);
}

TEST_F(CliTest, GenPartitionAndPlan) {
  const auto out = path("part");
  auto g = run_cli({"gen", "partition", "--set", "1,2,3", "--out", out});
  ASSERT_EQ(g.code, kExitOk) << g.err;
  EXPECT_TRUE(fs::exists(out + "/universe.json"));
  EXPECT_TRUE(fs::exists(out + "/metric.json"));
  EXPECT_EQ(io::parse_universe(io::read_json_file(out + "/universe.json")).size(), 6u);
  auto r = run_cli({"plan", "--universe", out + "/universe.json", "--nodes",
                    out + "/nodes.json", "--target", "Partition", "--metric",
                    "weighted:" + out + "/metric.json"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
}

TEST_F(CliTest, GenBinpackAndRandom) {
  auto g = run_cli({"gen", "binpack", "--sizes", "3,3,3", "--capacity", "6", "--out",
                    path("bp")});
  ASSERT_EQ(g.code, kExitOk) << g.err;
  auto r = run_cli({"plan", "--universe", path("bp/universe.json"), "--nodes",
                    path("bp/nodes.json"), "--target", "Bins", "--bound", "Bins=1"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("cost: 2"), std::string::npos) << r.out;
  g = run_cli({"gen", "random", "--seed", "5", "--out", path("rnd")});
  ASSERT_EQ(g.code, kExitOk) << g.err;
  EXPECT_TRUE(fs::exists(path("rnd/command.txt")));
}

TEST_F(CliTest, GenRejections) {
  EXPECT_EQ(run_cli({"gen", "partition", "--set", "", "--out", path("x")}).code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli({"gen", "partition", "--set", "1,x", "--out", path("x")}).code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli({"gen", "binpack", "--sizes", "3,0", "--capacity", "6", "--out",
                     path("x")})
                .code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli({"gen", "binpack", "--sizes", "3", "--capacity", "0", "--out",
                     path("x")})
                .code,
            kExitInvalidInput);
  EXPECT_EQ(run_cli({"gen", "random", "--types", "0", "--out", path("x")}).code,
            kExitInvalidInput);
}

}  // namespace
}  // namespace mdeploy::cli
