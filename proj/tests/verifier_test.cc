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


#include <chrono>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "mdeploy/gen.h"
#include "mdeploy/phase1.h"
#include "mdeploy/pipeline.h"
#include "mdeploy/verifier.h"
#include "testing.h"

namespace mdeploy::verifier {
namespace {

using testing::fig1_full;
using testing::load_fig1;
using testing::make_type;

solver::Budget quick() {
  solver::Budget b;
  b.time_limit = std::chrono::seconds(20);
  return b;
}

pipeline::Result plan_fig1(const Configuration& initial) {
  auto f = load_fig1();
  pipeline::Request req{f.universe, f.nodes, initial, "MessageReceiver"};
  req.budget = quick();
  return pipeline::plan_deployment(req);
}

TEST(RunPlan, Fig1ScratchIsValid) {
  auto f = load_fig1();
  auto r = plan_fig1({});
  auto trace = run_plan({}, *r.plan, f.universe, f.nodes);
  EXPECT_TRUE(trace.valid());
  EXPECT_EQ(trace.steps.size(), 9u);
  for (const auto& s : trace.steps) EXPECT_TRUE(s.report.provisionally_correct());
  EXPECT_TRUE(trace.steps.back().report.correct());
}

TEST(RunPlan, OverloadAtSecondNew) {
  auto f = load_fig1();
  DeploymentPlan plan{{NewAction{"a", "MessageReceiver", "c4_large#1", {}},
                       NewAction{"b", "MessageReceiver", "c4_large#1", {}}}};
  auto trace = run_plan({}, plan, f.universe, f.nodes);
  ASSERT_FALSE(trace.valid());
  EXPECT_EQ(trace.violation_step, 2u);
  EXPECT_EQ(trace.finding->kind, Finding::Kind::kProvisionalViolation);
  ASSERT_TRUE(trace.finding->violation.has_value());
  EXPECT_EQ(trace.finding->violation->kind, ViolationKind::kNodeOverload);
}

TEST(RunPlan, UnmetWeakAtTheEnd) {
  auto f = load_fig1();
  DeploymentPlan plan{{NewAction{"mr", "MessageReceiver", "c4_large#1", {}}}};
  auto trace = run_plan({}, plan, f.universe, f.nodes);
  ASSERT_FALSE(trace.valid());
  EXPECT_EQ(trace.violation_step, 1u);
  EXPECT_EQ(trace.finding->kind, Finding::Kind::kFinalViolation);
  EXPECT_EQ(trace.finding->violation->kind, ViolationKind::kUnmetWeak);
}

TEST(RunPlan, RejectedAction) {
  auto f = load_fig1();
  DeploymentPlan plan{{BindAction{{"AA", "ma", "aa"}}}};
  Configuration c = f.initial;
  c.bindings.erase({"AA", "ma", "aa"});
  // The initial configuration itself is broken (ma lacks its strong port).
  auto trace = run_plan(c, plan, f.universe, f.nodes);
  ASSERT_FALSE(trace.valid());
  EXPECT_EQ(trace.violation_step, 0u);
  EXPECT_EQ(trace.finding->kind, Finding::Kind::kBadInitial);

  plan = {{UnbindAction{{"AA", "ma", "aa"}}}};
  trace = run_plan(f.initial, plan, f.universe, f.nodes);
  ASSERT_FALSE(trace.valid());
  EXPECT_EQ(trace.violation_step, 1u);
  EXPECT_EQ(trace.finding->kind, Finding::Kind::kActionRejected);
  EXPECT_EQ(trace.finding->action_error, ActionErrorCode::kStrongPortBind);
}

TEST(RunPlan, UnknownNode) {
  auto f = load_fig1();
  DeploymentPlan plan{{NewAction{"aa", "AttachmentAnalyzer", "mars", {}}}};
  auto trace = run_plan({}, plan, f.universe, f.nodes);
  ASSERT_FALSE(trace.valid());
  EXPECT_EQ(trace.finding->kind, Finding::Kind::kUnknownNode);
  EXPECT_EQ(trace.violation_step, 1u);
}

TEST(RunPlan, ReplayIsDeterministic) {
  auto f = load_fig1();
  auto r = plan_fig1(f.initial);
  auto a = run_plan(f.initial, *r.plan, f.universe, f.nodes);
  auto b = run_plan(f.initial, *r.plan, f.universe, f.nodes);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].config, b.steps[i].config);
    EXPECT_EQ(a.steps[i].report.violations, b.steps[i].report.violations);
  }
}

TEST(CheckProblemOutput, Fig1) {
  auto f = load_fig1();
  auto r = plan_fig1({});
  auto out = check_problem_output(*r.trace, "MessageReceiver", f.nodes);
  EXPECT_TRUE(out.has_target);
  EXPECT_EQ(out.final_cost, 498);
  EXPECT_FALSE(check_problem_output(*r.trace, "Nope", f.nodes).has_target);
}

TEST(CheckProblemOutput, EmptyPlanOnCorrectInitial) {
  auto f = load_fig1();
  auto trace = run_plan(fig1_full(), {}, f.universe, f.nodes);
  auto out = check_problem_output(trace, "MessageReceiver", f.nodes);
  EXPECT_TRUE(out.has_target);
  EXPECT_EQ(out.final_cost, config_cost(fig1_full(), f.nodes));
}

TEST(CheckProblemOutput, InvalidTrace) {
  auto f = load_fig1();
  auto trace = run_plan(f.initial, {}, f.universe, f.nodes);
  ASSERT_FALSE(trace.valid());
  EXPECT_THROW(check_problem_output(trace, "MessageReceiver", f.nodes), InputError);
}

TEST(Oracle, Fig1) {
  auto f = load_fig1();
  auto r = brute_force_oracle(f.universe, f.nodes, "MessageReceiver", 8);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->cost, 498);
  std::map<TypeName, int> counts;
  for (const auto& [_, pl] : r->witness.instances) ++counts[pl.type];
  EXPECT_EQ(counts, (std::map<TypeName, int>{{"AttachmentAnalyzer", 2},
                                             {"MessageAnalyzer", 3},
                                             {"MessageReceiver", 1}}));
  EXPECT_TRUE(check_correct(r->witness, f.universe, f.nodes).correct());
}

TEST(Oracle, UnprovidableIsNone) {
  MicroserviceType t = make_type("T");
  t.strong_requires.emplace("p", 1);
  Universe u({t});
  NodePool nodes({Node{"n", {}, 1}});
  EXPECT_FALSE(brute_force_oracle(u, nodes, "T", 4).has_value());
}

TEST(Oracle, CheapestNode) {
  Universe u({make_type("T")});
  NodePool nodes({Node{"a", {}, 9}, Node{"b", {}, 7}, Node{"c", {}, 8}});
  auto r = brute_force_oracle(u, nodes, "T", 3);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->cost, 7);
}

TEST(Oracle, Overflow) {
  auto f = load_fig1();
  OracleOptions opts;
  opts.step_budget = 100;
  EXPECT_THROW(brute_force_oracle(f.universe, f.nodes, "MessageReceiver", 8, opts),
               OracleOverflow);
}

TEST(Oracle, HugeCapOverflowsInsteadOfExhaustingMemory) {
  auto f = load_fig1();
  OracleOptions opts;
  opts.step_budget = 200'000;
  opts.parallel = true;
  EXPECT_THROW(brute_force_oracle(f.universe, f.nodes, "MessageReceiver", 100000, opts),
               OracleOverflow);
}

TEST(Oracle, ParallelMatchesSerial) {
  auto f = load_fig1();
  OracleOptions par;
  par.parallel = true;
  auto a = brute_force_oracle(f.universe, f.nodes, "MessageReceiver", 8);
  auto b = brute_force_oracle(f.universe, f.nodes, "MessageReceiver", 8, par);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->cost, b->cost);
  EXPECT_EQ(a->witness, b->witness);
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    auto p = gen::random_problem(seed);
    OracleOptions s;
    s.type_caps = p.bounds;
    OracleOptions q = s;
    q.parallel = true;
    const int64_t cap = std::accumulate(
        p.bounds.begin(), p.bounds.end(), int64_t{0},
        [](int64_t acc, const auto& kv) { return acc + kv.second; });
    auto x = brute_force_oracle(p.universe, p.nodes, p.target, cap, s);
    auto y = brute_force_oracle(p.universe, p.nodes, p.target, cap, q);
    ASSERT_EQ(x.has_value(), y.has_value()) << "seed " << seed;
    if (x) {
      EXPECT_EQ(x->cost, y->cost);
      EXPECT_EQ(x->witness, y->witness);
    }
  }
}

// Phase 1 and the oracle search the same space: same bounds, same nodes.
TEST(OracleProperties, AgreesWithPhase1) {
  int feasible = 0;
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    auto p = gen::random_problem(seed);
    auto bounds = phase1::derive_bounds(p.universe, p.nodes, p.bounds);
    auto r = phase1::solve_phase1(p.universe, p.nodes, p.target, bounds, quick());
    ASSERT_TRUE(r.outcome.status == solver::SolveStatus::kOptimal ||
                r.outcome.status == solver::SolveStatus::kUnsat);
    OracleOptions opts;
    opts.type_caps = bounds;
    int64_t cap = 0;
    for (const auto& [_, b] : bounds) cap += b;
    auto o = brute_force_oracle(p.universe, p.nodes, p.target, cap, opts);
    ASSERT_EQ(r.plan.has_value(), o.has_value()) << "seed " << seed;
    if (o) {
      ++feasible;
      EXPECT_EQ(r.plan->cost, o->cost) << "seed " << seed;
    }
  }
  EXPECT_GT(feasible, 10);
}

}  // namespace
}  // namespace mdeploy::verifier
