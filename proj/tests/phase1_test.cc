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
#include <fstream>
#include <sstream>
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "mdeploy/gen.h"
#include "mdeploy/phase1.h"
#include "mdeploy/phase2.h"
#include "testing.h"

namespace mdeploy::phase1 {
namespace {

using testing::load_fig1;
using testing::make_type;

solver::Budget quick() {
  solver::Budget b;
  b.time_limit = std::chrono::seconds(20);
  return b;
}

TEST(DeriveBounds, Fig1Pool) {
  auto f = load_fig1();
  auto b = derive_bounds(f.universe, f.nodes);
  // CPU 2, RAM 4: one per large node, two per xlarge node.
  EXPECT_EQ(b.at("MessageReceiver"), 4 * 1 + 4 * 2);
  EXPECT_EQ(b.at("AttachmentAnalyzer"), 4 * 2 + 4 * 4);
}

TEST(DeriveBounds, ZeroResourceTypeNeedsOverride) {
  Universe u({make_type("T")});
  NodePool nodes({Node{"n", {{"cpu", 4}}, 1}});
  EXPECT_THROW(derive_bounds(u, nodes), InputError);
  EXPECT_EQ(derive_bounds(u, nodes, {{"T", 5}}).at("T"), 5);
}

TEST(DeriveBounds, OverrideWins) {
  auto f = load_fig1();
  EXPECT_EQ(derive_bounds(f.universe, f.nodes, {{"MessageReceiver", 5}})
                .at("MessageReceiver"),
            5);
}

TEST(SolvePhase1, Fig1Counts) {
  auto f = load_fig1();
  auto r = solve_phase1(f.universe, f.nodes, "MessageReceiver",
                        derive_bounds(f.universe, f.nodes), quick());
  ASSERT_EQ(r.outcome.status, solver::SolveStatus::kOptimal);
  ASSERT_TRUE(r.plan.has_value());
  EXPECT_EQ(r.plan->count("MessageReceiver"), 1);
  EXPECT_EQ(r.plan->count("MessageAnalyzer"), 3);
  EXPECT_EQ(r.plan->count("AttachmentAnalyzer"), 2);
  EXPECT_EQ(r.plan->cost, 498);
  int large = 0, xlarge = 0;
  for (const auto& n : r.plan->used_nodes) {
    (n.starts_with("c4_large") ? large : xlarge) += 1;
  }
  EXPECT_EQ(large, 1);
  EXPECT_EQ(xlarge, 2);
  EXPECT_TRUE(validate_instance_plan(*r.plan, f.universe, f.nodes,
                                     "MessageReceiver")
                  .empty());
}

TEST(SolvePhase1, UnprovidableRequirementIsUnsat) {
  MicroserviceType t = make_type("T");
  t.strong_requires.emplace("p", 1);
  t.resources = {{"cpu", 1}};
  Universe u({t});
  NodePool nodes({Node{"n", {{"cpu", 4}}, 1}});
  auto r = solve_phase1(u, nodes, "T", derive_bounds(u, nodes), quick());
  EXPECT_EQ(r.outcome.status, solver::SolveStatus::kUnsat);
  EXPECT_FALSE(r.plan.has_value());
}

// T may not both conflict on and require p, so the requirement goes through
// q, which only a provider of p offers.
TEST(SolvePhase1, ConflictAgainstOnlyProviderIsUnsat) {
  MicroserviceType t = make_type("T");
  t.conflicts = {"p"};
  t.weak_requires.emplace("q", 1);
  t.resources = {{"cpu", 1}};
  MicroserviceType u = make_type("U");
  u.provides.emplace("p", Arity::infinite());
  u.provides.emplace("q", Arity::infinite());
  u.resources = {{"cpu", 1}};
  Universe universe({t, u});
  NodePool nodes({Node{"n", {{"cpu", 4}}, 1}});
  auto r = solve_phase1(universe, nodes, "T", derive_bounds(universe, nodes),
                        quick());
  EXPECT_EQ(r.outcome.status, solver::SolveStatus::kUnsat);
}

TEST(SolvePhase1, LoneTargetPaysOneNode) {
  MicroserviceType t = make_type("T");
  t.resources = {{"cpu", 1}};
  Universe u({t});
  NodePool nodes({Node{"a", {{"cpu", 1}}, 9}, Node{"b", {{"cpu", 1}}, 7}});
  auto r = solve_phase1(u, nodes, "T", derive_bounds(u, nodes), quick());
  ASSERT_TRUE(r.plan.has_value());
  EXPECT_EQ(r.plan->count("T"), 1);
  EXPECT_EQ(r.plan->cost, 7);
  EXPECT_EQ(r.plan->used_nodes, (std::set<NodeName>{"b"}));
}

TEST(SolvePhase1, UnknownTarget) {
  auto f = load_fig1();
  EXPECT_THROW(encode_phase1(f.universe, f.nodes, "Nope",
                             derive_bounds(f.universe, f.nodes)),
               InputError);
}

TEST(SolvePhase1, StrongCycleRejected) {
  MicroserviceType a = make_type("A");
  a.strong_requires.emplace("p", 1);
  a.provides.emplace("q", Arity::infinite());
  MicroserviceType b = make_type("B");
  b.provides.emplace("p", Arity::infinite());
  b.strong_requires.emplace("q", 1);
  Universe u({a, b});
  NodePool nodes({Node{"n", {}, 1}});
  EXPECT_THROW(encode_phase1(u, nodes, "A", {{"A", 1}, {"B", 1}}), InputError);
}

TEST(ExtractInstancePlan, IncoherentAssignmentIsInternalError) {
  auto f = load_fig1();
  auto enc = encode_phase1(f.universe, f.nodes, "MessageReceiver",
                           derive_bounds(f.universe, f.nodes));
  auto out = solver::solve(enc.model, quick());
  ASSERT_TRUE(out.has_solution());
  out.assignment[enc.dict.inst.at("MessageAnalyzer").index] += 1;
  EXPECT_THROW(extract_instance_plan(out, enc.dict, f.nodes), InternalError);
}

TEST(ValidateInstancePlan, CatchesTampering) {
  auto f = load_fig1();
  auto r = solve_phase1(f.universe, f.nodes, "MessageReceiver",
                        derive_bounds(f.universe, f.nodes), quick());
  ASSERT_TRUE(r.plan.has_value());
  InstancePlan bad = *r.plan;
  bad.total["MessageAnalyzer"] = 2;
  EXPECT_FALSE(
      validate_instance_plan(bad, f.universe, f.nodes, "MessageReceiver").empty());
  bad = *r.plan;
  bad.cost -= 1;
  EXPECT_FALSE(
      validate_instance_plan(bad, f.universe, f.nodes, "MessageReceiver").empty());
  bad = *r.plan;
  bad.total.erase("MessageReceiver");
  EXPECT_FALSE(
      validate_instance_plan(bad, f.universe, f.nodes, "MessageReceiver").empty());
}

TEST(EncodePhase1, FamiliesAreNamed) {
  auto f = load_fig1();
  auto enc = encode_phase1(f.universe, f.nodes, "MessageReceiver",
                           derive_bounds(f.universe, f.nodes));
  EXPECT_TRUE(enc.model.find("used[c4_large#1]").has_value());
  EXPECT_TRUE(enc.model.find("inst[MessageAnalyzer]").has_value());
  EXPECT_TRUE(enc.model.find("place[MessageAnalyzer@c4_xlarge#4]").has_value());
  EXPECT_TRUE(
      enc.model.find("bind[MA:MessageReceiver>MessageAnalyzer]").has_value());
  // Only requirer/provider pairs get a bind variable.
  EXPECT_EQ(enc.dict.bind.size(), 2u);
}

std::string read_golden(const std::string& name) {
  std::ifstream in(std::string(MDEPLOY_GOLDEN_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(EncodePhase1, Fig1GoldenExport) {
  auto f = load_fig1();
  auto enc = encode_phase1(f.universe, f.nodes, "MessageReceiver",
                           derive_bounds(f.universe, f.nodes));
  const auto text = solver::export_model(enc.model);
  EXPECT_EQ(text, read_golden("fig1-mini.phase1.txt"));
  // 8 used, 24 place, 3 inst, 2 bind.
  EXPECT_EQ(enc.model.variables().size(), 37u);
  EXPECT_EQ(solver::export_model(solver::parse_model(text)), text);
}

TEST(EncodePhase1, Fig1GoldenPhase2Export) {
  auto f = load_fig1();
  auto r = solve_phase1(f.universe, f.nodes, "MessageReceiver",
                        derive_bounds(f.universe, f.nodes), quick());
  ASSERT_TRUE(r.plan.has_value());
  auto enc = phase2::encode_phase2(phase2::materialize_instances(*r.plan), f.universe,
                                   phase2::BindingMetric::none());
  EXPECT_EQ(solver::export_model(enc.model), read_golden("fig1-mini.phase2.txt"));
  // 3 MA and 6 AA candidate bindings.
  EXPECT_EQ(enc.model.variables().size(), 9u);
}

TEST(ReuseStage, KeepsInitialPlacementsAtEqualCost) {
  auto f = load_fig1();
  auto r = solve_phase1(f.universe, f.nodes, "MessageReceiver",
                        derive_bounds(f.universe, f.nodes), quick(), &f.initial);
  ASSERT_TRUE(r.plan.has_value());
  EXPECT_EQ(r.plan->cost, 498);
  EXPECT_EQ(r.plan->placement.at({"MessageReceiver", "c4_large#1"}), 1);
  EXPECT_GE(r.plan->placement.at({"MessageAnalyzer", "c4_xlarge#1"}), 1);
  EXPECT_GE(r.plan->placement.at({"AttachmentAnalyzer", "c4_xlarge#1"}), 1);
}

struct Solved {
  solver::SolveStatus status;
  int64_t cost = 0;
};

Solved optimum(const Universe& u, const NodePool& nodes, const TypeName& target,
               const InstanceBounds& bounds, bool symmetry = true) {
  EncodeOptions opts;
  opts.symmetry_breaking = symmetry;
  auto r = solve_phase1(u, nodes, target, bounds, quick(), nullptr, opts);
  EXPECT_TRUE(r.outcome.status == solver::SolveStatus::kOptimal ||
              r.outcome.status == solver::SolveStatus::kUnsat);
  return {r.outcome.status, r.plan ? r.plan->cost : 0};
}

TEST(Phase1Properties, DecodedPlansPassTheValidator) {
  for (uint64_t seed = 1; seed <= 150; ++seed) {
    auto p = gen::random_problem(seed);
    auto bounds = derive_bounds(p.universe, p.nodes, p.bounds);
    auto r = solve_phase1(p.universe, p.nodes, p.target, bounds, quick());
    if (!r.plan) continue;
    auto problems = validate_instance_plan(*r.plan, p.universe, p.nodes, p.target);
    EXPECT_TRUE(problems.empty()) << "seed " << seed << ": " << problems[0];
  }
}

TEST(Phase1Properties, SymmetryBreakingKeepsTheCost) {
  for (uint64_t seed = 1; seed <= 150; ++seed) {
    auto p = gen::random_problem(seed);
    auto bounds = derive_bounds(p.universe, p.nodes, p.bounds);
    auto on = optimum(p.universe, p.nodes, p.target, bounds, true);
    auto off = optimum(p.universe, p.nodes, p.target, bounds, false);
    ASSERT_EQ(on.status, off.status) << "seed " << seed;
    EXPECT_EQ(on.cost, off.cost) << "seed " << seed;
  }
}

TEST(Phase1Properties, RemovingANodeNeverLowersTheCost) {
  for (uint64_t seed = 1; seed <= 150; ++seed) {
    auto p = gen::random_problem(seed);
    if (p.nodes.size() < 2) continue;
    auto bounds = derive_bounds(p.universe, p.nodes, p.bounds);
    auto full = optimum(p.universe, p.nodes, p.target, bounds);
    std::vector<Node> fewer = p.nodes.nodes();
    fewer.erase(fewer.begin() + static_cast<long>(seed % fewer.size()));
    auto reduced = optimum(p.universe, NodePool(fewer), p.target, bounds);
    if (full.status == solver::SolveStatus::kUnsat) {
      EXPECT_EQ(reduced.status, solver::SolveStatus::kUnsat) << "seed " << seed;
    } else if (reduced.status == solver::SolveStatus::kOptimal) {
      EXPECT_GE(reduced.cost, full.cost) << "seed " << seed;
    }
  }
}

TEST(Phase1Properties, RaisingAProvidedArityNeverRaisesTheCost) {
  for (uint64_t seed = 1; seed <= 150; ++seed) {
    auto p = gen::random_problem(seed);
    auto bounds = derive_bounds(p.universe, p.nodes, p.bounds);
    std::vector<MicroserviceType> types;
    bool raised = false;
    for (const auto& [_, t] : p.universe.types()) {
      MicroserviceType copy = t;
      for (auto& [iface, arity] : copy.provides) {
        if (!raised && !arity.is_infinite()) {
          arity = Arity(arity.value() + 1);
          raised = true;
        }
      }
      types.push_back(copy);
    }
    if (!raised) continue;
    auto base = optimum(p.universe, p.nodes, p.target, bounds);
    auto more = optimum(Universe(types), p.nodes, p.target, bounds);
    if (more.status == solver::SolveStatus::kUnsat) {
      EXPECT_EQ(base.status, solver::SolveStatus::kUnsat) << "seed " << seed;
    } else if (base.status == solver::SolveStatus::kOptimal) {
      EXPECT_LE(more.cost, base.cost) << "seed " << seed;
    }
  }
}

}  // namespace
}  // namespace mdeploy::phase1
