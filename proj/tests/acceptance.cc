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


// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mdeploy/gen.h"
#include "mdeploy/io.h"
#include "mdeploy/phase1.h"
#include "mdeploy/phase2.h"
#include "mdeploy/pipeline.h"
#include "mdeploy/verifier.h"
#include "testing.h"

namespace mdeploy {
namespace {

using Clock = std::chrono::steady_clock;

// Collects the first failure; later checks are still counted.
struct Outcome {
  bool ok = true;
  std::string detail;
  std::string note;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
  void expect(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

solver::Budget seconds(double s) {
  solver::Budget b;
  b.time_limit = std::chrono::duration<double>(s);
  return b;
}

pipeline::Request fig1_request(pipeline::Mode mode, bool with_initial) {
  auto f = testing::load_fig1();
  pipeline::Request req{f.universe, f.nodes,
                        with_initial ? f.initial : Configuration{}, "MessageReceiver"};
  req.mode = mode;
  req.budget = seconds(60);
  return req;
}

int64_t sum_bounds(const phase1::InstanceBounds& b) {
  int64_t total = 0;
  for (const auto& [_, n] : b) total += n;
  return total;
}

Outcome running_example_counts() {
  Outcome o;
  auto r = pipeline::plan_deployment(fig1_request(pipeline::Mode::kScratch, false));
  o.expect(r.verdict == pipeline::Verdict::kOptimal, "not optimal");
  if (!r.instance_plan) return o;
  const auto& p = *r.instance_plan;
  std::ostringstream got;
  got << "MR=" << p.count("MessageReceiver") << " MA=" << p.count("MessageAnalyzer")
      << " AA=" << p.count("AttachmentAnalyzer");
  o.note = got.str();
  o.expect(got.str() == "MR=1 MA=3 AA=2", "counts " + got.str());
  return o;
}

Outcome oracle_optimality() {
  Outcome o;
  auto f = testing::load_fig1();
  auto r = pipeline::plan_deployment(fig1_request(pipeline::Mode::kScratch, false));
  auto oracle = verifier::brute_force_oracle(f.universe, f.nodes, "MessageReceiver", 8);
  o.expect(r.instance_plan && oracle && r.instance_plan->cost == oracle->cost &&
               oracle->cost == 498,
           "fig1-mini cost differs from the oracle");
  int feasible = 0, infeasible = 0;
  for (uint64_t seed = 1; seed <= 300; ++seed) {
    auto p = gen::random_problem(seed);
    auto bounds = phase1::derive_bounds(p.universe, p.nodes, p.bounds);
    auto s = phase1::solve_phase1(p.universe, p.nodes, p.target, bounds, seconds(30));
    verifier::OracleOptions opts;
    opts.type_caps = bounds;
    auto b = verifier::brute_force_oracle(p.universe, p.nodes, p.target, sum_bounds(bounds),
                                          opts);
    const std::string tag = "seed " + std::to_string(seed);
    if (s.outcome.status != solver::SolveStatus::kOptimal &&
        s.outcome.status != solver::SolveStatus::kUnsat) {
      o.fail(tag + ": solver did not finish");
      continue;
    }
    if (s.plan.has_value() != b.has_value()) {
      o.fail(tag + ": feasibility verdicts differ");
      continue;
    }
    if (b) {
      ++feasible;
      o.expect(s.plan->cost == b->cost, tag + ": cost " + std::to_string(s.plan->cost) +
                                            " vs oracle " + std::to_string(b->cost));
    } else {
      ++infeasible;
    }
  }
  o.note = "fig1-mini 498; " + std::to_string(feasible) + " feasible + " +
           std::to_string(infeasible) + " infeasible random instances";
  o.expect(feasible >= 50, "fewer than 50 feasible random instances");
  return o;
}

// Criteria 3 and 5 share one run over random solvable instances.
struct RandomRun {
  Outcome plans;
  Outcome phase2;
};

RandomRun random_plans() {
  RandomRun run;
  std::set<uint64_t> seen;
  int replays = 0;
  for (uint64_t seed = 1; seen.size() < 250; ++seed) {
    uint64_t used = 0;
    auto p = gen::random_solvable(seed, {}, &used);
    if (!seen.insert(used).second) continue;
    const std::string tag = "seed " + std::to_string(used);

    auto bounds = phase1::derive_bounds(p.universe, p.nodes, p.bounds);
    auto r1 = phase1::solve_phase1(p.universe, p.nodes, p.target, bounds, seconds(30));
    if (r1.plan) {
      auto r2 = phase2::solve_phase2(phase2::materialize_instances(*r1.plan), p.universe,
                                     phase2::BindingMetric::none(), seconds(30));
      run.phase2.expect(r2.plan.has_value(), tag + ": Phase 2 unsatisfiable");
    }

    for (auto mode : {pipeline::Mode::kScratch, pipeline::Mode::kIncremental}) {
      pipeline::Request req{p.universe, p.nodes, p.initial, p.target, p.bounds};
      req.mode = mode;
      req.budget = seconds(30);
      try {
        auto r = pipeline::plan_deployment(req);
        if (!r.plan) {
          run.plans.fail(tag + ": no plan");
          continue;
        }
        auto trace = verifier::run_plan(p.initial, *r.plan, p.universe, p.nodes);
        if (!trace.valid()) {
          run.plans.fail(tag + ": " + trace.finding->message);
          continue;
        }
        auto out = verifier::check_problem_output(trace, p.target, p.nodes);
        run.plans.expect(out.has_target, tag + ": target missing");
        ++replays;
      } catch (const std::exception& e) {
        run.plans.fail(tag + ": " + e.what());
      }
    }
  }
  run.plans.note = std::to_string(seen.size()) + " instances, " + std::to_string(replays) +
                   " valid replays";
  run.phase2.note = std::to_string(seen.size()) + " Phase 1 solutions";
  return run;
}

Outcome incremental_reproduction() {
  Outcome o;
  auto r = pipeline::plan_deployment(fig1_request(pipeline::Mode::kIncremental, true));
  if (!r.plan) {
    o.fail("no plan");
    return o;
  }
  int news = 0, binds = 0, other = 0;
  for (const auto& a : r.plan->actions) {
    if (std::holds_alternative<NewAction>(a)) {
      ++news;
    } else if (std::holds_alternative<BindAction>(a)) {
      ++binds;
    } else {
      ++other;
    }
  }
  o.note = std::to_string(news) + " new + " + std::to_string(binds) + " bind";
  o.expect(news == 3 && binds == 2 && other == 0, "plan is " + o.note);
  o.expect(r.trace && r.trace->valid(), "replay invalid");
  return o;
}

Outcome load_balancer() {
  Outcome o;
  for (int k : {1, 3, 5}) {
    auto r = phase2::solve_phase2(testing::lb_instances(k), testing::lb_universe(),
                                  phase2::BindingMetric::max_bindings(), seconds(10));
    const int got = r.plan ? static_cast<int>(r.plan->bindings.size()) : -1;
    o.expect(r.outcome.status == solver::SolveStatus::kOptimal && got == k,
             "k=" + std::to_string(k) + " gave " + std::to_string(got));
    o.note += (o.note.empty() ? "" : ", ") + std::to_string(k) + "->" + std::to_string(got);
  }
  return o;
}

Outcome gadgets() {
  Outcome o;
  const std::vector<int64_t> s1{1, 2, 3}, s2{1, 1, 1};
  auto a = gen::partition_min_abs_objective(gen::partition(s1), seconds(10));
  auto b = gen::partition_min_abs_objective(gen::partition(s2), seconds(10));
  o.expect(a == 0 && gen::partition_min_difference(s1) == 0, "partition {1,2,3}");
  o.expect(b == 1 && gen::partition_min_difference(s2) == 1, "partition {1,1,1}");

  auto bp = gen::binpack({3, 3, 3}, 6);
  pipeline::Request req{bp.universe, bp.nodes, {}, bp.target, bp.bounds};
  req.budget = seconds(10);
  auto r = pipeline::plan_deployment(req);
  const auto bounds = phase1::derive_bounds(bp.universe, bp.nodes, bp.bounds);
  verifier::OracleOptions opts;
  opts.type_caps = bounds;
  auto oracle = verifier::brute_force_oracle(bp.universe, bp.nodes, bp.target,
                                             sum_bounds(bounds), opts);
  const int64_t cost = r.instance_plan ? r.instance_plan->cost : -1;
  o.expect(r.verdict == pipeline::Verdict::kOptimal && cost == 2 && oracle &&
               oracle->cost == 2,
           "binpack cost " + std::to_string(cost));
  o.note = "partition 0 and 1, binpack " + std::to_string(cost) + " bins";
  return o;
}

Outcome desk_scale() {
  Outcome o;
  pipeline::Request req;
  req.universe = io::parse_universe(
      io::read_json_file(testing::fixture_path("email-pipeline/universe.json")));
  req.nodes =
      io::parse_nodes(io::read_json_file(testing::fixture_path("email-pipeline/nodes.json")));
  req.target = "EmailPipeline";
  req.budget = seconds(300);
  req.budget.threads = 1;
  auto r = pipeline::plan_deployment(req);
  o.expect(r.verdict == pipeline::Verdict::kOptimal, "verdict " +
                                                         std::string(to_string(r.verdict)));
  if (r.plan) {
    auto trace = verifier::run_plan({}, *r.plan, req.universe, req.nodes);
    o.expect(trace.valid(), "replay invalid");
    o.note = std::to_string(req.universe.size()) + " types, " +
             std::to_string(req.nodes.size()) + " nodes, cost " +
             std::to_string(r.instance_plan->cost) + ", " +
             std::to_string(r.plan->actions.size()) + " actions";
  }
  return o;
}

Outcome semantics_conformance() {
  Outcome o;
  int accepted = 0;
  constexpr int kSequences = 1000;
  for (int seq = 0; seq < kSequences && o.ok; ++seq) {
    auto p = gen::random_problem(5000 + seq);
    const auto& u = p.universe;
    std::mt19937_64 rng(seq);
    Configuration config = seq % 2 ? p.initial : Configuration{};
    for (int step = 0; step < 25; ++step) {
      const Action a = gen::random_action(config, u, p.nodes, rng);
      const Configuration before = config;
      Configuration next;
      try {
        next = apply_action(config, a, u);
      } catch (const ActionError&) {
        o.expect(config == before, "rejected action mutated its input");
        continue;
      }
      ++accepted;
      const std::string tag = "sequence " + std::to_string(seq) + ": " + describe(a);
      o.expect(config == before, tag + " mutated its input");
      const auto* created = std::get_if<NewAction>(&a);
      if (created == nullptr || p.nodes.find(created->node) != nullptr) {
        try {
          validate_configuration(next, u, p.nodes);
        } catch (const InputError& e) {
          o.fail(tag + ": " + e.what());
        }
      }
      if (const auto* bind = std::get_if<BindAction>(&a)) {
        o.expect(apply_action(next, UnbindAction{bind->binding}, u) == config,
                 tag + ": unbind does not invert bind");
      } else if (const auto* unbind = std::get_if<UnbindAction>(&a)) {
        o.expect(apply_action(next, BindAction{unbind->binding}, u) == config,
                 tag + ": bind does not invert unbind");
      } else if (created != nullptr) {
        o.expect(apply_action(next, DelAction{created->id}, u) == config,
                 tag + ": del does not invert new");
      }
      if (check_correct(next, u, p.nodes).correct()) {
        o.expect(check_provisional(next, u, p.nodes).violations.empty(),
                 tag + ": correct but not provisionally correct");
      }
      config = std::move(next);
    }
  }
  // Conflict asymmetry: a lone self-conflicting provider is correct.
  MicroserviceType t = testing::make_type("T");
  t.provides.emplace("p", Arity::infinite());
  t.conflicts = {"p"};
  Configuration lone;
  lone.instances = {{"t", {"T", "n"}}};
  o.expect(check_correct(lone, Universe({t}), NodePool({Node{"n", {}, 1}})).correct(),
           "lone self-conflicting instance reported incorrect");
  o.note = std::to_string(kSequences) + " sequences, " + std::to_string(accepted) +
           " accepted actions";
  return o;
}

struct Criterion {
  int number;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace mdeploy

int main() {
  using namespace mdeploy;
  RandomRun random_run;
  bool random_done = false;
  auto random_once = [&]() -> RandomRun& {
    if (!random_done) random_run = random_plans();
    random_done = true;
    return random_run;
  };
  const std::vector<Criterion> criteria{
      {1, "running-example counts", 1, running_example_counts},
      {2, "oracle optimality", 120, oracle_optimality},
      {3, "plan validity", 300, [&] { return random_once().plans; }},
      {4, "incremental plan reproduction", 1, incremental_reproduction},
      // Measured inside criterion 3's run.
      {5, "Phase 2 feasibility", 300, [&] { return random_once().phase2; }},
      {6, "load-balancer metric", 1, load_balancer},
      {7, "complexity gadgets", 30, gadgets},
      {8, "desk-scale performance", 300, desk_scale},
      {9, "semantics conformance", 60, semantics_conformance},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (secs > c.limit_seconds) {
      o.fail("took " + std::to_string(secs) + " s, limit " +
             std::to_string(c.limit_seconds) + " s");
    }
    failed += o.ok ? 0 : 1;
    std::printf("%s criterion %d: %s (%.2f s) %s%s\n", o.ok ? "PASS" : "FAIL", c.number,
                c.name.c_str(), secs, o.ok ? o.note.c_str() : "-- ",
                o.ok ? "" : o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
