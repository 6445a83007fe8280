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

#include "mdeploy/pipeline.h"

#include <algorithm>
#include <chrono>

#include "mdeploy/phase3.h"

namespace mdeploy::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

struct Prematch {
  // Materialized instances, with reused ones carrying their initial ids.
  std::vector<phase2::PlacedInstance> instances;
  phase2::EncodeOptions options;
};

// Gives each fresh instance the id of an initial instance of the same type
// on the same node, when that initial instance's strong providers are kept
// too. The kept strong bindings are pinned for Phase 2 and the kept weak
// bindings preferred.
Prematch prematch(const std::vector<phase2::PlacedInstance>& fresh,
                  const Configuration& initial, const Universe& universe) {
  const auto order = phase3::strong_topological_order(universe);
  std::map<TypeName, std::size_t> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  std::map<std::pair<TypeName, NodeName>, std::set<InstanceId>> pool;
  for (const auto& [id, pl] : initial.instances) pool[{pl.type, pl.node}].insert(id);
  auto strong_providers = [&](const InstanceId& id) {
    std::set<InstanceId> out;
    const auto& t = universe.at(initial.instances.at(id).type);
    for (const auto& b : initial.bindings) {
      if (b.requirer == id && t.requires_strong(b.interface)) out.insert(b.provider);
    }
    return out;
  };

  std::vector<std::size_t> order_idx(fresh.size());
  for (std::size_t i = 0; i < fresh.size(); ++i) order_idx[i] = i;
  std::stable_sort(order_idx.begin(), order_idx.end(), [&](auto a, auto b) {
    return rank.at(fresh[a].type) < rank.at(fresh[b].type);
  });

  std::set<InstanceId> kept;
  std::map<std::size_t, InstanceId> renamed;
  for (auto i : order_idx) {
    auto group = pool.find({fresh[i].type, fresh[i].node});
    if (group == pool.end()) continue;
    for (const auto& cand : group->second) {
      const auto providers = strong_providers(cand);
      if (std::includes(kept.begin(), kept.end(), providers.begin(), providers.end())) {
        renamed[i] = cand;
        kept.insert(cand);
        group->second.erase(cand);
        break;
      }
    }
  }

  Prematch out;
  std::set<InstanceId> taken;
  for (const auto& [id, _] : initial.instances) taken.insert(id);
  for (const auto& inst : fresh) taken.insert(inst.id);
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    phase2::PlacedInstance inst = fresh[i];
    if (auto it = renamed.find(i); it != renamed.end()) {
      inst.id = it->second;
    } else if (initial.instances.contains(inst.id)) {
      for (int64_t k = 1;; ++k) {
        InstanceId id = inst.type + "#" + std::to_string(k);
        if (taken.insert(id).second) {
          inst.id = id;
          break;
        }
      }
    }
    out.instances.push_back(std::move(inst));
  }

  for (const auto& req : out.instances) {
    if (!kept.contains(req.id)) continue;
    const auto& rt = universe.at(req.type);
    for (const auto& [p, _] : rt.strong_requires) {
      for (const auto& prov : out.instances) {
        if (prov.id == req.id || !universe.at(prov.type).provides_interface(p)) continue;
        const Binding b{p, req.id, prov.id};
        out.options.pinned[b] = initial.bindings.contains(b) ? 1 : 0;
      }
    }
    for (const auto& b : initial.bindings) {
      if (b.requirer == req.id && rt.requires_weak(b.interface) &&
          kept.contains(b.provider)) {
        out.options.preferred.insert(b);
      }
    }
  }
  return out;
}

solver::Budget remaining(const solver::Budget& budget, Clock::time_point start) {
  solver::Budget rest = budget;
  rest.time_limit -= Clock::now() - start;
  // Phase 2 is usually quick; never leave it with nothing.
  const std::chrono::duration<double> floor(1.0);
  if (rest.time_limit < floor) rest.time_limit = std::min(floor, budget.time_limit);
  return rest;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kOptimal:
      return "optimal";
    case Verdict::kNo:
      return "no";
    case Verdict::kFeasibleUnproven:
      return "feasible";
    case Verdict::kTimeoutNoSolution:
      return "timeout";
  }
  return "?";
}

Result plan_deployment(const Request& request) {
  const auto start = Clock::now();
  const auto& universe = request.universe;
  const auto& nodes = request.nodes;
  if (auto cycle = check_universe(universe)) {
    std::string msg = "strong dependency cycle:";
    for (const auto& t : *cycle) msg += " " + t;
    throw InputError(msg);
  }
  if (universe.find(request.target) == nullptr) {
    throw InputError("unknown target type " + request.target);
  }
  phase2::validate_metric(request.metric, universe);
  const auto initial_report = check_provisional(request.initial, universe, nodes);
  if (!initial_report.provisionally_correct()) {
    throw InputError("initial configuration is not provisionally correct: " +
                     to_string(*initial_report.first_provisional_violation()));
  }

  Result result;
  result.bounds = phase1::derive_bounds(universe, nodes, request.bound_overrides);
  const bool incremental =
      request.mode == Mode::kIncremental && !request.initial.instances.empty();
  if (request.export_models) {
    result.phase1_model = solver::export_model(
        phase1::encode_phase1(universe, nodes, request.target, result.bounds,
                              request.phase1_options)
            .model);
  }
  auto p1 = phase1::solve_phase1(universe, nodes, request.target, result.bounds,
                                 request.budget,
                                 incremental ? &request.initial : nullptr,
                                 request.phase1_options);
  result.phase1_outcome = p1.outcome;
  switch (p1.outcome.status) {
    case solver::SolveStatus::kUnsat:
      result.verdict = Verdict::kNo;
      return result;
    case solver::SolveStatus::kTimeoutNoSolution:
      result.verdict = Verdict::kTimeoutNoSolution;
      return result;
    default:
      break;
  }
  result.instance_plan = *p1.plan;
  if (auto errors = phase1::validate_instance_plan(*p1.plan, universe, nodes,
                                                   request.target);
      !errors.empty()) {
    throw InternalError("Phase 1 plan fails validation: " + errors.front());
  }

  auto fresh = phase2::materialize_instances(*p1.plan);
  phase2::EncodeOptions p2_options;
  if (incremental) {
    auto pre = prematch(fresh, request.initial, universe);
    result.instances = std::move(pre.instances);
    p2_options = std::move(pre.options);
  } else {
    result.instances = std::move(fresh);
  }
  if (request.export_models) {
    result.phase2_model = solver::export_model(
        phase2::encode_phase2(result.instances, universe, request.metric, p2_options)
            .model);
  }
  auto p2 = phase2::solve_phase2(result.instances, universe, request.metric,
                                 remaining(request.budget, start), p2_options);
  if (p2.outcome.status == solver::SolveStatus::kUnsat && !p2_options.pinned.empty()) {
    // Keeping every strong binding is impossible; let the reuse step drop
    // the instances concerned instead.
    p2_options.pinned.clear();
    p2 = phase2::solve_phase2(result.instances, universe, request.metric,
                              remaining(request.budget, start), p2_options);
  }
  result.phase2_outcome = p2.outcome;
  if (p2.outcome.status == solver::SolveStatus::kUnsat) {
    throw InternalError("Phase 2 is infeasible for a Phase 1 solution");
  }
  if (!p2.plan) {
    result.verdict = Verdict::kTimeoutNoSolution;
    return result;
  }
  result.binding_plan = *p2.plan;
  result.target_config =
      phase3::assemble_target(result.instances, *p2.plan, universe, nodes);

  if (incremental) {
    result.plan = phase3::synthesize_incremental(request.initial, result.target_config,
                                                 universe, nodes);
  } else {
    result.plan = phase3::synthesize_scratch(request.initial, result.target_config,
                                             universe, nodes);
  }
  result.trace = verifier::run_plan(request.initial, *result.plan, universe, nodes);
  if (!result.trace->valid()) {
    throw InternalError("synthesized plan fails replay at step " +
                        std::to_string(*result.trace->violation_step) + ": " +
                        result.trace->finding->message);
  }
  const auto output =
      verifier::check_problem_output(*result.trace, request.target, nodes);
  if (!output.has_target || output.final_cost != p1.plan->cost) {
    throw InternalError("synthesized plan does not reach the planned configuration");
  }

  const bool metric_proven = request.metric.kind == phase2::BindingMetric::Kind::kNone ||
                             p2.outcome.status == solver::SolveStatus::kOptimal;
  result.verdict = p1.outcome.status == solver::SolveStatus::kOptimal && metric_proven
                       ? Verdict::kOptimal
                       : Verdict::kFeasibleUnproven;
  return result;
}

io::Json summarize(const Request& request, const Result& result) {
  io::Json s = io::Json::object();
  s["status"] = to_string(result.verdict);
  s["target"] = request.target;
  s["mode"] = request.mode == Mode::kScratch ? "scratch" : "incremental";
  s["phase1"] = {{"status", solver::to_string(result.phase1_outcome.status)},
                 {"search_nodes", result.phase1_outcome.stats.nodes},
                 {"seconds", result.phase1_outcome.stats.seconds}};
  if (result.instance_plan) {
    const auto& plan = *result.instance_plan;
    s["cost"] = plan.cost;
    io::Json counts = io::Json::object();
    for (const auto& [t, n] : plan.total) {
      if (n > 0) counts[t] = n;
    }
    s["counts"] = counts;
    io::Json placements = io::Json::array();
    for (const auto& [key, n] : plan.placement) {
      placements.push_back({{"type", key.first}, {"node", key.second}, {"count", n}});
    }
    s["placements"] = placements;
    s["used_nodes"] = plan.used_nodes;
    s["phase2"] = {{"status", solver::to_string(result.phase2_outcome.status)},
                   {"search_nodes", result.phase2_outcome.stats.nodes},
                   {"seconds", result.phase2_outcome.stats.seconds}};
  }
  if (result.binding_plan) {
    s["bindings"] = result.binding_plan->bindings.size();
    if (request.metric.kind != phase2::BindingMetric::Kind::kNone) {
      s["metric_value"] =
          phase2::metric_value(request.metric, *result.binding_plan, result.instances);
    }
  }
  if (result.plan) s["actions"] = result.plan->actions.size();
  return s;
}

}  // namespace mdeploy::pipeline
