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

#include "mdeploy/phase2.h"

#include <utility>

namespace mdeploy::phase2 {

using solver::LinearConstraint;
using solver::Relation;
using solver::Term;

namespace {

std::map<InstanceId, const PlacedInstance*> index_instances(
    const std::vector<PlacedInstance>& instances) {
  std::map<InstanceId, const PlacedInstance*> out;
  for (const auto& inst : instances) {
    if (!out.emplace(inst.id, &inst).second) {
      throw InputError("duplicate instance id " + inst.id);
    }
  }
  return out;
}

// Coefficient of one binding in the metric's linear form.
int64_t metric_weight(const BindingMetric& metric, const Binding& b,
                      const PlacedInstance& req, const PlacedInstance& prov) {
  switch (metric.kind) {
    case BindingMetric::Kind::kNone:
      return 0;
    case BindingMetric::Kind::kMinCrossNode:
      return req.node != prov.node ? 1 : 0;
    case BindingMetric::Kind::kMaxBindings:
      return 1;
    case BindingMetric::Kind::kWeighted: {
      auto it = metric.weights.find({b.interface, req.type, prov.type});
      return it == metric.weights.end() ? 0 : it->second;
    }
  }
  return 0;
}

}  // namespace

void validate_metric(const BindingMetric& metric, const Universe& universe) {
  if (metric.kind != BindingMetric::Kind::kWeighted) return;
  const auto interfaces = interfaces_of(universe);
  for (const auto& [key, _] : metric.weights) {
    const auto& [p, req, prov] = key;
    if (!interfaces.contains(p)) {
      throw InputError("metric weight on unknown interface " + p);
    }
    if (universe.find(req) == nullptr || universe.find(prov) == nullptr) {
      throw InputError("metric weight on unknown type " + req + " or " + prov);
    }
  }
}

std::vector<PlacedInstance> materialize_instances(
    const phase1::InstancePlan& plan) {
  std::vector<PlacedInstance> out;
  // `placement` is ordered by (type, node name), which is the naming order.
  std::map<TypeName, int64_t> next;
  for (const auto& [key, count] : plan.placement) {
    const auto& [type, node] = key;
    for (int64_t i = 0; i < count; ++i) {
      out.push_back({type + "#" + std::to_string(++next[type]), type, node});
    }
  }
  return out;
}

Encoding encode_phase2(const std::vector<PlacedInstance>& instances,
                       const Universe& universe, const BindingMetric& metric,
                       const EncodeOptions& options) {
  validate_metric(metric, universe);
  const auto by_id = index_instances(instances);
  Encoding enc;
  auto& model = enc.model;
  auto& dict = enc.dict;

  // Only pairs where the requirer's type requires p and the provider's type
  // provides it get a variable.
  std::map<std::pair<InstanceId, InterfaceName>, std::vector<Term>> outgoing;
  std::map<std::pair<InstanceId, InterfaceName>, std::vector<Term>> incoming;
  for (const auto& req : instances) {
    const auto& rt = universe.at(req.type);
    std::set<InterfaceName> required;
    for (const auto& [p, _] : rt.strong_requires) required.insert(p);
    for (const auto& [p, _] : rt.weak_requires) required.insert(p);
    for (const auto& p : required) {
      for (const auto& prov : instances) {
        if (prov.id == req.id || !universe.at(prov.type).provides_interface(p)) {
          continue;
        }
        const Binding b{p, req.id, prov.id};
        const auto v =
            model.add_variable("b[" + p + ":" + req.id + ">" + prov.id + "]", 0, 1);
        dict.b[b] = v;
        outgoing[{req.id, p}].push_back({1, v});
        incoming[{prov.id, p}].push_back({1, v});
      }
    }
  }

  for (const auto& prov : instances) {
    for (const auto& [p, arity] : universe.at(prov.type).provides) {
      auto it = incoming.find({prov.id, p});
      if (arity.is_infinite() || it == incoming.end()) continue;
      model.add_linear({it->second, Relation::kLe, arity.value()});
    }
  }
  for (const auto& req : instances) {
    const auto& rt = universe.at(req.type);
    auto emit = [&](const InterfaceName& p, int64_t n) {
      if (n <= 0) return;
      auto it = outgoing.find({req.id, p});
      model.add_linear({it == outgoing.end() ? std::vector<Term>{} : it->second,
                        Relation::kGe, n});
    };
    for (const auto& [p, n] : rt.strong_requires) emit(p, n);
    for (const auto& [p, n] : rt.weak_requires) emit(p, n);
  }

  for (const auto& [b, value] : options.pinned) {
    auto it = dict.b.find(b);
    if (it != dict.b.end()) {
      model.add_linear({{{1, it->second}}, Relation::kEq, value});
    } else if (value != 0) {
      model.add_linear({{}, Relation::kGe, 1});
    }
  }

  dict.metric_objective.sense = metric.sense;
  for (const auto& [b, v] : dict.b) {
    const int64_t w = metric_weight(metric, b, *by_id.at(b.requirer),
                                    *by_id.at(b.provider));
    if (w != 0) dict.metric_objective.terms.push_back({w, v});
  }
  if (metric.kind == BindingMetric::Kind::kNone && !options.preferred.empty()) {
    solver::Objective pref{solver::Sense::kMinimize, {}};
    for (const auto& [b, v] : dict.b) {
      pref.terms.push_back({options.preferred.contains(b) ? -1 : 1, v});
    }
    model.set_objective(std::move(pref));
  } else {
    model.set_objective(dict.metric_objective);
  }
  return enc;
}

BindingPlan extract_binding_plan(const solver::SolveOutcome& outcome,
                                 const Dictionary& dict,
                                 const std::vector<PlacedInstance>& instances,
                                 const Universe& universe) {
  if (!outcome.has_solution()) {
    throw InternalError("no Phase 2 solution to extract");
  }
  const auto by_id = index_instances(instances);
  BindingPlan plan;
  for (const auto& [b, v] : dict.b) {
    if (outcome.value(v) == 0) continue;
    auto req = by_id.find(b.requirer);
    auto prov = by_id.find(b.provider);
    if (b.requirer == b.provider || req == by_id.end() || prov == by_id.end() ||
        !universe.at(req->second->type).requires_interface(b.interface) ||
        !universe.at(prov->second->type).provides_interface(b.interface)) {
      throw InternalError("invalid binding on " + b.interface + " from " +
                          b.requirer + " to " + b.provider);
    }
    plan.bindings.insert(b);
  }
  return plan;
}

int64_t metric_value(const BindingMetric& metric, const BindingPlan& plan,
                     const std::vector<PlacedInstance>& instances) {
  const auto by_id = index_instances(instances);
  int64_t total = 0;
  for (const auto& b : plan.bindings) {
    total += metric_weight(metric, b, *by_id.at(b.requirer),
                           *by_id.at(b.provider));
  }
  return total;
}

Result solve_phase2(const std::vector<PlacedInstance>& instances,
                    const Universe& universe, const BindingMetric& metric,
                    const solver::Budget& budget,
                    const EncodeOptions& options) {
  Encoding enc = encode_phase2(instances, universe, metric, options);
  Result result;
  result.outcome = solver::solve(enc.model, budget);
  if (result.outcome.has_solution()) {
    result.plan =
        extract_binding_plan(result.outcome, enc.dict, instances, universe);
  }
  return result;
}

}  // namespace mdeploy::phase2
