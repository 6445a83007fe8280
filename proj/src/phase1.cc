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

#include "mdeploy/phase1.h"

#include <algorithm>
#include <chrono>
#include <limits>
#include <utility>

namespace mdeploy::phase1 {

using solver::GuardSense;
using solver::LinearConstraint;
using solver::Relation;
using solver::Term;
using solver::VarId;

namespace {

// How many instances of `t` fit on `node` alone, or nullopt if `t` consumes
// nothing.
std::optional<int64_t> fit_count(const MicroserviceType& t, const Node& node) {
  std::optional<int64_t> fit;
  for (const auto& [r, need] : t.resources) {
    if (need <= 0) continue;
    const int64_t k = node.resource(r) / need;
    fit = fit ? std::min(*fit, k) : k;
  }
  return fit;
}

std::set<ResourceName> demanded_resources(const Universe& universe) {
  std::set<ResourceName> out;
  for (const auto& [_, t] : universe.types()) {
    for (const auto& [r, q] : t.resources) {
      if (q > 0) out.insert(r);
    }
  }
  return out;
}

int64_t saturating_mul(int64_t a, int64_t b) {
  constexpr int64_t kCap = std::numeric_limits<int64_t>::max() / 8;
  if (a == 0 || b == 0) return 0;
  if (a > kCap / b) return kCap;
  return a * b;
}

}  // namespace

InstanceBounds derive_bounds(const Universe& universe, const NodePool& nodes,
                             const InstanceBounds& overrides) {
  for (const auto& [name, bound] : overrides) {
    if (universe.find(name) == nullptr) {
      throw InputError("bound given for unknown type " + name);
    }
    if (bound < 0) throw InputError("negative bound for type " + name);
  }
  InstanceBounds out;
  for (const auto& [name, t] : universe.types()) {
    if (auto it = overrides.find(name); it != overrides.end()) {
      out[name] = it->second;
      continue;
    }
    if (!t.consumes_resources()) {
      throw InputError("type " + name +
                       " consumes no resources, so its instance count is "
                       "unbounded; pass --bound " + name + "=N");
    }
    int64_t bound = 0;
    for (const auto& node : nodes.nodes()) bound += *fit_count(t, node);
    out[name] = bound;
  }
  return out;
}

Encoding encode_phase1(const Universe& universe, const NodePool& nodes,
                       const TypeName& target, const InstanceBounds& bounds,
                       const EncodeOptions& options) {
  if (auto cycle = check_universe(universe)) {
    std::string msg = "universe is not well-formed: strong cycle";
    for (const auto& t : *cycle) msg += " " + t;
    throw InputError(msg);
  }
  if (universe.find(target) == nullptr) {
    throw InputError("unknown target type " + target);
  }
  for (const auto& [name, _] : universe.types()) {
    if (!bounds.contains(name)) {
      throw InputError("no instance bound for type " + name);
    }
  }

  Encoding enc;
  auto& model = enc.model;
  auto& dict = enc.dict;
  const auto& types = universe.types();

  // Branching: node choice first (it drives the cost), then the smallest
  // instance counts, then fill each chosen node as far as it goes.
  for (const auto& node : nodes.nodes()) {
    dict.used[node.name] = model.add_variable("used[" + node.name + "]", 0, 1);
  }
  for (const auto& [name, t] : types) {
    const int64_t bound = bounds.at(name);
    for (const auto& node : nodes.nodes()) {
      const int64_t hi = std::min(bound, fit_count(t, node).value_or(bound));
      if (hi <= 0) continue;
      const VarId v =
          model.add_variable("place[" + name + "@" + node.name + "]", 0, hi);
      model.set_hint(v, {2, solver::ValueOrder::kHighFirst});
      dict.place[{name, node.name}] = v;
    }
  }
  for (const auto& [name, _] : types) {
    dict.inst[name] =
        model.add_variable("inst[" + name + "]", 0, bounds.at(name));
    model.set_hint(dict.inst[name], {1, solver::ValueOrder::kLowFirst});
  }
  // bind(p, T, T') only where T requires p and T' provides p; every other
  // combination is identically zero.
  for (const auto& [req_name, req] : types) {
    for (const auto& [prov_name, prov] : types) {
      for (const auto& [p, arity] : prov.provides) {
        if (!req.requires_interface(p)) continue;
        const int64_t b_req = bounds.at(req_name);
        const int64_t b_prov = bounds.at(prov_name);
        int64_t hi = req_name == prov_name
                         ? saturating_mul(b_req, std::max<int64_t>(0, b_req - 1))
                         : saturating_mul(b_req, b_prov);
        if (!arity.is_infinite()) {
          hi = std::min(hi, saturating_mul(arity.value(), b_prov));
        }
        const VarId v = model.add_variable(
            "bind[" + p + ":" + req_name + ">" + prov_name + "]", 0, hi);
        model.set_hint(v, {3, solver::ValueOrder::kObjective});
        dict.bind[{p, req_name, prov_name}] = v;
      }
    }
  }

  auto bind_terms_out = [&](const InterfaceName& p, const TypeName& req) {
    std::vector<Term> terms;
    for (const auto& [key, v] : dict.bind) {
      if (std::get<0>(key) == p && std::get<1>(key) == req) {
        terms.push_back({1, v});
      }
    }
    return terms;
  };
  auto bind_terms_in = [&](const InterfaceName& p, const TypeName& prov) {
    std::vector<Term> terms;
    for (const auto& [key, v] : dict.bind) {
      if (std::get<0>(key) == p && std::get<2>(key) == prov) {
        terms.push_back({1, v});
      }
    }
    return terms;
  };

  // Enough outgoing bindings for every requirement, strong or weak.
  for (const auto& [name, t] : types) {
    auto emit = [&](const InterfaceName& p, int64_t arity) {
      LinearConstraint c{bind_terms_out(p, name), Relation::kGe, 0};
      c.terms.push_back({-arity, dict.inst.at(name)});
      model.add_linear(std::move(c));
    };
    for (const auto& [p, n] : t.strong_requires) emit(p, n);
    for (const auto& [p, n] : t.weak_requires) emit(p, n);
  }
  // Incoming bindings within the aggregate provided capacity; an unbounded
  // port only needs one active instance.
  for (const auto& [name, t] : types) {
    for (const auto& [p, arity] : t.provides) {
      auto in = bind_terms_in(p, name);
      if (in.empty()) continue;
      if (arity.is_infinite()) {
        model.add_implication({dict.inst.at(name), GuardSense::kIsZero,
                               LinearConstraint{in, Relation::kLe, 0}});
      } else {
        LinearConstraint c{{{arity.value(), dict.inst.at(name)}},
                           Relation::kGe, 0};
        for (const auto& term : in) c.terms.push_back({-1, term.var});
        model.add_linear(std::move(c));
      }
    }
  }

  model.add_linear({{{1, dict.inst.at(target)}}, Relation::kGe, 1});

  for (const auto& [name, t] : types) {
    for (const auto& p : t.conflicts) {
      for (const auto& [other_name, other] : types) {
        if (other_name == name || !other.provides_interface(p)) continue;
        model.add_implication(
            {dict.inst.at(name), GuardSense::kIsPositive,
             LinearConstraint{{{1, dict.inst.at(other_name)}}, Relation::kLe,
                              0}});
      }
      if (t.provides_interface(p)) {
        model.add_linear({{{1, dict.inst.at(name)}}, Relation::kLe, 1});
      }
    }
  }

  // Enough distinct instance pairs for the aggregate bindings.
  for (const auto& [key, v] : dict.bind) {
    const auto& [p, req, prov] = key;
    if (req == prov) {
      model.add_product_bound({v, dict.inst.at(req), dict.inst.at(req), -1});
    } else {
      model.add_product_bound({v, dict.inst.at(req), dict.inst.at(prov), 0});
    }
  }

  // Placement: totals, node resources, node usage.
  for (const auto& [name, _] : types) {
    LinearConstraint c{{{1, dict.inst.at(name)}}, Relation::kEq, 0};
    for (const auto& node : nodes.nodes()) {
      if (auto it = dict.place.find({name, node.name}); it != dict.place.end()) {
        c.terms.push_back({-1, it->second});
      }
    }
    model.add_linear(std::move(c));
  }
  const auto resources = demanded_resources(universe);
  for (const auto& node : nodes.nodes()) {
    for (const auto& r : resources) {
      LinearConstraint c{{}, Relation::kLe, node.resource(r)};
      for (const auto& [name, t] : types) {
        auto it = dict.place.find({name, node.name});
        if (it == dict.place.end() || t.resource(r) == 0) continue;
        c.terms.push_back({t.resource(r), it->second});
      }
      if (!c.terms.empty()) model.add_linear(std::move(c));
    }
  }
  auto node_terms = [&](const NodeName& o) {
    std::vector<Term> terms;
    for (const auto& [name, _] : types) {
      if (auto it = dict.place.find({name, o}); it != dict.place.end()) {
        terms.push_back({1, it->second});
      }
    }
    return terms;
  };
  for (const auto& node : nodes.nodes()) {
    auto terms = node_terms(node.name);
    const VarId used = dict.used.at(node.name);
    model.add_implication(
        {used, GuardSense::kIsZero, LinearConstraint{terms, Relation::kLe, 0}});
    model.add_implication({used, GuardSense::kIsPositive,
                           LinearConstraint{terms, Relation::kGe, 1}});
  }

  if (options.symmetry_breaking) {
    // Implied aggregate capacity: total demand fits in the used nodes.
    for (const auto& r : resources) {
      LinearConstraint c{{}, Relation::kLe, 0};
      for (const auto& [name, t] : types) {
        if (t.resource(r) > 0) c.terms.push_back({t.resource(r), dict.inst.at(name)});
      }
      for (const auto& node : nodes.nodes()) {
        if (node.resource(r) > 0) {
          c.terms.push_back({-node.resource(r), dict.used.at(node.name)});
        }
      }
      model.add_linear(std::move(c));
    }
    // Interchangeable nodes are used in pool order and loaded in
    // non-increasing instance counts. Nodes that already host instances are
    // told apart by that and never grouped.
    std::set<NodeName> occupied;
    if (options.reuse_hint != nullptr) {
      for (const auto& [_, pl] : options.reuse_hint->instances) {
        occupied.insert(pl.node);
      }
    }
    std::map<std::pair<ResourceMap, int64_t>, NodeName> last_of_class;
    for (const auto& node : nodes.nodes()) {
      if (occupied.contains(node.name)) continue;
      ResourceMap key_res;
      for (const auto& [r, q] : node.resources) {
        if (q != 0) key_res[r] = q;
      }
      auto key = std::make_pair(std::move(key_res), node.cost);
      auto it = last_of_class.find(key);
      if (it != last_of_class.end()) {
        const NodeName& prev = it->second;
        model.add_linear({{{1, dict.used.at(prev)}, {-1, dict.used.at(node.name)}},
                          Relation::kGe,
                          0});
        LinearConstraint load{node_terms(prev), Relation::kGe, 0};
        for (const auto& t : node_terms(node.name)) {
          load.terms.push_back({-1, t.var});
        }
        if (!load.terms.empty()) model.add_linear(std::move(load));
        it->second = node.name;
      } else {
        last_of_class.emplace(std::move(key), node.name);
      }
    }
  }

  solver::Objective obj{solver::Sense::kMinimize, {}};
  for (const auto& node : nodes.nodes()) {
    if (node.cost != 0) obj.terms.push_back({node.cost, dict.used.at(node.name)});
  }
  model.set_objective(std::move(obj));
  return enc;
}

InstancePlan extract_instance_plan(const solver::SolveOutcome& outcome,
                                   const Dictionary& dict,
                                   const NodePool& nodes) {
  if (!outcome.has_solution()) {
    throw InternalError("no Phase 1 solution to extract");
  }
  InstancePlan plan;
  for (const auto& [name, v] : dict.inst) plan.total[name] = outcome.value(v);
  std::map<TypeName, int64_t> placed;
  for (const auto& [key, v] : dict.place) {
    const int64_t k = outcome.value(v);
    if (k == 0) continue;
    plan.placement[key] = k;
    placed[key.first] += k;
    plan.used_nodes.insert(key.second);
  }
  for (const auto& [name, total] : plan.total) {
    if (placed[name] != total) {
      throw InternalError("placement of " + name + " sums to " +
                          std::to_string(placed[name]) + ", expected " +
                          std::to_string(total));
    }
  }
  for (const auto& [key, v] : dict.bind) {
    const int64_t k = outcome.value(v);
    if (k != 0) plan.aggregate_bindings[key] = k;
  }
  for (const auto& [node, v] : dict.used) {
    if ((outcome.value(v) == 1) != plan.used_nodes.contains(node)) {
      throw InternalError("used flag of node " + node +
                          " disagrees with its placements");
    }
  }
  for (const auto& node : plan.used_nodes) plan.cost += nodes.at(node).cost;
  return plan;
}

std::vector<std::string> validate_instance_plan(const InstancePlan& plan,
                                                const Universe& universe,
                                                const NodePool& nodes,
                                                const TypeName& target) {
  std::vector<std::string> errors;
  const auto& types = universe.types();
  auto agg = [&](const InterfaceName& p, const TypeName& a, const TypeName& b) {
    auto it = plan.aggregate_bindings.find({p, a, b});
    return it == plan.aggregate_bindings.end() ? int64_t{0} : it->second;
  };

  for (const auto& [name, k] : plan.total) {
    if (universe.find(name) == nullptr) errors.push_back("unknown type " + name);
    if (k < 0) errors.push_back("negative count for " + name);
  }
  for (const auto& [key, k] : plan.aggregate_bindings) {
    const auto& [p, req, prov] = key;
    const auto* rt = universe.find(req);
    const auto* pt = universe.find(prov);
    if (rt == nullptr || pt == nullptr || !rt->requires_interface(p) ||
        !pt->provides_interface(p)) {
      errors.push_back("bindings on " + p + " from " + req + " to " + prov +
                       " are not allowed");
      continue;
    }
    const int64_t limit = req == prov
                              ? plan.count(req) * (plan.count(req) - 1)
                              : plan.count(req) * plan.count(prov);
    if (k > limit) {
      errors.push_back("not enough distinct pairs for " + std::to_string(k) +
                       " bindings on " + p + " from " + req + " to " + prov);
    }
  }

  for (const auto& [name, t] : types) {
    const int64_t count = plan.count(name);
    auto check_req = [&](const InterfaceName& p, int64_t n) {
      int64_t have = 0;
      for (const auto& [other, _] : types) have += agg(p, name, other);
      if (have < n * count) {
        errors.push_back(name + " needs " + std::to_string(n * count) +
                         " bindings on " + p + ", has " +
                         std::to_string(have));
      }
    };
    for (const auto& [p, n] : t.strong_requires) check_req(p, n);
    for (const auto& [p, n] : t.weak_requires) check_req(p, n);
    for (const auto& [p, arity] : t.provides) {
      int64_t in = 0;
      for (const auto& [other, _] : types) in += agg(p, other, name);
      if (arity.is_infinite() ? (count == 0 && in > 0)
                              : in > arity.value() * count) {
        errors.push_back(name + " cannot serve " + std::to_string(in) +
                         " bindings on " + p);
      }
    }
    for (const auto& p : t.conflicts) {
      if (count == 0) continue;
      for (const auto& [other_name, other] : types) {
        if (other_name != name && other.provides_interface(p) &&
            plan.count(other_name) > 0) {
          errors.push_back(name + " conflicts on " + p + " with " +
                           other_name);
        }
      }
      if (t.provides_interface(p) && count > 1) {
        errors.push_back(name + " conflicts with itself on " + p);
      }
    }
  }
  if (plan.count(target) < 1) errors.push_back("no instance of " + target);

  std::map<TypeName, int64_t> placed;
  std::map<NodeName, ResourceMap> load;
  std::set<NodeName> used;
  for (const auto& [key, k] : plan.placement) {
    const auto& [name, node] = key;
    if (nodes.find(node) == nullptr || universe.find(name) == nullptr) {
      errors.push_back("placement references unknown " + name + "@" + node);
      continue;
    }
    placed[name] += k;
    if (k > 0) used.insert(node);
    for (const auto& [r, q] : universe.at(name).resources) {
      load[node][r] += q * k;
    }
  }
  for (const auto& [name, _] : types) {
    if (placed[name] != plan.count(name)) {
      errors.push_back("placements of " + name + " do not sum to its total");
    }
  }
  for (const auto& [node, l] : load) {
    for (const auto& [r, q] : l) {
      if (q > nodes.at(node).resource(r)) {
        errors.push_back("node " + node + " overloaded on " + r);
      }
    }
  }
  if (used != plan.used_nodes) errors.push_back("used node set is wrong");
  int64_t cost = 0;
  for (const auto& node : used) {
    if (const Node* n = nodes.find(node)) cost += n->cost;
  }
  if (cost != plan.cost) errors.push_back("cost does not match used nodes");
  return errors;
}

void add_reuse_objective(Encoding& encoding, const Configuration& initial,
                         int64_t cost) {
  auto& model = encoding.model;
  // Pin the cost found by the first stage.
  LinearConstraint cost_row = {model.objective().terms, Relation::kLe, cost};
  model.add_linear(std::move(cost_row));

  std::map<std::pair<TypeName, NodeName>, int64_t> existing;
  for (const auto& [_, pl] : initial.instances) ++existing[{pl.type, pl.node}];

  solver::Objective reuse{solver::Sense::kMaximize, {}};
  for (const auto& [key, k] : existing) {
    auto it = encoding.dict.place.find(key);
    if (it == encoding.dict.place.end()) continue;
    const VarId keep = model.add_variable(
        "keep[" + key.first + "@" + key.second + "]", 0, k);
    model.add_linear({{{1, keep}, {-1, it->second}}, Relation::kLe, 0});
    reuse.terms.push_back({1, keep});
  }
  model.set_objective(std::move(reuse));
}

Result solve_phase1(const Universe& universe, const NodePool& nodes,
                    const TypeName& target, const InstanceBounds& bounds,
                    const solver::Budget& budget,
                    const Configuration* initial,
                    const EncodeOptions& options) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  EncodeOptions opts = options;
  if (initial != nullptr) opts.reuse_hint = initial;
  Encoding enc = encode_phase1(universe, nodes, target, bounds, opts);

  Result result;
  result.outcome = solver::solve(enc.model, budget);
  if (!result.outcome.has_solution()) return result;

  solver::SolveOutcome chosen = result.outcome;
  if (initial != nullptr && !initial->instances.empty() &&
      result.outcome.status == solver::SolveStatus::kOptimal) {
    solver::Budget rest = budget;
    rest.time_limit -= Clock::now() - start;
    if (rest.time_limit.count() > 0) {
      add_reuse_objective(enc, *initial, result.outcome.objective_value);
      auto second = solver::solve(enc.model, rest);
      if (second.has_solution()) {
        second.assignment.resize(result.outcome.assignment.size());
        chosen.assignment = std::move(second.assignment);
      }
    }
  }
  result.plan = extract_instance_plan(chosen, enc.dict, nodes);
  if (result.plan->cost != result.outcome.objective_value) {
    throw InternalError("decoded cost disagrees with the solver objective");
  }
  return result;
}

}  // namespace mdeploy::phase1
