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

#include "mdeploy/phase3.h"

#include <algorithm>
#include <charconv>
#include <queue>
#include <set>
#include <string_view>
#include <tuple>

namespace mdeploy::phase3 {

namespace {

// "T#10" sorts after "T#9".
bool id_less(const InstanceId& a, const InstanceId& b) {
  auto split = [](std::string_view s) {
    const auto hash = s.rfind('#');
    uint64_t n = 0;
    if (hash != std::string_view::npos) {
      auto [ptr, ec] = std::from_chars(s.data() + hash + 1, s.data() + s.size(), n);
      if (ec == std::errc() && ptr == s.data() + s.size() && hash + 1 < s.size()) {
        return std::make_tuple(s.substr(0, hash), n, s);
      }
    }
    return std::make_tuple(s, uint64_t{0}, s);
  };
  return split(a) < split(b);
}

std::map<TypeName, std::size_t> ranks(const Universe& universe) {
  std::map<TypeName, std::size_t> out;
  const auto order = strong_topological_order(universe);
  for (std::size_t i = 0; i < order.size(); ++i) out[order[i]] = i;
  return out;
}

bool is_strong(const Binding& b, const Configuration& config,
               const Universe& universe) {
  return universe.at(config.instances.at(b.requirer).type)
      .requires_strong(b.interface);
}

void require_provisional(const Configuration& initial, const Universe& universe,
                         const NodePool& nodes) {
  const auto report = check_provisional(initial, universe, nodes);
  if (!report.provisionally_correct()) {
    throw InputError("initial configuration is not provisionally correct: " +
                     to_string(*report.first_provisional_violation()));
  }
}

// Ids of `config` in strong-topological order, or the reverse.
std::vector<InstanceId> ordered_ids(const Configuration& config,
                                    const std::set<InstanceId>& ids,
                                    const std::map<TypeName, std::size_t>& rank,
                                    bool reverse) {
  std::vector<InstanceId> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end(), [&](const InstanceId& a, const InstanceId& b) {
    const auto ra = rank.at(config.instances.at(a).type);
    const auto rb = rank.at(config.instances.at(b).type);
    if (ra != rb) return reverse ? ra > rb : ra < rb;
    return id_less(a, b);
  });
  return out;
}

NewAction make_new(const InstanceId& id, const Configuration& target,
                   const Universe& universe) {
  const auto& pl = target.instances.at(id);
  NewAction action{id, pl.type, pl.node, {}};
  for (const auto& [p, _] : universe.at(pl.type).strong_requires) {
    action.strong_bindings[p];
  }
  for (const auto& b : target.bindings) {
    if (b.requirer == id && action.strong_bindings.contains(b.interface)) {
      action.strong_bindings[b.interface].insert(b.provider);
    }
  }
  return action;
}

// Shared by both modes: drop the initial instances and weak bindings that
// are not kept, then build what is missing.
DeploymentPlan reconcile(const Configuration& initial,
                         const std::set<InstanceId>& kept,
                         const Configuration& target,
                         const Universe& universe) {
  const auto rank = ranks(universe);
  DeploymentPlan plan;
  for (const auto& b : initial.bindings) {
    if (is_strong(b, initial, universe)) continue;
    if (!target.bindings.contains(b) || !kept.contains(b.requirer) ||
        !kept.contains(b.provider)) {
      plan.actions.push_back(UnbindAction{b});
    }
  }
  std::set<InstanceId> surplus;
  for (const auto& [id, _] : initial.instances) {
    if (!kept.contains(id)) surplus.insert(id);
  }
  for (const auto& id : ordered_ids(initial, surplus, rank, /*reverse=*/true)) {
    plan.actions.push_back(DelAction{id});
  }
  std::set<InstanceId> missing;
  for (const auto& [id, _] : target.instances) {
    if (!kept.contains(id)) missing.insert(id);
  }
  for (const auto& id : ordered_ids(target, missing, rank, /*reverse=*/false)) {
    plan.actions.push_back(make_new(id, target, universe));
  }
  for (const auto& b : target.bindings) {
    if (is_strong(b, target, universe)) continue;
    const bool survives = initial.bindings.contains(b) &&
                          kept.contains(b.requirer) && kept.contains(b.provider);
    if (!survives) plan.actions.push_back(BindAction{b});
  }
  return plan;
}

}  // namespace

std::vector<TypeName> strong_topological_order(const Universe& universe) {
  const auto& types = universe.types();
  // requirer -> providers it waits for
  std::map<TypeName, std::set<TypeName>> waits;
  std::map<TypeName, std::set<TypeName>> unblocks;
  for (const auto& [name, t] : types) {
    waits[name];
    for (const auto& [p, _] : t.strong_requires) {
      for (const auto& [other, ot] : types) {
        if (ot.provides_interface(p)) {
          waits[name].insert(other);
          unblocks[other].insert(name);
        }
      }
    }
  }
  std::priority_queue<TypeName, std::vector<TypeName>, std::greater<>> ready;
  for (const auto& [name, w] : waits) {
    if (w.empty()) ready.push(name);
  }
  std::vector<TypeName> order;
  while (!ready.empty()) {
    TypeName next = ready.top();
    ready.pop();
    order.push_back(next);
    for (const auto& req : unblocks[next]) {
      auto& w = waits[req];
      w.erase(next);
      if (w.empty()) ready.push(req);
    }
  }
  if (order.size() != types.size()) {
    throw InputError("strong dependencies are cyclic");
  }
  return order;
}

Configuration assemble_target(
    const std::vector<phase2::PlacedInstance>& instances,
    const phase2::BindingPlan& bindings, const Universe& universe,
    const NodePool& nodes) {
  Configuration config;
  for (const auto& inst : instances) {
    if (!config.instances.emplace(inst.id, Placement{inst.type, inst.node}).second) {
      throw InternalError("duplicate instance " + inst.id);
    }
  }
  config.bindings = bindings.bindings;
  CorrectnessReport report;
  try {
    report = check_correct(config, universe, nodes);
  } catch (const InputError& e) {
    throw InternalError(std::string("assembled configuration is malformed: ") +
                        e.what());
  }
  if (!report.correct()) {
    throw InternalError("assembled configuration is not correct: " +
                        to_string(report.violations.front()));
  }
  return config;
}

DeploymentPlan synthesize_scratch(const Configuration& initial,
                                  const Configuration& target,
                                  const Universe& universe,
                                  const NodePool& nodes) {
  require_provisional(initial, universe, nodes);
  validate_configuration(target, universe, nodes);
  return reconcile(initial, {}, target, universe);
}

Reuse plan_reuse(const Configuration& initial, const Configuration& target,
                 const Universe& universe) {
  const auto rank = ranks(universe);
  std::map<std::pair<TypeName, NodeName>, std::set<InstanceId>> pool;
  for (const auto& [id, pl] : initial.instances) pool[{pl.type, pl.node}].insert(id);

  auto strong_out = [&](const Configuration& c, const InstanceId& id,
                        const InterfaceName& p) {
    std::set<InstanceId> out;
    for (const auto& b : c.bindings) {
      if (b.requirer == id && b.interface == p) out.insert(b.provider);
    }
    return out;
  };

  Reuse reuse;
  std::set<InstanceId> all_targets;
  for (const auto& [id, _] : target.instances) all_targets.insert(id);
  // Per type, providers first: instances that find their own id are
  // matched before the rest pick from what is left.
  auto try_match = [&](const InstanceId& t, bool own_id_only) {
    const auto& pl = target.instances.at(t);
    auto group = pool.find({pl.type, pl.node});
    if (group == pool.end()) return;
    auto consistent = [&](const InstanceId& i) {
      for (const auto& [p, _] : universe.at(pl.type).strong_requires) {
        std::set<InstanceId> mapped;
        for (const auto& y : strong_out(target, t, p)) {
          auto k = reuse.kept.find(y);
          mapped.insert(k == reuse.kept.end() ? "\x01" + y : k->second);
        }
        if (mapped != strong_out(initial, i, p)) return false;
      }
      return true;
    };
    std::vector<InstanceId> candidates;
    if (own_id_only) {
      if (group->second.contains(t)) candidates.push_back(t);
    } else {
      candidates.assign(group->second.begin(), group->second.end());
      std::sort(candidates.begin(), candidates.end(), id_less);
    }
    for (const auto& i : candidates) {
      if (consistent(i)) {
        reuse.kept[t] = i;
        group->second.erase(i);
        return;
      }
    }
  };
  const auto ordered = ordered_ids(target, all_targets, rank, false);
  for (std::size_t lo = 0; lo < ordered.size();) {
    const auto& type = target.instances.at(ordered[lo]).type;
    std::size_t hi = lo;
    while (hi < ordered.size() && target.instances.at(ordered[hi]).type == type) ++hi;
    for (std::size_t k = lo; k < hi; ++k) try_match(ordered[k], true);
    for (std::size_t k = lo; k < hi; ++k) {
      if (!reuse.kept.contains(ordered[k])) try_match(ordered[k], false);
    }
    lo = hi;
  }

  std::set<InstanceId> taken;
  for (const auto& [id, _] : initial.instances) taken.insert(id);
  taken.insert(all_targets.begin(), all_targets.end());
  std::map<InstanceId, InstanceId> rename;
  for (const auto& [t, pl] : target.instances) {
    if (auto k = reuse.kept.find(t); k != reuse.kept.end()) {
      rename[t] = k->second;
    } else if (!initial.instances.contains(t)) {
      rename[t] = t;
    } else {
      for (int64_t k = 1;; ++k) {
        InstanceId fresh = pl.type + "#" + std::to_string(k);
        if (taken.insert(fresh).second) {
          rename[t] = fresh;
          break;
        }
      }
    }
  }
  for (const auto& [t, pl] : target.instances) {
    reuse.renamed_target.instances[rename.at(t)] = pl;
  }
  for (const auto& b : target.bindings) {
    reuse.renamed_target.bindings.insert(
        {b.interface, rename.at(b.requirer), rename.at(b.provider)});
  }
  return reuse;
}

DeploymentPlan synthesize_incremental(const Configuration& initial,
                                      const Configuration& target,
                                      const Universe& universe,
                                      const NodePool& nodes) {
  require_provisional(initial, universe, nodes);
  validate_configuration(target, universe, nodes);
  const Reuse reuse = plan_reuse(initial, target, universe);
  std::set<InstanceId> kept;
  for (const auto& [_, i] : reuse.kept) kept.insert(i);
  return reconcile(initial, kept, reuse.renamed_target, universe);
}

}  // namespace mdeploy::phase3
