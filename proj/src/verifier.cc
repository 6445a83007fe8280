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

#include "mdeploy/verifier.h"

#include <algorithm>
#include <atomic>
#include <limits>

namespace mdeploy::verifier {

std::string_view to_string(Finding::Kind kind) {
  switch (kind) {
    case Finding::Kind::kBadInitial:
      return "bad initial configuration";
    case Finding::Kind::kActionRejected:
      return "action rejected";
    case Finding::Kind::kUnknownNode:
      return "unknown node";
    case Finding::Kind::kProvisionalViolation:
      return "not provisionally correct";
    case Finding::Kind::kFinalViolation:
      return "final configuration not correct";
  }
  return "?";
}

PlanTrace run_plan(const Configuration& initial, const DeploymentPlan& plan,
                   const Universe& universe, const NodePool& nodes) {
  PlanTrace trace;
  trace.initial = initial;
  auto fail = [&](std::size_t step, Finding finding) {
    trace.violation_step = step;
    trace.finding = std::move(finding);
    return trace;
  };

  CorrectnessReport report;
  try {
    report = check_provisional(initial, universe, nodes);
  } catch (const InputError& e) {
    return fail(0, {Finding::Kind::kBadInitial, e.what(), {}, {}});
  }
  if (!report.provisionally_correct()) {
    const Violation& v = *report.first_provisional_violation();
    return fail(0, {Finding::Kind::kBadInitial, to_string(v), {}, v});
  }

  Configuration current = initial;
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const Action& action = plan.actions[i];
    if (const auto* n = std::get_if<NewAction>(&action);
        n != nullptr && nodes.find(n->node) == nullptr) {
      return fail(i + 1, {Finding::Kind::kUnknownNode,
                          describe(action) + ": unknown node " + n->node,
                          {},
                          {}});
    }
    try {
      current = apply_action(current, action, universe);
    } catch (const ActionError& e) {
      return fail(i + 1, {Finding::Kind::kActionRejected,
                          describe(action) + ": " + e.what(),
                          e.code(),
                          {}});
    }
    report = check_provisional(current, universe, nodes);
    trace.steps.push_back({action, current, report});
    if (!report.provisionally_correct()) {
      const Violation& v = *report.first_provisional_violation();
      return fail(i + 1, {Finding::Kind::kProvisionalViolation,
                          describe(action) + ": " + to_string(v),
                          {},
                          v});
    }
  }
  if (!report.correct()) {
    const Violation& v = report.violations.front();
    return fail(plan.actions.size(),
                {Finding::Kind::kFinalViolation, to_string(v), {}, v});
  }
  return trace;
}

ProblemOutput check_problem_output(const PlanTrace& trace,
                                   const TypeName& target,
                                   const NodePool& nodes) {
  if (!trace.valid()) {
    throw InputError("plan trace is not valid: " + trace.finding->message);
  }
  ProblemOutput out;
  const Configuration& final_config = trace.final_config();
  for (const auto& [_, pl] : final_config.instances) {
    if (pl.type == target) out.has_target = true;
  }
  out.final_cost = config_cost(final_config, nodes);
  return out;
}

namespace {

constexpr int64_t kNone = std::numeric_limits<int64_t>::max();

struct OracleBinding {
  std::size_t interface;
  int requirer;
  int provider;
};

struct Candidate {
  int64_t cost = kNone;
  std::vector<int> node_of;  // per instance
  std::vector<OracleBinding> bindings;
};

class StepCounter {
 public:
  StepCounter(std::atomic<uint64_t>& shared, uint64_t budget)
      : shared_(shared), budget_(budget) {}
  ~StepCounter() { shared_ += local_; }

  void tick() {
    if (++local_ < 4096) return;
    if ((shared_ += local_) > budget_) {
      local_ = 0;
      throw OracleOverflow("brute-force oracle exceeded its step budget");
    }
    local_ = 0;
  }

 private:
  std::atomic<uint64_t>& shared_;
  uint64_t budget_;
  uint64_t local_ = 0;
};

// Everything the per-multiset search needs, in dense indices.
struct Dense {
  std::vector<const MicroserviceType*> types;
  std::vector<InterfaceName> interfaces;
  std::vector<ResourceName> resources;
  // [type][interface]: provided arity (-1 infinite), or absent
  std::vector<std::vector<std::optional<int64_t>>> provides;
  // [type] -> list of (interface, arity) over strong and weak requirements
  std::vector<std::vector<std::pair<std::size_t, int64_t>>> requires_;
  std::vector<std::vector<int64_t>> demand;    // [type][resource]
  std::vector<std::vector<int64_t>> capacity;  // [node][resource]
  std::vector<int64_t> node_cost;
};

Dense densify(const Universe& universe, const NodePool& nodes) {
  Dense d;
  const auto ifaces = interfaces_of(universe);
  d.interfaces.assign(ifaces.begin(), ifaces.end());
  std::set<ResourceName> res;
  for (const auto& [_, t] : universe.types()) {
    d.types.push_back(&t);
    for (const auto& [r, q] : t.resources) {
      if (q > 0) res.insert(r);
    }
  }
  d.resources.assign(res.begin(), res.end());
  auto iface_index = [&](const InterfaceName& p) {
    return static_cast<std::size_t>(
        std::lower_bound(d.interfaces.begin(), d.interfaces.end(), p) -
        d.interfaces.begin());
  };
  for (const auto* t : d.types) {
    std::vector<std::optional<int64_t>> prov(d.interfaces.size());
    for (const auto& [p, a] : t->provides) {
      prov[iface_index(p)] = a.is_infinite() ? -1 : a.value();
    }
    d.provides.push_back(std::move(prov));
    std::vector<std::pair<std::size_t, int64_t>> req;
    for (const auto& [p, n] : t->strong_requires) req.emplace_back(iface_index(p), n);
    for (const auto& [p, n] : t->weak_requires) req.emplace_back(iface_index(p), n);
    d.requires_.push_back(std::move(req));
    std::vector<int64_t> dem;
    for (const auto& r : d.resources) dem.push_back(t->resource(r));
    d.demand.push_back(std::move(dem));
  }
  for (const auto& node : nodes.nodes()) {
    std::vector<int64_t> cap;
    for (const auto& r : d.resources) cap.push_back(node.resource(r));
    d.capacity.push_back(std::move(cap));
    d.node_cost.push_back(node.cost);
  }
  return d;
}

bool conflict_free(const Dense& d, const std::vector<int64_t>& counts) {
  for (std::size_t t = 0; t < d.types.size(); ++t) {
    if (counts[t] == 0) continue;
    for (const auto& p : d.types[t]->conflicts) {
      for (std::size_t u = 0; u < d.types.size(); ++u) {
        if (counts[u] == 0 || !d.types[u]->provides_interface(p)) continue;
        if (u != t || counts[t] > 1) return false;
      }
    }
  }
  return true;
}

// Some binding set meeting every required arity without exceeding any
// provided arity. Requirers bind exactly their arity: extra bindings only
// use up capacity.
std::optional<std::vector<OracleBinding>> find_bindings(
    const Dense& d, const std::vector<int>& type_of, StepCounter& steps) {
  struct Slot {
    int requirer;
    std::size_t interface;
    int64_t need;
    std::vector<int> providers;
  };
  std::vector<Slot> slots;
  for (int i = 0; i < static_cast<int>(type_of.size()); ++i) {
    steps.tick();
    for (const auto& [p, n] : d.requires_[type_of[i]]) {
      if (n == 0) continue;
      Slot s{i, p, n, {}};
      for (int j = 0; j < static_cast<int>(type_of.size()); ++j) {
        if (j != i && d.provides[type_of[j]][p].has_value()) s.providers.push_back(j);
      }
      if (static_cast<int64_t>(s.providers.size()) < n) return std::nullopt;
      slots.push_back(std::move(s));
    }
  }
  // remaining[j][p], -1 for unbounded
  std::vector<std::vector<int64_t>> remaining(type_of.size());
  for (std::size_t j = 0; j < type_of.size(); ++j) {
    for (const auto& a : d.provides[type_of[j]]) remaining[j].push_back(a.value_or(0));
  }
  std::vector<OracleBinding> chosen;

  auto usable = [&](int j, std::size_t p) { return remaining[j][p] != 0; };
  auto take = [&](int j, std::size_t p) {
    if (remaining[j][p] > 0) --remaining[j][p];
  };
  auto give = [&](int j, std::size_t p) {
    if (remaining[j][p] >= 0) ++remaining[j][p];
  };

  // Choose `left` more providers for slot s from position `from` on.
  auto search = [&](auto&& self, std::size_t s, std::size_t from,
                    int64_t left) -> bool {
    steps.tick();
    if (s == slots.size()) return true;
    const Slot& slot = slots[s];
    if (left == 0) return self(self, s + 1, 0, s + 1 < slots.size() ? slots[s + 1].need : 0);
    int64_t available = 0;
    for (std::size_t k = from; k < slot.providers.size(); ++k) {
      if (usable(slot.providers[k], slot.interface)) ++available;
    }
    if (available < left) return false;
    for (std::size_t k = from; k < slot.providers.size(); ++k) {
      const int j = slot.providers[k];
      if (!usable(j, slot.interface)) continue;
      take(j, slot.interface);
      chosen.push_back({slot.interface, slot.requirer, j});
      if (self(self, s, k + 1, left - 1)) return true;
      chosen.pop_back();
      give(j, slot.interface);
    }
    return false;
  };
  if (!search(search, 0, 0, slots.empty() ? 0 : slots[0].need)) return std::nullopt;
  return chosen;
}

// Cheapest placement whose cost does not exceed `global_best`, or kNone.
// Instances of one type take nondecreasing node indices.
int64_t place(const Dense& d, const std::vector<int>& type_of,
              const std::atomic<int64_t>& global_best, std::vector<int>& best_nodes,
              StepCounter& steps) {
  const int num_nodes = static_cast<int>(d.capacity.size());
  std::vector<std::vector<int64_t>> load(num_nodes,
                                         std::vector<int64_t>(d.resources.size()));
  std::vector<int> hosted(num_nodes, 0);
  std::vector<int> node_of(type_of.size(), -1);
  int64_t best = kNone;

  auto search = [&](auto&& self, std::size_t k, int64_t cost) -> void {
    steps.tick();
    if (cost >= best || cost > global_best.load(std::memory_order_relaxed)) return;
    if (k == type_of.size()) {
      best = cost;
      best_nodes = node_of;
      return;
    }
    const int t = type_of[k];
    const int first = (k > 0 && type_of[k - 1] == t) ? node_of[k - 1] : 0;
    for (int n = first; n < num_nodes; ++n) {
      bool fits = true;
      for (std::size_t r = 0; r < d.resources.size(); ++r) {
        if (load[n][r] + d.demand[t][r] > d.capacity[n][r]) {
          fits = false;
          break;
        }
      }
      if (!fits) continue;
      for (std::size_t r = 0; r < d.resources.size(); ++r) load[n][r] += d.demand[t][r];
      node_of[k] = n;
      const int64_t extra = hosted[n]++ == 0 ? d.node_cost[n] : 0;
      self(self, k + 1, cost + extra);
      --hosted[n];
      for (std::size_t r = 0; r < d.resources.size(); ++r) load[n][r] -= d.demand[t][r];
    }
    node_of[k] = -1;
  };
  search(search, 0, 0);
  return best;
}

Candidate evaluate_multiset(const Dense& d, const std::vector<int64_t>& counts,
                            const std::atomic<int64_t>& global_best,
                            StepCounter& steps) {
  Candidate c;
  if (!conflict_free(d, counts)) return c;
  // Enough providers of each required interface, counted per type.
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] == 0) continue;
    for (const auto& [p, n] : d.requires_[t]) {
      int64_t providers = 0;
      for (std::size_t u = 0; u < counts.size(); ++u) {
        if (d.provides[u][p].has_value()) providers += counts[u] - (u == t ? 1 : 0);
      }
      if (providers < n) return c;
    }
  }
  std::vector<int> type_of;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    for (int64_t k = 0; k < counts[t]; ++k) type_of.push_back(static_cast<int>(t));
  }
  auto bindings = find_bindings(d, type_of, steps);
  if (!bindings) return c;
  std::vector<int> nodes;
  const int64_t cost = place(d, type_of, global_best, nodes, steps);
  if (cost == kNone) return c;
  c.cost = cost;
  c.node_of = std::move(nodes);
  c.bindings = std::move(*bindings);
  return c;
}

void lower_to(std::atomic<int64_t>& target, int64_t value) {
  int64_t cur = target.load();
  while (value < cur && !target.compare_exchange_weak(cur, value)) {
  }
}

}  // namespace

std::optional<OracleResult> brute_force_oracle(const Universe& universe,
                                               const NodePool& nodes,
                                               const TypeName& target,
                                               int64_t cap,
                                               const OracleOptions& options) {
  if (universe.find(target) == nullptr) {
    throw InputError("unknown target type " + target);
  }
  const Dense d = densify(universe, nodes);
  const std::size_t k = d.types.size();
  std::size_t target_index = 0;
  std::vector<int64_t> type_cap(k, cap);
  for (std::size_t t = 0; t < k; ++t) {
    if (d.types[t]->name == target) target_index = t;
    if (auto it = options.type_caps.find(d.types[t]->name);
        it != options.type_caps.end()) {
      type_cap[t] = std::min(type_cap[t], it->second);
    }
  }

  // Count vectors with the target present, in lexicographic order, are
  // evaluated in chunks so memory stays flat however many there are. Each
  // vector costs one step of the budget.
  constexpr std::size_t kChunk = 1024;
  std::vector<std::vector<int64_t>> chunk;
  std::vector<Candidate> results;
  std::atomic<int64_t> global_best{kNone};
  std::atomic<uint64_t> steps{0};
  Candidate best;
  std::vector<int64_t> best_counts;

  auto flush = [&] {
    results.assign(chunk.size(), Candidate{});
    std::atomic<bool> overflow{false};
    const auto n = static_cast<int64_t>(chunk.size());
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel)
    for (int64_t m = 0; m < n; ++m) {
      if (overflow.load()) continue;
      try {
        StepCounter counter(steps, options.step_budget);
        results[m] = evaluate_multiset(d, chunk[m], global_best, counter);
        if (results[m].cost != kNone) lower_to(global_best, results[m].cost);
      } catch (const OracleOverflow&) {
        overflow = true;
      }
    }
    if (overflow) throw OracleOverflow("brute-force oracle exceeded its step budget");
    // Strictly lower only: the earliest vector wins among equal costs.
    for (std::size_t m = 0; m < chunk.size(); ++m) {
      if (results[m].cost != kNone && (best.cost == kNone || results[m].cost < best.cost)) {
        best = std::move(results[m]);
        best_counts = chunk[m];
      }
    }
    chunk.clear();
  };

  std::vector<int64_t> counts(k, 0);
  StepCounter enumerated(steps, options.step_budget);
  auto enumerate = [&](auto&& self, std::size_t t, int64_t left) -> void {
    if (t == k) {
      if (counts[target_index] > 0) {
        enumerated.tick();
        chunk.push_back(counts);
        if (chunk.size() == kChunk) flush();
      }
      return;
    }
    for (int64_t c = 0; c <= std::min(left, type_cap[t]); ++c) {
      counts[t] = c;
      self(self, t + 1, left - c);
    }
    counts[t] = 0;
  };
  enumerate(enumerate, 0, cap);
  flush();
  if (best.cost == kNone) return std::nullopt;

  OracleResult out;
  out.cost = best.cost;
  std::vector<InstanceId> ids;
  for (std::size_t t = 0, i = 0; t < k; ++t) {
    for (int64_t c = 1; c <= best_counts[t]; ++c, ++i) {
      ids.push_back(d.types[t]->name + "#" + std::to_string(c));
      out.witness.instances[ids.back()] = {d.types[t]->name,
                                           nodes.nodes()[best.node_of[i]].name};
    }
  }
  for (const auto& b : best.bindings) {
    out.witness.bindings.insert({d.interfaces[b.interface], ids[b.requirer], ids[b.provider]});
  }
  const auto report = check_correct(out.witness, universe, nodes);
  if (!report.correct() || config_cost(out.witness, nodes) != out.cost) {
    throw InternalError("oracle witness failed its own correctness check");
  }
  return out;
}

}  // namespace mdeploy::verifier
