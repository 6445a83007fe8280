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

#include "mdeploy/gen.h"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "mdeploy/io.h"

namespace mdeploy::gen {

namespace {

int64_t uniform(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) {
  return std::bernoulli_distribution(p)(rng);
}

template <typename C>
const typename C::value_type& pick(const C& items, std::mt19937_64& rng) {
  auto it = items.begin();
  std::advance(it, uniform(rng, 0, static_cast<int64_t>(items.size()) - 1));
  return *it;
}

}  // namespace

Problem partition(const std::vector<int64_t>& s) {
  if (s.empty()) throw InputError("partition needs at least one element");
  const auto n = static_cast<int64_t>(s.size());
  std::vector<MicroserviceType> types;
  std::map<phase1::BindKey, int64_t> weights;
  for (int64_t i = 1; i <= n; ++i) {
    if (s[i - 1] < 0) throw InputError("partition elements must be natural numbers");
    const std::string name = "E" + std::to_string(i);
    const std::string marker = "m" + std::to_string(i);
    MicroserviceType e{name, {{"p", Arity(1)}, {"q", Arity(1)}, {marker, Arity(1)}},
                       {}, {}, {marker}, {{"slot", 1}}};
    types.push_back(std::move(e));
    weights[{"p", "SetA", name}] = s[i - 1];
    weights[{"p", "SetB", name}] = -s[i - 1];
  }
  for (const std::string side : {"A", "B"}) {
    const std::string marker = "set" + side;
    types.push_back({"Set" + side, {{"q", Arity(1)}, {marker, Arity(1)}}, {},
                     {{"p", 0}}, {marker}, {{"slot", 1}}});
  }
  types.push_back({"Partition", {}, {{"q", n + 2}}, {}, {}, {{"slot", 1}}});
  Problem out;
  out.universe = Universe(std::move(types));
  out.nodes = NodePool({{"host", {{"slot", n + 3}}, 1}});
  out.target = "Partition";
  out.metric = phase2::BindingMetric::weighted(std::move(weights),
                                               solver::Sense::kMinimize);
  return out;
}

int64_t partition_min_difference(const std::vector<int64_t>& s) {
  if (s.size() > 30) throw InputError("too many elements to enumerate");
  int64_t best = -1;
  for (uint64_t mask = 0; mask < (uint64_t{1} << s.size()); ++mask) {
    int64_t diff = 0;
    for (std::size_t i = 0; i < s.size(); ++i) diff += (mask >> i & 1) ? s[i] : -s[i];
    if (best < 0 || std::abs(diff) < best) best = std::abs(diff);
  }
  return best;
}

std::optional<int64_t> partition_min_abs_objective(const Problem& problem,
                                                   const solver::Budget& budget) {
  const auto bounds = phase1::derive_bounds(problem.universe, problem.nodes, problem.bounds);
  auto p1 = phase1::solve_phase1(problem.universe, problem.nodes, problem.target,
                                 bounds, budget);
  if (!p1.plan) return std::nullopt;
  const auto instances = phase2::materialize_instances(*p1.plan);
  auto enc = phase2::encode_phase2(instances, problem.universe, *problem.metric);
  for (const auto& inst : instances) {
    if (!problem.universe.at(inst.type).provides_interface("p")) continue;
    solver::LinearConstraint once{{}, solver::Relation::kEq, 1};
    for (const auto& [b, v] : enc.dict.b) {
      if (b.interface == "p" && b.provider == inst.id) once.terms.push_back({1, v});
    }
    enc.model.add_linear(std::move(once));
  }
  const auto& terms = enc.dict.metric_objective.terms;
  std::optional<int64_t> best;
  for (const bool upward : {true, false}) {
    solver::Model m = enc.model;
    m.add_linear({terms, upward ? solver::Relation::kGe : solver::Relation::kLe, 0});
    m.set_objective({upward ? solver::Sense::kMinimize : solver::Sense::kMaximize, terms});
    const auto out = solver::solve(m, budget);
    if (out.status != solver::SolveStatus::kOptimal) continue;
    const int64_t v = std::abs(out.objective_value);
    best = best ? std::min(*best, v) : v;
  }
  return best;
}

Problem binpack(const std::vector<int64_t>& sizes, int64_t capacity) {
  if (sizes.empty()) throw InputError("binpack needs at least one item");
  if (capacity <= 0) throw InputError("binpack needs a positive bin capacity");
  std::vector<MicroserviceType> types;
  MicroserviceType bins{"Bins", {}, {}, {}, {}, {}};
  for (std::size_t i = 1; i <= sizes.size(); ++i) {
    if (sizes[i - 1] <= 0) throw InputError("binpack item sizes must be positive");
    const std::string slot = "slot" + std::to_string(i);
    types.push_back({"Item" + std::to_string(i), {{slot, Arity::infinite()}}, {}, {},
                     {}, {{"size", sizes[i - 1]}}});
    bins.strong_requires[slot] = 1;
  }
  types.push_back(std::move(bins));
  std::vector<Node> nodes;
  for (std::size_t i = 1; i <= sizes.size(); ++i) {
    nodes.push_back({"bin#" + std::to_string(i), {{"size", capacity}}, 1});
  }
  Problem out;
  out.universe = Universe(std::move(types));
  out.nodes = NodePool(std::move(nodes));
  out.target = "Bins";
  out.bounds["Bins"] = 1;
  return out;
}

Problem random_problem(uint64_t seed, const RandomSizes& sizes) {
  std::mt19937_64 rng(seed);
  const int k = static_cast<int>(uniform(rng, std::min(2, sizes.max_types), sizes.max_types));
  auto iface = [](int i) { return "p" + std::to_string(i); };
  std::vector<MicroserviceType> types(k);
  for (int i = 0; i < k; ++i) {
    auto& t = types[i];
    t.name = "S" + std::to_string(i);
    const int64_t a = uniform(rng, 0, 3);
    t.provides.insert_or_assign(iface(i), a == 0 ? Arity::infinite() : Arity(a));
    // Extra providers only of higher-numbered interfaces, so strong edges
    // always point to lower-numbered types.
    for (int j = i + 1; j < k; ++j) {
      if (chance(rng, 0.25)) t.provides.insert_or_assign(iface(j), Arity(uniform(rng, 1, 3)));
    }
    for (int j = 0; j < i; ++j) {
      if (chance(rng, 0.45)) t.strong_requires[iface(j)] = uniform(rng, 1, 2);
    }
    for (int j = 0; j < k; ++j) {
      if (!t.strong_requires.contains(iface(j)) && chance(rng, 0.3)) {
        t.weak_requires[iface(j)] = chance(rng, 0.2) ? 0 : uniform(rng, 1, 2);
      }
    }
    // The target is the last type; make it depend on the one before.
    if (i == k - 1 && i > 0 && !t.requires_interface(iface(i - 1))) {
      if (chance(rng, 0.5)) {
        t.strong_requires[iface(i - 1)] = uniform(rng, 1, 2);
      } else {
        t.weak_requires[iface(i - 1)] = uniform(rng, 1, 2);
      }
    }
    if (chance(rng, 0.15)) {
      const auto c = iface(static_cast<int>(uniform(rng, 0, k - 1)));
      if (!t.requires_interface(c)) t.conflicts.insert(c);
    }
    t.resources["cpu"] = uniform(rng, 0, 3);
    t.resources["ram"] = uniform(rng, 0, 3);
  }
  const int num_nodes = static_cast<int>(uniform(rng, std::min(2, sizes.max_nodes), sizes.max_nodes));
  std::vector<Node> nodes;
  for (int i = 0; i < num_nodes; ++i) {
    nodes.push_back({"n" + std::to_string(i),
                     {{"cpu", uniform(rng, 1, 6)}, {"ram", uniform(rng, 1, 6)}},
                     uniform(rng, 1, 9)});
  }
  Problem out;
  out.universe = Universe(std::move(types));
  out.nodes = NodePool(std::move(nodes));
  out.target = "S" + std::to_string(k - 1);
  int64_t total = 0;
  for (const auto& [name, _] : out.universe.types()) {
    const int64_t b = std::min(uniform(rng, 1, sizes.max_bound), sizes.max_total - total);
    out.bounds[name] = std::max<int64_t>(b, 0);
    total += out.bounds[name];
  }
  if (out.bounds[out.target] == 0) {
    // Keep the target possible: take one from the largest other bound.
    auto donor = std::max_element(out.bounds.begin(), out.bounds.end(),
                                  [](const auto& a, const auto& b) { return a.second < b.second; });
    --donor->second;
    out.bounds[out.target] = 1;
  }
  out.initial = random_walk({}, out.universe, out.nodes, rng, sizes.initial_steps);
  return out;
}

Problem random_solvable(uint64_t seed, const RandomSizes& sizes, uint64_t* used_seed) {
  std::mt19937_64 seeds(seed);
  for (uint64_t s = seed;; s = seeds()) {
    Problem p = random_problem(s, sizes);
    const auto bounds = phase1::derive_bounds(p.universe, p.nodes, p.bounds);
    solver::Budget budget;
    budget.time_limit = std::chrono::seconds(10);
    const auto r = phase1::solve_phase1(p.universe, p.nodes, p.target, bounds, budget);
    if (r.plan) {
      if (used_seed != nullptr) *used_seed = s;
      return p;
    }
  }
}

Action random_action(const Configuration& config, const Universe& universe,
                     const NodePool& nodes, std::mt19937_64& rng) {
  const auto& types = universe.types();
  const int64_t roll = uniform(rng, 0, 99);
  if (config.instances.empty() || roll < 40) {
    const auto& [type_name, t] = pick(types, rng);
    NewAction a{"x" + std::to_string(uniform(rng, 0, 999)), type_name,
                nodes.empty() ? "nowhere" : pick(nodes.nodes(), rng).name, {}};
    // Sometimes reuse an existing id to exercise the rejection path.
    if (!config.instances.empty() && chance(rng, 0.05)) a.id = pick(config.instances, rng).first;
    for (const auto& [p, n] : t.strong_requires) {
      std::vector<InstanceId> providers;
      for (const auto& [id, pl] : config.instances) {
        if (universe.at(pl.type).provides_interface(p)) providers.push_back(id);
      }
      std::shuffle(providers.begin(), providers.end(), rng);
      const int64_t want = chance(rng, 0.9) ? n : uniform(rng, 0, n + 1);
      auto& set = a.strong_bindings[p];
      for (int64_t i = 0; i < want && i < static_cast<int64_t>(providers.size()); ++i) {
        set.insert(providers[i]);
      }
    }
    return a;
  }
  if (roll < 70) {
    const auto& [req, pl] = pick(config.instances, rng);
    const auto& t = universe.at(pl.type);
    InterfaceName p;
    if (!t.weak_requires.empty() && chance(rng, 0.9)) {
      p = pick(t.weak_requires, rng).first;
    } else {
      p = pick(interfaces_of(universe), rng);
    }
    return BindAction{{p, req, pick(config.instances, rng).first}};
  }
  if (roll < 85 && !config.bindings.empty()) {
    return UnbindAction{pick(config.bindings, rng)};
  }
  return DelAction{pick(config.instances, rng).first};
}

Configuration random_walk(const Configuration& start, const Universe& universe,
                          const NodePool& nodes, std::mt19937_64& rng, int steps) {
  Configuration config = start;
  for (int i = 0; i < steps; ++i) {
    const Action a = random_action(config, universe, nodes, rng);
    try {
      Configuration next = apply_action(config, a, universe);
      if (check_provisional(next, universe, nodes).provisionally_correct()) {
        config = std::move(next);
      }
    } catch (const ActionError&) {
    } catch (const InputError&) {
    }
  }
  return config;
}

std::string write_problem(const Problem& problem, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir + ": " + ec.message());
  const fs::path base(dir);
  io::write_text_file((base / "universe.json").string(),
                      io::to_json(problem.universe).dump(2) + "\n");
  io::write_text_file((base / "nodes.json").string(),
                      io::to_json(problem.nodes).dump(2) + "\n");
  std::ostringstream cmd;
  cmd << "mdeploy plan --universe " << (base / "universe.json").string() << " --nodes "
      << (base / "nodes.json").string();
  if (!problem.initial.instances.empty()) {
    io::write_text_file((base / "initial.json").string(),
                        io::to_json(problem.initial).dump(2) + "\n");
    cmd << " --initial " << (base / "initial.json").string();
  }
  cmd << " --target " << problem.target;
  if (problem.metric) {
    io::write_text_file((base / "metric.json").string(),
                        io::to_json(*problem.metric).dump(2) + "\n");
    cmd << " --metric weighted:" << (base / "metric.json").string();
  }
  for (const auto& [t, b] : problem.bounds) cmd << " --bound " << t << "=" << b;
  io::write_text_file((base / "command.txt").string(), cmd.str() + "\n");
  return cmd.str();
}

}  // namespace mdeploy::gen
