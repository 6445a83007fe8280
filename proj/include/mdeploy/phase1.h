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

// Instance-count and placement problem: how many instances of each type to
// create, on which nodes, with how many aggregate bindings, at minimal node
// cost.

#ifndef MDEPLOY_PHASE1_H_
#define MDEPLOY_PHASE1_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mdeploy/model.h"
#include "mdeploy/solver.h"

namespace mdeploy::phase1 {

// Per-type maximum instance count.
using InstanceBounds = std::map<TypeName, int64_t>;

// (interface, requirer type, provider type)
using BindKey = std::tuple<InterfaceName, TypeName, TypeName>;

struct InstancePlan {
  std::map<TypeName, int64_t> total;
  std::map<std::pair<TypeName, NodeName>, int64_t> placement;
  std::map<BindKey, int64_t> aggregate_bindings;
  std::set<NodeName> used_nodes;
  int64_t cost = 0;

  int64_t count(const TypeName& t) const {
    auto it = total.find(t);
    return it == total.end() ? 0 : it->second;
  }
  friend bool operator==(const InstancePlan&, const InstancePlan&) = default;
};

// bound(T) = sum over nodes of how many T instances fit on the node alone,
// limited by T's most constraining resource there. `overrides` replace the
// computed value. Throws InputError for a type that consumes no resource and
// has no override.
InstanceBounds derive_bounds(const Universe& universe, const NodePool& nodes,
                             const InstanceBounds& overrides = {});

struct EncodeOptions {
  // Orders interchangeable nodes (same resources and cost) by use and load,
  // and adds the per-resource aggregate capacity rows implied by the
  // placement constraints. Neither changes the optimal cost.
  bool symmetry_breaking = true;
  // Nodes hosting an instance here are kept out of the interchangeable
  // classes, so that the reuse stage can still tell them apart.
  const Configuration* reuse_hint = nullptr;
};

// Variable handles for decoding a Phase 1 solution.
struct Dictionary {
  std::map<TypeName, solver::VarId> inst;
  std::map<std::pair<TypeName, NodeName>, solver::VarId> place;
  std::map<BindKey, solver::VarId> bind;
  std::map<NodeName, solver::VarId> used;
};

struct Encoding {
  solver::Model model;
  Dictionary dict;
};

// Throws InputError if the universe is not well-formed, the target is unknown
// or a bound is missing.
Encoding encode_phase1(const Universe& universe, const NodePool& nodes,
                       const TypeName& target, const InstanceBounds& bounds,
                       const EncodeOptions& options = {});

// Throws InternalError when the assignment is incoherent (placement sums or
// used flags disagree).
InstancePlan extract_instance_plan(const solver::SolveOutcome& outcome,
                                   const Dictionary& dict,
                                   const NodePool& nodes);

// Re-checks every Phase 1 condition with plain arithmetic on the decoded plan.
// Returns human-readable failures; empty means the plan is sound.
std::vector<std::string> validate_instance_plan(const InstancePlan& plan,
                                                const Universe& universe,
                                                const NodePool& nodes,
                                                const TypeName& target);

// Adds a second stage for incremental planning: keep the cost at `cost` and
// maximize how many instances sit where `initial` already has instances of
// the same type.
void add_reuse_objective(Encoding& encoding, const Configuration& initial,
                         int64_t cost);

struct Result {
  solver::SolveOutcome outcome;
  std::optional<InstancePlan> plan;
};

// encode + solve + extract. With `initial`, runs the reuse stage after the
// cost stage when the cost stage is proven optimal.
Result solve_phase1(const Universe& universe, const NodePool& nodes,
                    const TypeName& target, const InstanceBounds& bounds,
                    const solver::Budget& budget,
                    const Configuration* initial = nullptr,
                    const EncodeOptions& options = {});

}  // namespace mdeploy::phase1

#endif  // MDEPLOY_PHASE1_H_
