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

// Per-instance binding problem: given named, placed instances, choose which
// provider each requirer binds to on each interface.

#ifndef MDEPLOY_PHASE2_H_
#define MDEPLOY_PHASE2_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mdeploy/model.h"
#include "mdeploy/phase1.h"
#include "mdeploy/solver.h"

namespace mdeploy::phase2 {

struct PlacedInstance {
  InstanceId id;
  TypeName type;
  NodeName node;

  friend auto operator<=>(const PlacedInstance&,
                          const PlacedInstance&) = default;
};

struct BindingPlan {
  std::set<Binding> bindings;
  friend bool operator==(const BindingPlan&, const BindingPlan&) = default;
};

struct BindingMetric {
  enum class Kind { kNone, kMinCrossNode, kMaxBindings, kWeighted };

  Kind kind = Kind::kNone;
  // Only for kWeighted: weight per (interface, requirer type, provider type).
  std::map<phase1::BindKey, int64_t> weights;
  solver::Sense sense = solver::Sense::kMinimize;

  static BindingMetric none() { return {}; }
  static BindingMetric min_cross_node() { return {Kind::kMinCrossNode, {}}; }
  static BindingMetric max_bindings() {
    return {Kind::kMaxBindings, {}, solver::Sense::kMaximize};
  }
  static BindingMetric weighted(std::map<phase1::BindKey, int64_t> weights,
                                solver::Sense sense) {
    return {Kind::kWeighted, std::move(weights), sense};
  }
};

// Throws InputError if a weighted metric names an interface or type that is
// not in the universe.
void validate_metric(const BindingMetric& metric, const Universe& universe);

// Instances of each type are numbered T#1..T#n and handed out to nodes in
// ascending node-name order.
std::vector<PlacedInstance> materialize_instances(
    const phase1::InstancePlan& plan);

struct EncodeOptions {
  // Variables pinned to 0 or 1. Entries that name no variable are ignored
  // when pinned to 0 and make the model infeasible when pinned to 1.
  std::map<Binding, int64_t> pinned;
  // With metric none, prefer keeping these bindings and adding few others.
  std::set<Binding> preferred;
};

struct Dictionary {
  std::map<Binding, solver::VarId> b;
  // Linear form the metric ranks, kept even when the model objective is
  // the preference objective instead.
  solver::Objective metric_objective;
};

struct Encoding {
  solver::Model model;
  Dictionary dict;
};

Encoding encode_phase2(const std::vector<PlacedInstance>& instances,
                       const Universe& universe, const BindingMetric& metric,
                       const EncodeOptions& options = {});

// Throws InternalError if a chosen binding breaks the binding side
// conditions.
BindingPlan extract_binding_plan(const solver::SolveOutcome& outcome,
                                 const Dictionary& dict,
                                 const std::vector<PlacedInstance>& instances,
                                 const Universe& universe);

// Value of the metric's linear form on a binding plan.
int64_t metric_value(const BindingMetric& metric, const BindingPlan& plan,
                     const std::vector<PlacedInstance>& instances);

struct Result {
  solver::SolveOutcome outcome;
  std::optional<BindingPlan> plan;
};

Result solve_phase2(const std::vector<PlacedInstance>& instances,
                    const Universe& universe, const BindingMetric& metric,
                    const solver::Budget& budget,
                    const EncodeOptions& options = {});

}  // namespace mdeploy::phase2

#endif  // MDEPLOY_PHASE2_H_
