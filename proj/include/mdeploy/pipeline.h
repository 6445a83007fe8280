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

// The full planner: instance counts and placement, bindings, then an
// ordered plan that is replayed before it is returned.

#ifndef MDEPLOY_PIPELINE_H_
#define MDEPLOY_PIPELINE_H_

#include <optional>
#include <string>
#include <vector>

#include "mdeploy/io.h"
#include "mdeploy/model.h"
#include "mdeploy/phase1.h"
#include "mdeploy/phase2.h"
#include "mdeploy/solver.h"
#include "mdeploy/verifier.h"

namespace mdeploy::pipeline {

enum class Mode { kScratch, kIncremental };

struct Request {
  Universe universe;
  NodePool nodes;
  Configuration initial;
  TypeName target;
  phase1::InstanceBounds bound_overrides;
  phase2::BindingMetric metric;
  Mode mode = Mode::kScratch;
  solver::Budget budget;
  phase1::EncodeOptions phase1_options;
  // Keep the text form of both solver models in the result.
  bool export_models = false;
};

enum class Verdict {
  // Cost proven minimal (and the metric, if any, proven optimal).
  kOptimal,
  // Proven that no deployment exists.
  kNo,
  // A verified plan, but the time limit cut the optimality proof short.
  kFeasibleUnproven,
  // Time limit reached without any plan.
  kTimeoutNoSolution,
};

std::string_view to_string(Verdict verdict);

struct Result {
  Verdict verdict = Verdict::kTimeoutNoSolution;
  phase1::InstanceBounds bounds;
  solver::SolveOutcome phase1_outcome;
  std::optional<phase1::InstancePlan> instance_plan;
  std::vector<phase2::PlacedInstance> instances;
  solver::SolveOutcome phase2_outcome;
  std::optional<phase2::BindingPlan> binding_plan;
  Configuration target_config;
  std::optional<DeploymentPlan> plan;
  std::optional<verifier::PlanTrace> trace;
  std::string phase1_model;
  std::string phase2_model;
};

// Throws InputError for an ill-formed universe, an unknown target, a bad
// metric, missing bounds or an initial configuration that is not
// provisionally correct. Throws InternalError if a synthesized plan fails
// its own replay.
Result plan_deployment(const Request& request);

// Counts per type, placements, used nodes, cost, statuses.
io::Json summarize(const Request& request, const Result& result);

}  // namespace mdeploy::pipeline

#endif  // MDEPLOY_PIPELINE_H_
