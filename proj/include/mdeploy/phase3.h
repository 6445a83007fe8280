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

// Turns a target configuration into an ordered deployment plan, either from
// scratch or reusing instances already deployed.

#ifndef MDEPLOY_PHASE3_H_
#define MDEPLOY_PHASE3_H_

#include <map>
#include <vector>

#include "mdeploy/model.h"
#include "mdeploy/phase2.h"

namespace mdeploy::phase3 {

// Types ordered so that every strong provider comes before its strong
// requirers; ties go to the smallest name. Throws InputError on a strong
// cycle.
std::vector<TypeName> strong_topological_order(const Universe& universe);

// Builds the configuration and checks it is correct. Throws InternalError
// if it is not.
Configuration assemble_target(const std::vector<phase2::PlacedInstance>& instances,
                              const phase2::BindingPlan& bindings,
                              const Universe& universe, const NodePool& nodes);

// Tears down everything in `initial`, then builds `target`.
// Throws InputError if `initial` is not provisionally correct.
DeploymentPlan synthesize_scratch(const Configuration& initial,
                                  const Configuration& target,
                                  const Universe& universe,
                                  const NodePool& nodes);

struct Reuse {
  // Target id -> the initial id it keeps.
  std::map<InstanceId, InstanceId> kept;
  // `target` with kept instances carrying their initial ids and new
  // instances renamed away from any initial id.
  Configuration renamed_target;
};

// Keeps an initial instance for a target instance of the same type on the
// same node whose strong bindings can stay exactly as they are. Providers
// are matched before their requirers; a target instance prefers the initial
// instance with its own id, then the smallest id.
Reuse plan_reuse(const Configuration& initial, const Configuration& target,
                 const Universe& universe);

// Keeps what plan_reuse matches, deletes the rest, creates what is missing
// and reconciles weak bindings. The plan ends in plan_reuse's
// renamed_target. Throws InputError if `initial` is not provisionally
// correct.
DeploymentPlan synthesize_incremental(const Configuration& initial,
                                      const Configuration& target,
                                      const Universe& universe,
                                      const NodePool& nodes);

}  // namespace mdeploy::phase3

#endif  // MDEPLOY_PHASE3_H_
