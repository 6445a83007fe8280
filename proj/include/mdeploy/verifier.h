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

// Plan replay against the transition semantics, output checks for the
// optimal deployment problem, and an exhaustive reference optimizer.

#ifndef MDEPLOY_VERIFIER_H_
#define MDEPLOY_VERIFIER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdeploy/model.h"

namespace mdeploy::verifier {

struct Step {
  Action action;
  Configuration config;
  CorrectnessReport report;
};

struct Finding {
  enum class Kind {
    // The initial configuration is malformed or not provisionally correct.
    kBadInitial,
    // apply_action refused the action.
    kActionRejected,
    // A New names a node outside the pool.
    kUnknownNode,
    // An intermediate configuration is not provisionally correct.
    kProvisionalViolation,
    // The last configuration is not correct.
    kFinalViolation,
  };
  Kind kind;
  std::string message;
  std::optional<ActionErrorCode> action_error;
  std::optional<Violation> violation;
};

std::string_view to_string(Finding::Kind kind);

struct PlanTrace {
  Configuration initial;
  std::vector<Step> steps;
  // 0 refers to the initial configuration, i to the configuration after the
  // i-th action; a final-correctness failure reports the last step.
  std::optional<std::size_t> violation_step;
  std::optional<Finding> finding;

  bool valid() const { return !finding.has_value(); }
  const Configuration& final_config() const {
    return steps.empty() ? initial : steps.back().config;
  }
};

// Total: every failure becomes a Finding.
PlanTrace run_plan(const Configuration& initial, const DeploymentPlan& plan,
                   const Universe& universe, const NodePool& nodes);

struct ProblemOutput {
  bool has_target = false;
  int64_t final_cost = 0;
};

// Throws InputError if the trace is not valid.
ProblemOutput check_problem_output(const PlanTrace& trace,
                                   const TypeName& target,
                                   const NodePool& nodes);

class OracleOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  // Optional per-type instance caps on top of the total cap.
  std::map<TypeName, int64_t> type_caps;
  // Search steps allowed before giving up with OracleOverflow.
  uint64_t step_budget = 50'000'000;
  // Spread the instance multisets over OpenMP threads. The answer,
  // including the witness, is the same either way.
  bool parallel = false;
};

struct OracleResult {
  int64_t cost = 0;
  Configuration witness;
};

// Enumerates every multiset of at most `cap` instances containing `target`,
// every binding set meeting the arities and every placement, keeping the
// cheapest correct configuration. nullopt means no correct configuration
// exists within the caps. Independent of the solver and the encoders.
std::optional<OracleResult> brute_force_oracle(
    const Universe& universe, const NodePool& nodes, const TypeName& target,
    int64_t cap, const OracleOptions& options = {});

}  // namespace mdeploy::verifier

#endif  // MDEPLOY_VERIFIER_H_
