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

// Problem generators: the partition and bin-packing gadgets, and seeded
// random instances and action sequences for property tests.

#ifndef MDEPLOY_GEN_H_
#define MDEPLOY_GEN_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mdeploy/model.h"
#include "mdeploy/phase1.h"
#include "mdeploy/phase2.h"
#include "mdeploy/solver.h"

namespace mdeploy::gen {

struct Problem {
  Universe universe;
  NodePool nodes;
  Configuration initial;
  TypeName target;
  // Passed as bound overrides to Phase 1 and as type caps to the oracle.
  phase1::InstanceBounds bounds;
  std::optional<phase2::BindingMetric> metric;
};

// One type E<i> per element (providing p and q with arity 1, and providing
// and conflicting on its own marker so it has one instance), SetA and SetB
// (weak-requiring p with arity 0, providing q) and the target Partition
// strong-requiring |S|+2 copies of q. The weighted metric puts +s_i on
// SetA-E<i> bindings on p and -s_i on SetB-E<i>. Throws InputError on an
// empty S.
Problem partition(const std::vector<int64_t>& s);

// min over A/B splits of |sum(A) - sum(B)|, by enumeration.
int64_t partition_min_difference(const std::vector<int64_t>& s);

// Runs Phases 1 and 2 on a partition problem, with every element bound to
// exactly one of SetA and SetB, and returns the smallest |metric| reachable.
// nullopt if either phase fails within the budget.
std::optional<int64_t> partition_min_abs_objective(const Problem& problem,
                                                   const solver::Budget& budget);

// One type Item<i> per item, consuming its size and providing slot<i>; the
// target Bins strong-requires every slot. One node of the given capacity
// and cost 1 per item. Throws InputError on no items or zero capacity.
Problem binpack(const std::vector<int64_t>& sizes, int64_t capacity);

struct RandomSizes {
  int max_types = 4;
  int max_nodes = 6;
  int64_t max_bound = 4;
  // Cap on the sum of the per-type bounds.
  int64_t max_total = 8;
  // Random actions tried when building the initial configuration.
  int initial_steps = 12;
};

// Acyclic by construction; the initial configuration is provisionally
// correct.
Problem random_problem(uint64_t seed, const RandomSizes& sizes = {});

// The first random_problem from `seed` on whose Phase 1 has a solution.
// `used_seed` receives the seed that produced it.
Problem random_solvable(uint64_t seed, const RandomSizes& sizes = {},
                        uint64_t* used_seed = nullptr);

// A random action on `config`; it may well be rejected by apply_action.
Action random_action(const Configuration& config, const Universe& universe,
                     const NodePool& nodes, std::mt19937_64& rng);

// Applies up to `steps` random actions from `start`, keeping only those that
// leave the configuration provisionally correct.
Configuration random_walk(const Configuration& start, const Universe& universe,
                          const NodePool& nodes, std::mt19937_64& rng, int steps);

// universe.json, nodes.json, initial.json (if any), metric.json (if any)
// and command.txt with a suggested plan invocation, which is also returned.
std::string write_problem(const Problem& problem, const std::string& dir);

}  // namespace mdeploy::gen

#endif  // MDEPLOY_GEN_H_
