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

// Exact optimizer over bounded, non-negative integer variables.
//
// The supported constraint shapes are the ones the deployment encoders emit:
// linear (in)equalities, implications guarded by a variable being zero or
// positive, and product bounds y <= a * (b + offset). Search is depth-first
// branch and bound with bounds-consistency propagation; every number stays an
// integer.
//
// A model can be dumped to, and re-read from, a line-oriented text format:
//
//   # mdeploy-model v1
//   # vars <n> linear <n> implications <n> products <n>
//   var <name> <lo> <hi>
//   lin <rel> <const> [<coef>*<name>]...        meaning  sum rel const
//   imp <name> <zero|pos> : lin <rel> <const> [<coef>*<name>]...
//   prod <name> <= <name>*<name>[+<offset>|-<offset>]
//   obj <min|max> [<w>*<name>]...
//
// <rel> is one of "<=", ">=", "=". Lines starting with '#' are comments. The
// obj line is only written for a non-empty objective.

#ifndef MDEPLOY_SOLVER_H_
#define MDEPLOY_SOLVER_H_

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mdeploy::solver {

struct VarId {
  int32_t index = -1;
  friend auto operator<=>(VarId, VarId) = default;
};

// Search-only guidance; never part of the exported text.
enum class ValueOrder { kObjective, kLowFirst, kHighFirst };

struct BranchHint {
  // Variables in a lower class are branched on first. Within a class the
  // smallest domain goes first.
  int priority = 0;
  // kObjective tries lo first when minimizing and hi first when maximizing.
  ValueOrder order = ValueOrder::kObjective;
};

struct Variable {
  std::string name;
  int64_t lo = 0;
  int64_t hi = 0;
  BranchHint hint;
};

struct Term {
  int64_t coef = 1;
  VarId var;
};

enum class Relation { kLe, kGe, kEq };

std::string_view to_string(Relation rel);

// sum(terms) <relation> constant
struct LinearConstraint {
  std::vector<Term> terms;
  Relation relation = Relation::kLe;
  int64_t constant = 0;
};

enum class GuardSense { kIsZero, kIsPositive };

struct Implication {
  VarId guard;
  GuardSense sense = GuardSense::kIsZero;
  LinearConstraint consequence;
};

// bounded <= factor_a * (factor_b + offset)
struct ProductBound {
  VarId bounded;
  VarId factor_a;
  VarId factor_b;
  int64_t offset = 0;
};

enum class Sense { kMinimize, kMaximize };

struct Objective {
  Sense sense = Sense::kMinimize;
  std::vector<Term> terms;
};

class Model {
 public:
  VarId add_variable(std::string name, int64_t lo, int64_t hi);
  void add_linear(LinearConstraint c) { linear_.push_back(std::move(c)); }
  void add_implication(Implication imp) {
    implications_.push_back(std::move(imp));
  }
  void add_product_bound(ProductBound pb) { products_.push_back(pb); }
  void set_hint(VarId v, BranchHint hint) {
    variables_.at(v.index).hint = hint;
  }
  void set_objective(Objective obj) { objective_ = std::move(obj); }

  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(VarId id) const { return variables_.at(id.index); }
  const std::vector<LinearConstraint>& linear() const { return linear_; }
  const std::vector<Implication>& implications() const {
    return implications_;
  }
  const std::vector<ProductBound>& products() const { return products_; }
  const Objective& objective() const { return objective_; }

  std::optional<VarId> find(std::string_view name) const;
  std::size_t num_constraints() const {
    return linear_.size() + implications_.size() + products_.size();
  }

  // Throws InputError on dangling ids, empty or negative domains, duplicate
  // variable names or duplicate variables within one constraint.
  void validate() const;

 private:
  std::vector<Variable> variables_;
  std::map<std::string, int32_t, std::less<>> by_name_;
  std::vector<LinearConstraint> linear_;
  std::vector<Implication> implications_;
  std::vector<ProductBound> products_;
  Objective objective_;
};

enum class SolveStatus { kOptimal, kFeasibleUnproven, kUnsat, kTimeoutNoSolution };

std::string_view to_string(SolveStatus status);

struct Budget {
  std::chrono::duration<double> time_limit =
      std::chrono::duration<double>::max();
  // Diversifies branching tie-breaks in the parallel portfolio. Worker 0
  // always runs the deterministic default strategy.
  uint64_t seed = 0;
  // 1 = serial search. More threads run an OpenMP portfolio sharing the
  // incumbent; Optimal/Unsat answers do not depend on this value.
  int threads = 1;
};

struct SearchStats {
  uint64_t nodes = 0;
  uint64_t failures = 0;
  uint64_t solutions = 0;
  double seconds = 0.0;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::kTimeoutNoSolution;
  // Indexed by VarId::index; empty unless a solution was found.
  std::vector<int64_t> assignment;
  int64_t objective_value = 0;
  SearchStats stats;

  bool has_solution() const {
    return status == SolveStatus::kOptimal ||
           status == SolveStatus::kFeasibleUnproven;
  }
  int64_t value(VarId v) const { return assignment.at(v.index); }
};

SolveOutcome solve(const Model& model, const Budget& budget = {});

struct Evaluation {
  bool satisfied = false;
  int64_t objective_value = 0;
};

// Literal check of every constraint. Throws InputError if `assignment` does
// not cover every variable.
Evaluation evaluate(const Model& model, std::span<const int64_t> assignment);

std::string export_model(const Model& model);
// Throws InputError on malformed text.
Model parse_model(std::string_view text);

}  // namespace mdeploy::solver

#endif  // MDEPLOY_SOLVER_H_
