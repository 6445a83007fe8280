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

// Core data model: microservice types, nodes, configurations, actions and
// the reconfiguration semantics over them.
//
// Everything here is a value type. Operations never mutate their inputs, so
// any object may be shared across threads once built.

#ifndef MDEPLOY_MODEL_H_
#define MDEPLOY_MODEL_H_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mdeploy {

using InterfaceName = std::string;
using TypeName = std::string;
using NodeName = std::string;
using InstanceId = std::string;
using ResourceName = std::string;

// Sparse resource vector; an absent key means zero.
using ResourceMap = std::map<ResourceName, int64_t>;

// Malformed or inconsistent user input.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken internal invariant (encoder/solver/synthesis disagreement).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Returns true if `name` is usable as an interface, type, node, resource or
// instance name: non-empty, no whitespace, no '*'. The model export format
// relies on this.
bool is_valid_identifier(std::string_view name);

// A natural number or infinity.
class Arity {
 public:
  constexpr explicit Arity(int64_t value) : value_(value) {}
  static constexpr Arity infinite() { return Arity(-1); }

  constexpr bool is_infinite() const { return value_ < 0; }
  // Only meaningful for finite arities.
  constexpr int64_t value() const { return value_; }

  // True if `count` bindings stay within this upper bound.
  constexpr bool admits(int64_t count) const {
    return is_infinite() || count <= value_;
  }

  friend constexpr bool operator==(Arity, Arity) = default;

 private:
  int64_t value_;
};

std::string to_string(Arity arity);

struct MicroserviceType {
  TypeName name;
  std::map<InterfaceName, Arity> provides;
  std::map<InterfaceName, int64_t> strong_requires;
  std::map<InterfaceName, int64_t> weak_requires;
  std::set<InterfaceName> conflicts;
  ResourceMap resources;

  int64_t resource(const ResourceName& r) const;
  bool provides_interface(const InterfaceName& p) const {
    return provides.contains(p);
  }
  bool requires_strong(const InterfaceName& p) const {
    return strong_requires.contains(p);
  }
  bool requires_weak(const InterfaceName& p) const {
    return weak_requires.contains(p);
  }
  bool requires_interface(const InterfaceName& p) const {
    return requires_strong(p) || requires_weak(p);
  }
  bool consumes_resources() const;

  friend bool operator==(const MicroserviceType&,
                         const MicroserviceType&) = default;
};

struct Node {
  NodeName name;
  ResourceMap resources;
  int64_t cost = 0;

  int64_t resource(const ResourceName& r) const;

  friend bool operator==(const Node&, const Node&) = default;
};

// An ordered collection of uniquely named nodes.
class NodePool {
 public:
  NodePool() = default;
  // Throws InputError on duplicate names or negative quantities.
  explicit NodePool(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const Node* find(const NodeName& name) const;
  // Throws InputError for unknown names.
  const Node& at(const NodeName& name) const;

  friend bool operator==(const NodePool& a, const NodePool& b) {
    return a.nodes_ == b.nodes_;
  }

 private:
  std::vector<Node> nodes_;
  std::map<NodeName, std::size_t> index_;
};

// A finite set of microservice types keyed by name. Construction enforces the
// per-type invariants (disjoint requirement domains, arity ranges);
// well-formedness of the dependency graph is checked by check_universe.
class Universe {
 public:
  Universe() = default;
  explicit Universe(std::vector<MicroserviceType> types);

  const std::map<TypeName, MicroserviceType>& types() const { return types_; }
  std::size_t size() const { return types_.size(); }
  const MicroserviceType* find(const TypeName& name) const;
  const MicroserviceType& at(const TypeName& name) const;

  friend bool operator==(const Universe&, const Universe&) = default;

 private:
  std::map<TypeName, MicroserviceType> types_;
};

struct Binding {
  InterfaceName interface;
  InstanceId requirer;
  InstanceId provider;

  friend auto operator<=>(const Binding&, const Binding&) = default;
};

struct Placement {
  TypeName type;
  NodeName node;

  friend auto operator<=>(const Placement&, const Placement&) = default;
};

// The runtime state <Z, T, N, B>. Instance ids are the keys of `instances`.
struct Configuration {
  std::map<InstanceId, Placement> instances;
  std::set<Binding> bindings;

  bool contains(const InstanceId& id) const { return instances.contains(id); }

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct BindAction {
  Binding binding;
  friend bool operator==(const BindAction&, const BindAction&) = default;
};

struct UnbindAction {
  Binding binding;
  friend bool operator==(const UnbindAction&, const UnbindAction&) = default;
};

struct NewAction {
  InstanceId id;
  TypeName type;
  NodeName node;
  // Must cover exactly the strong requirements of `type`.
  std::map<InterfaceName, std::set<InstanceId>> strong_bindings;
  friend bool operator==(const NewAction&, const NewAction&) = default;
};

struct DelAction {
  InstanceId id;
  friend bool operator==(const DelAction&, const DelAction&) = default;
};

using Action = std::variant<BindAction, UnbindAction, NewAction, DelAction>;

std::string describe(const Action& action);

struct DeploymentPlan {
  std::vector<Action> actions;
  friend bool operator==(const DeploymentPlan&,
                         const DeploymentPlan&) = default;
};

enum class ViolationKind {
  kNodeOverload,
  kUnmetStrong,
  kUnmetWeak,
  kCapacityExceeded,
  kConflict,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  // The instance whose requirement, capacity or conflict is at fault, or
  // empty for node overloads.
  InstanceId instance;
  NodeName node;
  InterfaceName interface;
  ResourceName resource;
  // Arity or capacity demanded by the model.
  int64_t expected = 0;
  // What the configuration actually has.
  int64_t actual = 0;
  // For conflicts: the other instance providing the interface.
  InstanceId other;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string to_string(const Violation& v);

// True for the two kinds that only matter in a final configuration.
constexpr bool is_final_only(ViolationKind kind) {
  return kind == ViolationKind::kUnmetWeak || kind == ViolationKind::kConflict;
}

enum class Verdict { kCorrect, kProvisionallyCorrectOnly, kInvalid };

std::string_view to_string(Verdict verdict);

struct CorrectnessReport {
  Verdict verdict = Verdict::kCorrect;
  std::vector<Violation> violations;

  bool provisionally_correct() const { return verdict != Verdict::kInvalid; }
  bool correct() const { return verdict == Verdict::kCorrect; }
  // First violation that breaks provisional correctness, if any.
  const Violation* first_provisional_violation() const;
};

// The set of interfaces mentioned anywhere in the universe.
std::set<InterfaceName> interfaces_of(const Universe& universe);

// Returns std::nullopt when the strong dependency graph is acyclic, and
// otherwise one cycle as the ordered list of type names on it.
std::optional<std::vector<TypeName>> check_universe(const Universe& universe);

// Throws InputError on dangling type or node references or on bindings that
// break the configuration side conditions.
void validate_configuration(const Configuration& config,
                            const Universe& universe, const NodePool& nodes);

// Both checks evaluate every condition and list every finding; they are the
// two questions a caller asks of the same report. check_provisional passes
// when report.provisionally_correct(), check_correct when report.correct().
CorrectnessReport check_provisional(const Configuration& config,
                                    const Universe& universe,
                                    const NodePool& nodes);
CorrectnessReport check_correct(const Configuration& config,
                                const Universe& universe,
                                const NodePool& nodes);

enum class ActionErrorCode {
  kUnknownInstance,
  kSelfBinding,
  kStrongPortBind,
  kNotWeakRequirement,
  kNotProvided,
  kBindingExists,
  kBindingAbsent,
  kInstanceExists,
  kUnknownType,
  kStrongBindingsMismatch,
  kStrongArityUnmet,
  kBadStrongProvider,
};

std::string_view to_string(ActionErrorCode code);

// A transition whose side condition does not hold.
class ActionError : public std::runtime_error {
 public:
  ActionError(ActionErrorCode code, const std::string& detail);
  ActionErrorCode code() const { return code_; }

 private:
  ActionErrorCode code_;
};

// Applies one transition. The input is left untouched; throws ActionError.
// Node resources are not checked here (see verifier::run_plan).
Configuration apply_action(const Configuration& config, const Action& action,
                           const Universe& universe);

// Sum of the costs of the distinct nodes hosting at least one instance.
int64_t config_cost(const Configuration& config, const NodePool& nodes);

}  // namespace mdeploy

#endif  // MDEPLOY_MODEL_H_
