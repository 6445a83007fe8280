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

#include "mdeploy/model.h"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <utility>

namespace mdeploy {

namespace {

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_identifier(std::string_view what, std::string_view name) {
  if (!is_valid_identifier(name)) {
    throw InputError(std::string(what) + " name '" + std::string(name) +
                     "' is not a valid identifier");
  }
}

void validate_type(const MicroserviceType& t) {
  require_identifier("type", t.name);
  for (const auto& [p, arity] : t.provides) {
    require_identifier("interface", p);
    if (!arity.is_infinite() && arity.value() < 1) {
      throw InputError("type " + t.name + ": provided arity of " + p +
                       " must be >= 1 or inf");
    }
  }
  for (const auto& [p, n] : t.strong_requires) {
    require_identifier("interface", p);
    if (n < 1) {
      throw InputError("type " + t.name + ": strong arity of " + p +
                       " must be >= 1");
    }
  }
  for (const auto& [p, n] : t.weak_requires) {
    require_identifier("interface", p);
    if (n < 0) {
      throw InputError("type " + t.name + ": weak arity of " + p +
                       " must be >= 0");
    }
    if (t.strong_requires.contains(p)) {
      throw InputError("type " + t.name + ": " + p +
                       " is both a strong and a weak requirement");
    }
  }
  for (const auto& p : t.conflicts) {
    require_identifier("interface", p);
    if (t.requires_interface(p)) {
      throw InputError("type " + t.name + ": " + p +
                       " is both required and conflicting");
    }
  }
  for (const auto& [r, q] : t.resources) {
    require_identifier("resource", r);
    if (q < 0) {
      throw InputError("type " + t.name + ": negative demand for " + r);
    }
  }
}

const MicroserviceType& type_of(const Configuration& config,
                                const Universe& universe,
                                const InstanceId& id) {
  return universe.at(config.instances.at(id).type);
}

}  // namespace

bool is_valid_identifier(std::string_view name) {
  if (name.empty()) return false;
  return std::none_of(name.begin(), name.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '*';
  });
}

std::string to_string(Arity arity) {
  return arity.is_infinite() ? "inf" : std::to_string(arity.value());
}

int64_t MicroserviceType::resource(const ResourceName& r) const {
  auto it = resources.find(r);
  return it == resources.end() ? 0 : it->second;
}

bool MicroserviceType::consumes_resources() const {
  return std::any_of(resources.begin(), resources.end(),
                     [](const auto& kv) { return kv.second > 0; });
}

int64_t Node::resource(const ResourceName& r) const {
  auto it = resources.find(r);
  return it == resources.end() ? 0 : it->second;
}

NodePool::NodePool(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    require_identifier("node", n.name);
    if (n.cost < 0) throw InputError("node " + n.name + ": negative cost");
    for (const auto& [r, q] : n.resources) {
      require_identifier("resource", r);
      if (q < 0) throw InputError("node " + n.name + ": negative " + r);
    }
    if (!index_.emplace(n.name, i).second) {
      throw InputError("duplicate node name " + n.name);
    }
  }
}

const Node* NodePool::find(const NodeName& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

const Node& NodePool::at(const NodeName& name) const {
  const Node* n = find(name);
  if (n == nullptr) throw InputError("unknown node " + name);
  return *n;
}

Universe::Universe(std::vector<MicroserviceType> types) {
  for (auto& t : types) {
    validate_type(t);
    std::string name = t.name;
    if (!types_.emplace(name, std::move(t)).second) {
      throw InputError("duplicate type name " + name);
    }
  }
}

const MicroserviceType* Universe::find(const TypeName& name) const {
  auto it = types_.find(name);
  return it == types_.end() ? nullptr : &it->second;
}

const MicroserviceType& Universe::at(const TypeName& name) const {
  const MicroserviceType* t = find(name);
  if (t == nullptr) throw InputError("unknown type " + name);
  return *t;
}

std::string describe(const Action& action) {
  return std::visit(
      Overloaded{
          [](const BindAction& a) {
            return "bind(" + a.binding.interface + ", " + a.binding.requirer +
                   ", " + a.binding.provider + ")";
          },
          [](const UnbindAction& a) {
            return "unbind(" + a.binding.interface + ", " +
                   a.binding.requirer + ", " + a.binding.provider + ")";
          },
          [](const NewAction& a) {
            std::string s = "new(" + a.id + ", " + a.type + ", " + a.node;
            for (const auto& [p, ids] : a.strong_bindings) {
              s += ", " + p + " -> {";
              bool first = true;
              for (const auto& id : ids) {
                if (!first) s += ", ";
                s += id;
                first = false;
              }
              s += "}";
            }
            return s + ")";
          },
          [](const DelAction& a) { return "del(" + a.id + ")"; },
      },
      action);
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kNodeOverload:
      return "node_overload";
    case ViolationKind::kUnmetStrong:
      return "unmet_strong";
    case ViolationKind::kUnmetWeak:
      return "unmet_weak";
    case ViolationKind::kCapacityExceeded:
      return "capacity_exceeded";
    case ViolationKind::kConflict:
      return "conflict";
  }
  return "unknown";
}

std::string to_string(const Violation& v) {
  std::ostringstream os;
  os << to_string(v.kind) << ": ";
  switch (v.kind) {
    case ViolationKind::kNodeOverload:
      os << "node " << v.node << " offers " << v.expected << " " << v.resource
         << " but hosted instances need " << v.actual;
      break;
    case ViolationKind::kUnmetStrong:
    case ViolationKind::kUnmetWeak:
      os << "instance " << v.instance << " needs " << v.expected
         << " providers of " << v.interface << ", has " << v.actual;
      break;
    case ViolationKind::kCapacityExceeded:
      os << "instance " << v.instance << " serves " << v.interface
         << " to at most " << v.expected << " requirers, has " << v.actual;
      break;
    case ViolationKind::kConflict:
      os << "instance " << v.instance << " conflicts on " << v.interface
         << " provided by " << v.other;
      break;
  }
  return os.str();
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kCorrect:
      return "correct";
    case Verdict::kProvisionallyCorrectOnly:
      return "provisionally_correct_only";
    case Verdict::kInvalid:
      return "invalid";
  }
  return "unknown";
}

const Violation* CorrectnessReport::first_provisional_violation() const {
  for (const auto& v : violations) {
    if (!is_final_only(v.kind)) return &v;
  }
  return nullptr;
}

std::set<InterfaceName> interfaces_of(const Universe& universe) {
  std::set<InterfaceName> out;
  for (const auto& [name, t] : universe.types()) {
    for (const auto& [p, _] : t.provides) out.insert(p);
    for (const auto& [p, _] : t.strong_requires) out.insert(p);
    for (const auto& [p, _] : t.weak_requires) out.insert(p);
    out.insert(t.conflicts.begin(), t.conflicts.end());
  }
  return out;
}

std::optional<std::vector<TypeName>> check_universe(const Universe& universe) {
  // Edge T -> T' when T strongly requires something T' provides.
  std::map<TypeName, std::vector<TypeName>> edges;
  for (const auto& [name, t] : universe.types()) {
    auto& out = edges[name];
    for (const auto& [other_name, other] : universe.types()) {
      for (const auto& [p, _] : t.strong_requires) {
        if (other.provides_interface(p)) {
          out.push_back(other_name);
          break;
        }
      }
    }
  }

  enum class Mark { kWhite, kGrey, kBlack };
  std::map<TypeName, Mark> mark;
  for (const auto& [name, _] : edges) mark[name] = Mark::kWhite;

  std::vector<TypeName> stack;
  std::optional<std::vector<TypeName>> cycle;

  auto visit = [&](auto&& self, const TypeName& v) -> bool {
    mark[v] = Mark::kGrey;
    stack.push_back(v);
    for (const auto& w : edges[v]) {
      if (mark[w] == Mark::kGrey) {
        auto start = std::find(stack.begin(), stack.end(), w);
        cycle.emplace(start, stack.end());
        return true;
      }
      if (mark[w] == Mark::kWhite && self(self, w)) return true;
    }
    stack.pop_back();
    mark[v] = Mark::kBlack;
    return false;
  };

  for (const auto& [name, _] : edges) {
    if (mark[name] == Mark::kWhite && visit(visit, name)) return cycle;
  }
  return std::nullopt;
}

void validate_configuration(const Configuration& config,
                            const Universe& universe, const NodePool& nodes) {
  for (const auto& [id, placement] : config.instances) {
    require_identifier("instance", id);
    if (universe.find(placement.type) == nullptr) {
      throw InputError("instance " + id + " has unknown type " +
                       placement.type);
    }
    if (nodes.find(placement.node) == nullptr) {
      throw InputError("instance " + id + " is placed on unknown node " +
                       placement.node);
    }
  }
  for (const auto& b : config.bindings) {
    if (!config.contains(b.requirer) || !config.contains(b.provider)) {
      throw InputError("binding on " + b.interface +
                       " references an unknown instance");
    }
    if (b.requirer == b.provider) {
      throw InputError("instance " + b.requirer + " is bound to itself");
    }
    const auto& req = type_of(config, universe, b.requirer);
    const auto& prov = type_of(config, universe, b.provider);
    if (!req.requires_interface(b.interface) ||
        !prov.provides_interface(b.interface)) {
      throw InputError("binding (" + b.interface + ", " + b.requirer + ", " +
                       b.provider + ") breaks the interface side condition");
    }
  }
}

CorrectnessReport check_correct(const Configuration& config,
                                const Universe& universe,
                                const NodePool& nodes) {
  validate_configuration(config, universe, nodes);
  CorrectnessReport report;
  auto& out = report.violations;

  // Node resources.
  std::map<NodeName, ResourceMap> load;
  for (const auto& [id, placement] : config.instances) {
    auto& l = load[placement.node];
    for (const auto& [r, q] : universe.at(placement.type).resources) {
      l[r] += q;
    }
  }
  for (const auto& [node_name, l] : load) {
    const Node& node = nodes.at(node_name);
    for (const auto& [r, q] : l) {
      if (q > node.resource(r)) {
        out.push_back({.kind = ViolationKind::kNodeOverload,
                       .node = node_name,
                       .resource = r,
                       .expected = node.resource(r),
                       .actual = q});
      }
    }
  }

  // Outgoing and incoming binding counts per (instance, interface). Bindings
  // form a set, so each counted triple names a distinct partner.
  std::map<std::pair<InstanceId, InterfaceName>, int64_t> outgoing, incoming;
  for (const auto& b : config.bindings) {
    ++outgoing[{b.requirer, b.interface}];
    ++incoming[{b.provider, b.interface}];
  }
  auto count = [](const auto& m, const InstanceId& z, const InterfaceName& p) {
    auto it = m.find({z, p});
    return it == m.end() ? int64_t{0} : it->second;
  };

  for (const auto& [z, placement] : config.instances) {
    const auto& t = universe.at(placement.type);
    for (const auto& [p, n] : t.strong_requires) {
      int64_t have = count(outgoing, z, p);
      if (have < n) {
        out.push_back({.kind = ViolationKind::kUnmetStrong,
                       .instance = z,
                       .node = placement.node,
                       .interface = p,
                       .expected = n,
                       .actual = have});
      }
    }
    for (const auto& [p, arity] : t.provides) {
      int64_t have = count(incoming, z, p);
      if (!arity.admits(have)) {
        out.push_back({.kind = ViolationKind::kCapacityExceeded,
                       .instance = z,
                       .node = placement.node,
                       .interface = p,
                       .expected = arity.value(),
                       .actual = have});
      }
    }
    for (const auto& [p, n] : t.weak_requires) {
      int64_t have = count(outgoing, z, p);
      if (have < n) {
        out.push_back({.kind = ViolationKind::kUnmetWeak,
                       .instance = z,
                       .node = placement.node,
                       .interface = p,
                       .expected = n,
                       .actual = have});
      }
    }
  }

  // Conflicts: z forbids every other instance from providing p.
  std::map<InterfaceName, std::vector<InstanceId>> providers;
  for (const auto& [z, placement] : config.instances) {
    for (const auto& [p, _] : universe.at(placement.type).provides) {
      providers[p].push_back(z);
    }
  }
  for (const auto& [z, placement] : config.instances) {
    for (const auto& p : universe.at(placement.type).conflicts) {
      auto it = providers.find(p);
      if (it == providers.end()) continue;
      for (const auto& other : it->second) {
        if (other == z) continue;
        out.push_back({.kind = ViolationKind::kConflict,
                       .instance = z,
                       .node = placement.node,
                       .interface = p,
                       .other = other});
      }
    }
  }

  if (out.empty()) {
    report.verdict = Verdict::kCorrect;
  } else if (std::all_of(out.begin(), out.end(), [](const Violation& v) {
               return is_final_only(v.kind);
             })) {
    report.verdict = Verdict::kProvisionallyCorrectOnly;
  } else {
    report.verdict = Verdict::kInvalid;
  }
  return report;
}

CorrectnessReport check_provisional(const Configuration& config,
                                    const Universe& universe,
                                    const NodePool& nodes) {
  return check_correct(config, universe, nodes);
}

std::string_view to_string(ActionErrorCode code) {
  switch (code) {
    case ActionErrorCode::kUnknownInstance:
      return "unknown_instance";
    case ActionErrorCode::kSelfBinding:
      return "self_binding";
    case ActionErrorCode::kStrongPortBind:
      return "strong_port_bind";
    case ActionErrorCode::kNotWeakRequirement:
      return "not_weak_requirement";
    case ActionErrorCode::kNotProvided:
      return "not_provided";
    case ActionErrorCode::kBindingExists:
      return "binding_exists";
    case ActionErrorCode::kBindingAbsent:
      return "binding_absent";
    case ActionErrorCode::kInstanceExists:
      return "instance_exists";
    case ActionErrorCode::kUnknownType:
      return "unknown_type";
    case ActionErrorCode::kStrongBindingsMismatch:
      return "strong_bindings_mismatch";
    case ActionErrorCode::kStrongArityUnmet:
      return "strong_arity_unmet";
    case ActionErrorCode::kBadStrongProvider:
      return "bad_strong_provider";
  }
  return "unknown";
}

ActionError::ActionError(ActionErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code) {}

namespace {

// Shared side condition of bind and unbind.
void check_weak_port(const Configuration& config, const Binding& b,
                     const Universe& universe) {
  for (const auto* id : {&b.requirer, &b.provider}) {
    if (!config.contains(*id)) {
      throw ActionError(ActionErrorCode::kUnknownInstance, *id);
    }
  }
  if (b.requirer == b.provider) {
    throw ActionError(ActionErrorCode::kSelfBinding, b.requirer);
  }
  const auto& req = type_of(config, universe, b.requirer);
  if (req.requires_strong(b.interface)) {
    throw ActionError(ActionErrorCode::kStrongPortBind,
                      b.interface + " is a strong requirement of " +
                          b.requirer + "; strong ports are bound at creation");
  }
  if (!req.requires_weak(b.interface)) {
    throw ActionError(ActionErrorCode::kNotWeakRequirement,
                      b.requirer + " does not weakly require " + b.interface);
  }
  if (!type_of(config, universe, b.provider).provides_interface(b.interface)) {
    throw ActionError(ActionErrorCode::kNotProvided,
                      b.provider + " does not provide " + b.interface);
  }
}

}  // namespace

Configuration apply_action(const Configuration& config, const Action& action,
                           const Universe& universe) {
  return std::visit(
      Overloaded{
          [&](const BindAction& a) {
            check_weak_port(config, a.binding, universe);
            if (config.bindings.contains(a.binding)) {
              throw ActionError(ActionErrorCode::kBindingExists,
                                describe(action));
            }
            Configuration next = config;
            next.bindings.insert(a.binding);
            return next;
          },
          [&](const UnbindAction& a) {
            check_weak_port(config, a.binding, universe);
            if (!config.bindings.contains(a.binding)) {
              throw ActionError(ActionErrorCode::kBindingAbsent,
                                describe(action));
            }
            Configuration next = config;
            next.bindings.erase(a.binding);
            return next;
          },
          [&](const NewAction& a) {
            if (config.contains(a.id)) {
              throw ActionError(ActionErrorCode::kInstanceExists, a.id);
            }
            const MicroserviceType* t = universe.find(a.type);
            if (t == nullptr) {
              throw ActionError(ActionErrorCode::kUnknownType, a.type);
            }
            if (a.strong_bindings.size() != t->strong_requires.size() ||
                !std::equal(a.strong_bindings.begin(), a.strong_bindings.end(),
                            t->strong_requires.begin(),
                            [](const auto& x, const auto& y) {
                              return x.first == y.first;
                            })) {
              throw ActionError(ActionErrorCode::kStrongBindingsMismatch,
                                a.id + " must bind exactly the strong "
                                       "requirements of " + a.type);
            }
            Configuration next = config;
            next.instances.emplace(a.id, Placement{a.type, a.node});
            for (const auto& [p, providers] : a.strong_bindings) {
              int64_t need = t->strong_requires.at(p);
              if (static_cast<int64_t>(providers.size()) < need) {
                throw ActionError(ActionErrorCode::kStrongArityUnmet,
                                  a.id + " needs " + std::to_string(need) +
                                      " providers of " + p);
              }
              for (const auto& z : providers) {
                if (z == a.id || !config.contains(z) ||
                    !type_of(config, universe, z).provides_interface(p)) {
                  throw ActionError(ActionErrorCode::kBadStrongProvider,
                                    z + " cannot provide " + p + " to " +
                                        a.id);
                }
                next.bindings.insert({p, a.id, z});
              }
            }
            return next;
          },
          [&](const DelAction& a) {
            if (!config.contains(a.id)) {
              throw ActionError(ActionErrorCode::kUnknownInstance, a.id);
            }
            Configuration next = config;
            next.instances.erase(a.id);
            std::erase_if(next.bindings, [&](const Binding& b) {
              return b.requirer == a.id || b.provider == a.id;
            });
            return next;
          },
      },
      action);
}

int64_t config_cost(const Configuration& config, const NodePool& nodes) {
  std::set<NodeName> used;
  for (const auto& [_, placement] : config.instances) {
    used.insert(placement.node);
  }
  int64_t total = 0;
  for (const auto& n : used) total += nodes.at(n).cost;
  return total;
}

}  // namespace mdeploy
