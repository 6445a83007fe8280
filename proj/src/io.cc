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

#include "mdeploy/io.h"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace mdeploy::io {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw InputError(where + ": " + what);
}

void expect_object(const Json& j, std::initializer_list<std::string_view> keys,
                   const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) bad(where, "unknown key '" + key + "'");
  }
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) bad(where, std::string("missing '") + key + "'");
  return *it;
}

std::string string_of(const Json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

int64_t integer_of(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  if (j.is_number_unsigned() && j.get<uint64_t>() > INT64_MAX) {
    bad(where, "integer out of range");
  }
  return j.get<int64_t>();
}

int64_t natural_of(const Json& j, const std::string& where) {
  const int64_t v = integer_of(j, where);
  if (v < 0) bad(where, "expected a non-negative integer");
  return v;
}

ResourceMap resources_of(const Json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object of resource amounts");
  ResourceMap out;
  for (const auto& [r, q] : j.items()) out[r] = natural_of(q, where + "." + r);
  return out;
}

// {iface: arity|null} or [iface]; `parse` maps a non-null arity.
template <typename T, typename F>
std::map<InterfaceName, T> arity_map(const Json& j, T fallback, F parse,
                                     const std::string& where) {
  std::map<InterfaceName, T> out;
  if (j.is_array()) {
    for (const auto& p : j) {
      if (!out.emplace(string_of(p, where), fallback).second) {
        bad(where, "duplicate interface");
      }
    }
  } else if (j.is_object()) {
    for (const auto& [p, a] : j.items()) {
      out.emplace(p, a.is_null() ? fallback : parse(a, where + "." + p));
    }
  } else {
    bad(where, "expected an object or a list of interfaces");
  }
  return out;
}

Arity provided_arity(const Json& a, const std::string& where) {
  if (a.is_string()) {
    if (a.get<std::string>() == "inf") return Arity::infinite();
    bad(where, "arity must be an integer or \"inf\"");
  }
  return Arity(natural_of(a, where));
}

Json binding_json(const Binding& b) {
  return Json{{"interface", b.interface}, {"requirer", b.requirer},
              {"provider", b.provider}};
}

Binding parse_binding(const Json& j, const std::string& where,
                      std::initializer_list<std::string_view> keys) {
  expect_object(j, keys, where);
  return {string_of(field(j, "interface", where), where + ".interface"),
          string_of(field(j, "requirer", where), where + ".requirer"),
          string_of(field(j, "provider", where), where + ".provider")};
}

}  // namespace

Universe parse_universe(const Json& j) {
  if (!j.is_array()) bad("universe", "expected a list of microservice types");
  std::vector<MicroserviceType> types;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    std::string where = "universe[" + std::to_string(i) + "]";
    expect_object(e, {"name", "provides", "strong", "weak", "conflicts", "resources"},
                  where);
    MicroserviceType t;
    t.name = string_of(field(e, "name", where), where + ".name");
    where = "type " + t.name;
    if (e.contains("provides")) {
      t.provides = arity_map(e["provides"], Arity::infinite(), provided_arity,
                             where + ".provides");
    }
    if (e.contains("strong")) {
      t.strong_requires =
          arity_map(e["strong"], int64_t{1}, natural_of, where + ".strong");
    }
    if (e.contains("weak")) {
      t.weak_requires = arity_map(e["weak"], int64_t{1}, natural_of, where + ".weak");
    }
    if (e.contains("conflicts")) {
      const auto& c = e["conflicts"];
      if (!c.is_array()) bad(where + ".conflicts", "expected a list");
      for (const auto& p : c) t.conflicts.insert(string_of(p, where + ".conflicts"));
    }
    if (e.contains("resources")) {
      t.resources = resources_of(e["resources"], where + ".resources");
    }
    types.push_back(std::move(t));
  }
  return Universe(std::move(types));
}

Json to_json(const Universe& universe) {
  Json out = Json::array();
  for (const auto& [name, t] : universe.types()) {
    Json provides = Json::object();
    for (const auto& [p, a] : t.provides) {
      provides[p] = a.is_infinite() ? Json("inf") : Json(a.value());
    }
    Json strong = Json::object();
    for (const auto& [p, n] : t.strong_requires) strong[p] = n;
    Json weak = Json::object();
    for (const auto& [p, n] : t.weak_requires) weak[p] = n;
    Json conflicts = Json::array();
    for (const auto& p : t.conflicts) conflicts.push_back(p);
    Json resources = Json::object();
    for (const auto& [r, q] : t.resources) resources[r] = q;
    out.push_back(Json{{"name", name},
                       {"provides", std::move(provides)},
                       {"strong", std::move(strong)},
                       {"weak", std::move(weak)},
                       {"conflicts", std::move(conflicts)},
                       {"resources", std::move(resources)}});
  }
  return out;
}

NodePool parse_nodes(const Json& j) {
  if (!j.is_array()) bad("nodes", "expected a list of nodes");
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    std::string where = "nodes[" + std::to_string(i) + "]";
    expect_object(e, {"name", "resources", "cost", "count"}, where);
    Node node;
    node.name = string_of(field(e, "name", where), where + ".name");
    where = "node " + node.name;
    if (e.contains("resources")) {
      node.resources = resources_of(e["resources"], where + ".resources");
    }
    node.cost = natural_of(field(e, "cost", where), where + ".cost");
    if (!e.contains("count")) {
      nodes.push_back(std::move(node));
      continue;
    }
    const int64_t count = natural_of(e["count"], where + ".count");
    for (int64_t k = 1; k <= count; ++k) {
      Node copy = node;
      copy.name = node.name + "#" + std::to_string(k);
      nodes.push_back(std::move(copy));
    }
  }
  return NodePool(std::move(nodes));
}

Json to_json(const NodePool& nodes) {
  Json out = Json::array();
  for (const auto& node : nodes.nodes()) {
    Json resources = Json::object();
    for (const auto& [r, q] : node.resources) resources[r] = q;
    out.push_back(Json{{"name", node.name},
                       {"resources", std::move(resources)},
                       {"cost", node.cost}});
  }
  return out;
}

Configuration parse_configuration(const Json& j) {
  expect_object(j, {"instances", "bindings"}, "configuration");
  Configuration config;
  if (j.contains("instances")) {
    const auto& list = j["instances"];
    if (!list.is_array()) bad("configuration.instances", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "configuration.instances[" + std::to_string(i) + "]";
      expect_object(list[i], {"id", "type", "node"}, where);
      const auto id = string_of(field(list[i], "id", where), where + ".id");
      Placement pl{string_of(field(list[i], "type", where), where + ".type"),
                   string_of(field(list[i], "node", where), where + ".node")};
      if (!config.instances.emplace(id, std::move(pl)).second) {
        bad(where, "duplicate instance id " + id);
      }
    }
  }
  if (j.contains("bindings")) {
    const auto& list = j["bindings"];
    if (!list.is_array()) bad("configuration.bindings", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "configuration.bindings[" + std::to_string(i) + "]";
      if (!config.bindings
               .insert(parse_binding(list[i], where,
                                     {"interface", "requirer", "provider"}))
               .second) {
        bad(where, "duplicate binding");
      }
    }
  }
  return config;
}

Json to_json(const Configuration& config) {
  Json instances = Json::array();
  for (const auto& [id, pl] : config.instances) {
    instances.push_back(Json{{"id", id}, {"type", pl.type}, {"node", pl.node}});
  }
  Json bindings = Json::array();
  for (const auto& b : config.bindings) bindings.push_back(binding_json(b));
  return Json{{"instances", std::move(instances)}, {"bindings", std::move(bindings)}};
}

Action parse_action(const Json& j) {
  if (!j.is_object()) bad("action", "expected an object");
  const auto kind = string_of(field(j, "kind", "action"), "action.kind");
  const std::string where = "action " + kind;
  if (kind == "bind" || kind == "unbind") {
    const Binding b =
        parse_binding(j, where, {"kind", "interface", "requirer", "provider"});
    if (kind == "bind") return BindAction{b};
    return UnbindAction{b};
  }
  if (kind == "del") {
    expect_object(j, {"kind", "id"}, where);
    return DelAction{string_of(field(j, "id", where), where + ".id")};
  }
  if (kind == "new") {
    expect_object(j, {"kind", "id", "type", "node", "strong_bindings"}, where);
    NewAction a;
    a.id = string_of(field(j, "id", where), where + ".id");
    a.type = string_of(field(j, "type", where), where + ".type");
    a.node = string_of(field(j, "node", where), where + ".node");
    if (j.contains("strong_bindings")) {
      const auto& bs = j["strong_bindings"];
      if (!bs.is_object()) bad(where + ".strong_bindings", "expected an object");
      for (const auto& [p, ids] : bs.items()) {
        if (!ids.is_array()) bad(where + ".strong_bindings." + p, "expected a list");
        auto& set = a.strong_bindings[p];
        for (const auto& id : ids) set.insert(string_of(id, where + ".strong_bindings"));
      }
    }
    return a;
  }
  bad(where, "kind must be new, bind, unbind or del");
}

Json to_json(const Action& action) {
  struct Visitor {
    Json operator()(const BindAction& a) const { return with_kind("bind", a.binding); }
    Json operator()(const UnbindAction& a) const {
      return with_kind("unbind", a.binding);
    }
    static Json with_kind(const char* kind, const Binding& b) {
      return Json{{"kind", kind}, {"interface", b.interface}, {"requirer", b.requirer},
                  {"provider", b.provider}};
    }
    Json operator()(const NewAction& a) const {
      Json bs = Json::object();
      for (const auto& [p, ids] : a.strong_bindings) {
        bs[p] = Json::array();
        for (const auto& id : ids) bs[p].push_back(id);
      }
      return Json{{"kind", "new"},   {"id", a.id}, {"type", a.type},
                  {"node", a.node}, {"strong_bindings", std::move(bs)}};
    }
    Json operator()(const DelAction& a) const {
      return Json{{"kind", "del"}, {"id", a.id}};
    }
  };
  return std::visit(Visitor{}, action);
}

DeploymentPlan parse_plan(const Json& j) {
  if (!j.is_array()) bad("actions", "expected a list of actions");
  DeploymentPlan plan;
  for (const auto& a : j) plan.actions.push_back(parse_action(a));
  return plan;
}

Json to_json(const DeploymentPlan& plan) {
  Json out = Json::array();
  for (const auto& a : plan.actions) out.push_back(to_json(a));
  return out;
}

phase2::BindingMetric parse_metric(const Json& j) {
  expect_object(j, {"sense", "weights"}, "metric");
  const auto sense = string_of(field(j, "sense", "metric"), "metric.sense");
  if (sense != "min" && sense != "max") bad("metric.sense", "must be min or max");
  const auto& list = field(j, "weights", "metric");
  if (!list.is_array()) bad("metric.weights", "expected a list");
  std::map<phase1::BindKey, int64_t> weights;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "metric.weights[" + std::to_string(i) + "]";
    expect_object(list[i], {"interface", "requirer", "provider", "weight"}, where);
    phase1::BindKey key{
        string_of(field(list[i], "interface", where), where + ".interface"),
        string_of(field(list[i], "requirer", where), where + ".requirer"),
        string_of(field(list[i], "provider", where), where + ".provider")};
    if (!weights.emplace(key, integer_of(field(list[i], "weight", where), where))
             .second) {
      bad(where, "duplicate weight");
    }
  }
  return phase2::BindingMetric::weighted(
      std::move(weights),
      sense == "min" ? solver::Sense::kMinimize : solver::Sense::kMaximize);
}

Json to_json(const phase2::BindingMetric& metric) {
  if (metric.kind != phase2::BindingMetric::Kind::kWeighted) {
    throw InputError("only weighted metrics have a file form");
  }
  Json weights = Json::array();
  for (const auto& [key, w] : metric.weights) {
    const auto& [p, req, prov] = key;
    weights.push_back(
        Json{{"interface", p}, {"requirer", req}, {"provider", prov}, {"weight", w}});
  }
  return Json{{"sense", metric.sense == solver::Sense::kMinimize ? "min" : "max"},
              {"weights", std::move(weights)}};
}

std::string universe_hash(const Universe& universe) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : to_json(universe).dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PlanFile parse_plan_file(const Json& j) {
  expect_object(j, {"universe_hash", "target", "actions", "summary"}, "plan file");
  PlanFile f;
  f.universe_hash = string_of(field(j, "universe_hash", "plan file"), "universe_hash");
  f.target = string_of(field(j, "target", "plan file"), "target");
  f.plan = parse_plan(field(j, "actions", "plan file"));
  if (j.contains("summary")) f.summary = j["summary"];
  return f;
}

Json to_json(const PlanFile& file) {
  return Json{{"universe_hash", file.universe_hash},
              {"target", file.target},
              {"actions", to_json(file.plan)},
              {"summary", file.summary}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("failed writing " + path);
}

}  // namespace mdeploy::io
