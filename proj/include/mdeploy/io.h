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

// JSON file formats for universes, node pools, configurations, plans and
// binding metrics.
//
// Universe:  [{"name", "provides": {iface: int|"inf"|null}, "strong": {iface:
//            int|null}, "weak": {...}, "conflicts": [iface], "resources":
//            {res: int}}]. A null arity, or a list of interface names instead
//            of an object, takes the default (inf for provides, 1 for
//            requires).
// Nodes:     [{"name", "resources": {res: int}, "cost": int, "count": int}].
//            With "count" the entry expands to name#1..name#count.
// Config:    {"instances": [{"id", "type", "node"}], "bindings":
//            [{"interface", "requirer", "provider"}]}
// Plan file: {"universe_hash", "target", "actions": [...], "summary": {...}}
//            where an action is {"kind": "new", "id", "type", "node",
//            "strong_bindings": {iface: [ids]}} or {"kind": "bind"|"unbind",
//            "interface", "requirer", "provider"} or {"kind": "del", "id"}.
// Metric:    {"sense": "min"|"max", "weights": [{"interface", "requirer",
//            "provider", "weight"}]} with requirer and provider type names.

#ifndef MDEPLOY_IO_H_
#define MDEPLOY_IO_H_

#include <string>

#include "json.hpp"
#include "mdeploy/model.h"
#include "mdeploy/phase2.h"

namespace mdeploy::io {

using Json = nlohmann::ordered_json;

// All parse_* functions throw InputError on malformed input.
Universe parse_universe(const Json& j);
Json to_json(const Universe& universe);

NodePool parse_nodes(const Json& j);
Json to_json(const NodePool& nodes);

Configuration parse_configuration(const Json& j);
Json to_json(const Configuration& config);

Action parse_action(const Json& j);
Json to_json(const Action& action);

DeploymentPlan parse_plan(const Json& j);
Json to_json(const DeploymentPlan& plan);

phase2::BindingMetric parse_metric(const Json& j);
Json to_json(const phase2::BindingMetric& metric);

// FNV-1a 64 of the canonical universe serialization, as 16 hex digits.
std::string universe_hash(const Universe& universe);

struct PlanFile {
  std::string universe_hash;
  TypeName target;
  DeploymentPlan plan;
  Json summary = Json::object();
};

PlanFile parse_plan_file(const Json& j);
Json to_json(const PlanFile& file);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mdeploy::io

#endif  // MDEPLOY_IO_H_
