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

#include "mdeploy/cli.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <optional>

#include "CLI11.hpp"
#include "mdeploy/gen.h"
#include "mdeploy/io.h"
#include "mdeploy/model.h"
#include "mdeploy/pipeline.h"
#include "mdeploy/verifier.h"

namespace mdeploy::cli {

namespace {

struct Files {
  std::string universe;
  std::string nodes;
  std::string initial;
  std::string target;
};

struct Inputs {
  Universe universe;
  NodePool nodes;
  Configuration initial;
};

Inputs load(const Files& files) {
  Inputs in;
  in.universe = io::parse_universe(io::read_json_file(files.universe));
  in.nodes = io::parse_nodes(io::read_json_file(files.nodes));
  if (!files.initial.empty()) {
    in.initial = io::parse_configuration(io::read_json_file(files.initial));
  }
  return in;
}

void add_file_options(CLI::App* cmd, Files& files) {
  cmd->add_option("--universe", files.universe, "universe JSON file")->required();
  cmd->add_option("--nodes", files.nodes, "node pool JSON file")->required();
  cmd->add_option("--initial", files.initial, "initial configuration JSON file");
}

int64_t parse_count(const std::string& text, const std::string& what) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || v < 0) {
    throw InputError("bad " + what + " '" + text + "'");
  }
  return v;
}

phase2::BindingMetric parse_metric_flag(const std::string& flag) {
  if (flag == "none") return phase2::BindingMetric::none();
  if (flag == "min-cross") return phase2::BindingMetric::min_cross_node();
  if (flag == "max-bind") return phase2::BindingMetric::max_bindings();
  if (flag.starts_with("weighted:")) {
    return io::parse_metric(io::read_json_file(flag.substr(9)));
  }
  throw InputError("unknown metric '" + flag +
                   "' (expected none, min-cross, max-bind or weighted:PATH)");
}

void print_plan(std::ostream& out, const DeploymentPlan& plan) {
  out << "actions: " << plan.actions.size() << "\n";
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    out << "  " << i + 1 << ". " << describe(plan.actions[i]) << "\n";
  }
}

int cmd_validate(const Files& files, std::ostream& out, std::ostream& err) {
  const Inputs in = load(files);
  bool ok = true;
  out << "universe: " << in.universe.size() << " types, "
      << interfaces_of(in.universe).size() << " interfaces\n";
  if (auto cycle = check_universe(in.universe)) {
    err << "strong dependency cycle:";
    for (const auto& t : *cycle) err << " " << t;
    err << "\n";
    ok = false;
  }
  out << "nodes: " << in.nodes.size() << "\n";
  if (!files.target.empty() && in.universe.find(files.target) == nullptr) {
    err << "unknown target type " << files.target << "\n";
    ok = false;
  }
  if (!files.initial.empty()) {
    const auto report = check_provisional(in.initial, in.universe, in.nodes);
    out << "initial: " << in.initial.instances.size() << " instances, "
        << in.initial.bindings.size() << " bindings, " << to_string(report.verdict) << "\n";
    for (const auto& v : report.violations) {
      (is_final_only(v.kind) ? out : err) << "  " << to_string(v) << "\n";
    }
    ok = ok && report.provisionally_correct();
  }
  if (!ok) return kExitInvalidInput;
  out << "ok\n";
  return kExitOk;
}

struct PlanOptions {
  std::string metric = "none";
  std::string mode = "scratch";
  double time_limit = 300.0;
  std::vector<std::string> bounds;
  uint64_t seed = 0;
  int threads = 1;
  std::string emit_model;
  std::string out;
};

int cmd_plan(const Files& files, const PlanOptions& opts, std::ostream& out,
             std::ostream& err) {
  Inputs in = load(files);
  pipeline::Request req;
  req.universe = std::move(in.universe);
  req.nodes = std::move(in.nodes);
  req.initial = std::move(in.initial);
  req.target = files.target;
  req.metric = parse_metric_flag(opts.metric);
  if (opts.mode == "scratch") {
    req.mode = pipeline::Mode::kScratch;
  } else if (opts.mode == "incremental") {
    req.mode = pipeline::Mode::kIncremental;
  } else {
    throw InputError("mode must be scratch or incremental");
  }
  if (opts.time_limit < 0) throw InputError("negative time limit");
  req.budget.time_limit = std::chrono::duration<double>(opts.time_limit);
  req.budget.seed = opts.seed;
  req.budget.threads = std::max(1, opts.threads);
  for (const auto& b : opts.bounds) {
    const auto eq = b.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("bound must be TYPE=N: " + b);
    req.bound_overrides[b.substr(0, eq)] = parse_count(b.substr(eq + 1), "bound");
  }
  req.export_models = !opts.emit_model.empty();

  const auto result = pipeline::plan_deployment(req);
  if (req.export_models) {
    io::write_text_file(opts.emit_model, result.phase1_model);
    if (!result.phase2_model.empty()) {
      io::write_text_file(opts.emit_model + ".phase2", result.phase2_model);
    }
  }
  const auto summary = pipeline::summarize(req, result);
  switch (result.verdict) {
    case pipeline::Verdict::kNo:
      out << "no\n";
      return kExitNo;
    case pipeline::Verdict::kTimeoutNoSolution:
      err << "time limit reached without a plan\n";
      return kExitTimeout;
    default:
      break;
  }
  out << "status: " << to_string(result.verdict) << "\n";
  out << "cost: " << result.instance_plan->cost << "\n";
  out << "counts:";
  for (const auto& [t, n] : result.instance_plan->total) {
    if (n > 0) out << " " << t << "=" << n;
  }
  out << "\nused nodes:";
  for (const auto& n : result.instance_plan->used_nodes) out << " " << n;
  out << "\n";
  print_plan(out, *result.plan);
  if (!opts.out.empty()) {
    io::PlanFile file{io::universe_hash(req.universe), req.target, *result.plan, summary};
    io::write_text_file(opts.out, io::to_json(file).dump(2) + "\n");
  }
  if (result.verdict == pipeline::Verdict::kFeasibleUnproven) {
    err << "time limit reached: plan is valid but not proven optimal\n";
    return kExitUnproven;
  }
  return kExitOk;
}

int cmd_check(const Files& files, const std::string& plan_path, std::ostream& out,
              std::ostream& err) {
  const Inputs in = load(files);
  const auto file = io::parse_plan_file(io::read_json_file(plan_path));
  if (file.universe_hash != io::universe_hash(in.universe)) {
    err << "plan was made for a different universe (hash " << file.universe_hash
        << ", universe has " << io::universe_hash(in.universe) << ")\n";
    return kExitInvalidInput;
  }
  const TypeName target = files.target.empty() ? file.target : files.target;
  const auto trace = verifier::run_plan(in.initial, file.plan, in.universe, in.nodes);
  if (!trace.valid()) {
    out << "invalid at step " << *trace.violation_step << " of " << file.plan.actions.size()
        << ": " << to_string(trace.finding->kind) << ": " << trace.finding->message << "\n";
    return kExitNo;
  }
  const auto output = verifier::check_problem_output(trace, target, in.nodes);
  if (!output.has_target) {
    out << "invalid: final configuration has no instance of " << target << "\n";
    return kExitNo;
  }
  out << "valid: " << file.plan.actions.size() << " steps, final cost " << output.final_cost
      << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal microservice deployment planner", "mdeploy"};
  app.require_subcommand(1);

  Files files;
  PlanOptions plan_opts;
  std::string plan_path;

  auto* validate = app.add_subcommand("validate", "check input files");
  add_file_options(validate, files);
  validate->add_option("--target", files.target, "target type");

  auto* plan = app.add_subcommand("plan", "synthesize an optimal deployment plan");
  add_file_options(plan, files);
  plan->add_option("--target", files.target, "target type")->required();
  plan->add_option("--metric", plan_opts.metric,
                   "binding metric: none, min-cross, max-bind or weighted:PATH");
  plan->add_option("--mode", plan_opts.mode, "scratch or incremental");
  plan->add_option("--time-limit", plan_opts.time_limit, "seconds");
  plan->add_option("--bound", plan_opts.bounds, "instance bound TYPE=N");
  plan->add_option("--seed", plan_opts.seed, "portfolio seed");
  plan->add_option("--threads", plan_opts.threads, "search threads");
  plan->add_option("--emit-model", plan_opts.emit_model,
                   "write the solver models to PATH and PATH.phase2");
  plan->add_option("--out", plan_opts.out, "write the plan file");

  auto* check = app.add_subcommand("check", "replay a plan file");
  add_file_options(check, files);
  check->add_option("--plan", plan_path, "plan file")->required();
  check->add_option("--target", files.target, "target type (default: the plan's)");

  auto* gen = app.add_subcommand("gen", "write generated problem files");
  gen->require_subcommand(1);
  std::string gen_out;
  std::vector<int64_t> numbers;
  int64_t capacity = 0;
  uint64_t gen_seed = 0;
  gen::RandomSizes sizes;
  auto* partition = gen->add_subcommand("partition", "partition gadget");
  partition->add_option("--set", numbers, "elements, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber);
  auto* binpack = gen->add_subcommand("binpack", "bin-packing gadget");
  binpack->add_option("--sizes", numbers, "item sizes, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  binpack->add_option("--capacity", capacity, "bin capacity")->required();
  auto* random = gen->add_subcommand("random", "seeded random solvable instance");
  random->add_option("--seed", gen_seed, "seed");
  random->add_option("--types", sizes.max_types, "maximum number of types");
  random->add_option("--nodes", sizes.max_nodes, "maximum number of nodes");
  for (auto* sub : {partition, binpack, random}) {
    sub->add_option("--out", gen_out, "output directory")->required();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    if (validate->parsed()) return cmd_validate(files, out, err);
    if (plan->parsed()) return cmd_plan(files, plan_opts, out, err);
    if (check->parsed()) return cmd_check(files, plan_path, out, err);
    gen::Problem problem;
    if (partition->parsed()) {
      problem = gen::partition(numbers);
    } else if (binpack->parsed()) {
      problem = gen::binpack(numbers, capacity);
    } else {
      if (sizes.max_types < 1 || sizes.max_nodes < 1) {
        throw InputError("random instances need at least one type and one node");
      }
      problem = gen::random_solvable(gen_seed, sizes);
    }
    out << gen::write_problem(problem, gen_out) << "\n";
    return kExitOk;
  } catch (const InputError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace mdeploy::cli
