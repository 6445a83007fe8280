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

#include "mdeploy/solver.h"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mdeploy/model.h"

namespace mdeploy::solver {

namespace {

using Clock = std::chrono::steady_clock;

// Right-hand side of the objective row before any incumbent exists.
constexpr int64_t kNoBound = std::numeric_limits<int64_t>::max() / 4;

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

// Incumbent shared by the workers of one solve call. Objective values are
// stored in minimization form (negated for maximization).
class Incumbent {
 public:
  explicit Incumbent(bool has_objective) : has_objective_(has_objective) {}

  int64_t bound() const { return best_.load(std::memory_order_relaxed); }
  bool stop_requested() const {
    return stop_.load(std::memory_order_relaxed);
  }
  void request_stop() { stop_.store(true, std::memory_order_relaxed); }

  // Returns true if `value` improved on the incumbent.
  bool offer(int64_t value, const std::vector<int64_t>& assignment) {
    std::lock_guard<std::mutex> lock(mu_);
    if (found_ && value >= best_.load()) return false;
    found_ = true;
    best_.store(value);
    assignment_ = assignment;
    if (!has_objective_) request_stop();
    return true;
  }

  void mark_proved() {
    proved_.store(true);
    request_stop();
  }

  bool found() const { return found_; }
  bool proved() const { return proved_.load(); }
  const std::vector<int64_t>& assignment() const { return assignment_; }

 private:
  bool has_objective_;
  std::mutex mu_;
  bool found_ = false;
  std::atomic<int64_t> best_{kNoBound};
  std::atomic<bool> stop_{false};
  std::atomic<bool> proved_{false};
  std::vector<int64_t> assignment_;
};

class Engine {
 public:
  Engine(const Model& model, Incumbent& incumbent, Clock::time_point deadline,
         uint64_t seed, int worker)
      : incumbent_(incumbent), deadline_(deadline) {
    const auto& vars = model.variables();
    const int n = static_cast<int>(vars.size());
    lo_.resize(n);
    hi_.resize(n);
    const bool maximize = !model.objective().terms.empty() &&
                          model.objective().sense == Sense::kMaximize;
    priority_.resize(n);
    high_first_.resize(n);
    for (int i = 0; i < n; ++i) {
      lo_[i] = vars[i].lo;
      hi_[i] = vars[i].hi;
      priority_[i] = vars[i].hint.priority;
      switch (vars[i].hint.order) {
        case ValueOrder::kObjective: high_first_[i] = maximize; break;
        case ValueOrder::kLowFirst: high_first_[i] = false; break;
        case ValueOrder::kHighFirst: high_first_[i] = true; break;
      }
    }
    watch_.resize(n);
    rank_.resize(n);
    std::iota(rank_.begin(), rank_.end(), 0);
    if (worker > 0) {
      std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + worker);
      std::shuffle(rank_.begin(), rank_.end(), rng);
    }

    for (const auto& c : model.linear()) {
      for (int32_t r : compile_rows(c)) add_prop(Kind::kRow, r, rows_[r]);
    }
    for (const auto& imp : model.implications()) {
      std::vector<int32_t> rows = compile_rows(imp.consequence);
      Imp compiled{imp.guard.index, imp.sense, std::move(rows)};
      const int32_t id = static_cast<int32_t>(imps_.size());
      imps_.push_back(std::move(compiled));
      const int32_t prop = static_cast<int32_t>(props_.size());
      props_.push_back({Kind::kImp, id});
      std::set<int32_t> vars_seen{imp.guard.index};
      for (int32_t r : imps_.back().rows) {
        for (int32_t k = rows_[r].begin; k < rows_[r].end; ++k) {
          vars_seen.insert(row_var_[k]);
        }
      }
      for (int32_t v : vars_seen) watch_[v].push_back(prop);
    }
    for (const auto& pb : model.products()) {
      const int32_t id = static_cast<int32_t>(prods_.size());
      prods_.push_back(pb);
      const int32_t prop = static_cast<int32_t>(props_.size());
      props_.push_back({Kind::kProd, id});
      std::set<int32_t> vars_seen{pb.bounded.index, pb.factor_a.index,
                                  pb.factor_b.index};
      for (int32_t v : vars_seen) watch_[v].push_back(prop);
    }

    const auto& obj = model.objective();
    if (!obj.terms.empty()) {
      LinearConstraint row;
      row.relation = Relation::kLe;
      row.constant = kNoBound;
      for (const auto& t : obj.terms) {
        row.terms.push_back(
            {obj.sense == Sense::kMinimize ? t.coef : -t.coef, t.var});
      }
      objective_row_ = compile_rows(row).front();
      objective_prop_ = add_prop(Kind::kRow, objective_row_,
                                 rows_[objective_row_]);
      objective_sign_ = obj.sense == Sense::kMinimize ? 1 : -1;
      objective_terms_ = obj.terms;
    }
    in_queue_.assign(props_.size(), 0);
  }

  // Runs the search to completion, to the deadline, or until another worker
  // finishes. Returns true if the search space was exhausted.
  bool run() {
    start_ = Clock::now();
    for (int32_t p = 0; p < static_cast<int32_t>(props_.size()); ++p) {
      enqueue(p);
    }
    if (!propagate()) return finish(true);

    std::vector<Frame> stack;
    bool descend = true;
    while (true) {
      if (descend) {
        if (should_abort()) return finish(false);
        ++stats_.nodes;
        const int32_t v = select_variable();
        if (v < 0) {
          on_solution();
          if (incumbent_.stop_requested() && !has_objective()) {
            return finish(false);
          }
          descend = false;
          continue;
        }
        const bool high = high_first_[v];
        const int64_t value = high ? hi_[v] : lo_[v];
        stack.push_back({trail_.size(), v, value, high, false});
        descend = branch(v, value, value);
        if (!descend) ++stats_.failures;
        continue;
      }
      // Backtrack to the most recent frame whose right branch is untried.
      bool resumed = false;
      while (!stack.empty()) {
        Frame& f = stack.back();
        undo(f.trail_mark);
        if (f.right_taken) {
          stack.pop_back();
          continue;
        }
        f.right_taken = true;
        const bool ok = f.high
                            ? branch(f.var, lo_[f.var], f.value - 1)
                            : branch(f.var, f.value + 1, hi_[f.var]);
        if (ok) {
          resumed = true;
          break;
        }
        ++stats_.failures;
        undo(f.trail_mark);
        stack.pop_back();
      }
      if (!resumed) return finish(true);
      descend = true;
    }
  }

  const SearchStats& stats() const { return stats_; }

 private:
  enum class Kind : uint8_t { kRow, kImp, kProd };
  struct Prop {
    Kind kind;
    int32_t index;
  };
  // sum(row_coef_[k] * x[row_var_[k]]) <= rhs over k in [begin, end).
  struct Row {
    int32_t begin;
    int32_t end;
    int64_t rhs;
  };
  struct Imp {
    int32_t guard;
    GuardSense sense;
    std::vector<int32_t> rows;
  };
  struct TrailEntry {
    int32_t var;
    int64_t lo;
    int64_t hi;
  };
  struct Frame {
    std::size_t trail_mark;
    int32_t var;
    int64_t value;
    bool high;
    bool right_taken;
  };

  bool has_objective() const { return objective_row_ >= 0; }

  std::vector<int32_t> compile_rows(const LinearConstraint& c) {
    std::vector<int32_t> out;
    auto emit = [&](int64_t sign, int64_t rhs) {
      Row row{static_cast<int32_t>(row_coef_.size()), 0, rhs};
      for (const auto& t : c.terms) {
        if (t.coef == 0) continue;
        row_coef_.push_back(sign * t.coef);
        row_var_.push_back(t.var.index);
      }
      row.end = static_cast<int32_t>(row_coef_.size());
      out.push_back(static_cast<int32_t>(rows_.size()));
      rows_.push_back(row);
    };
    if (c.relation == Relation::kLe || c.relation == Relation::kEq) {
      emit(1, c.constant);
    }
    if (c.relation == Relation::kGe || c.relation == Relation::kEq) {
      emit(-1, -c.constant);
    }
    return out;
  }

  int32_t add_prop(Kind kind, int32_t index, const Row& row) {
    const int32_t prop = static_cast<int32_t>(props_.size());
    props_.push_back({kind, index});
    for (int32_t k = row.begin; k < row.end; ++k) {
      watch_[row_var_[k]].push_back(prop);
    }
    return prop;
  }

  void enqueue(int32_t prop) {
    if (!in_queue_[prop]) {
      in_queue_[prop] = 1;
      queue_.push_back(prop);
    }
  }

  void touched(int32_t v) {
    for (int32_t p : watch_[v]) enqueue(p);
  }

  bool set_lo(int32_t v, int64_t value) {
    if (value <= lo_[v]) return true;
    if (value > hi_[v]) return false;
    trail_.push_back({v, lo_[v], hi_[v]});
    lo_[v] = value;
    touched(v);
    return true;
  }

  bool set_hi(int32_t v, int64_t value) {
    if (value >= hi_[v]) return true;
    if (value < lo_[v]) return false;
    trail_.push_back({v, lo_[v], hi_[v]});
    hi_[v] = value;
    touched(v);
    return true;
  }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      const TrailEntry& e = trail_.back();
      lo_[e.var] = e.lo;
      hi_[e.var] = e.hi;
      trail_.pop_back();
    }
  }

  int64_t min_activity(const Row& row) const {
    int64_t act = 0;
    for (int32_t k = row.begin; k < row.end; ++k) {
      const int64_t a = row_coef_[k];
      act += a * (a > 0 ? lo_[row_var_[k]] : hi_[row_var_[k]]);
    }
    return act;
  }

  bool propagate_row(const Row& row) {
    if (row.rhs >= kNoBound) return true;
    const int64_t act = min_activity(row);
    if (act > row.rhs) return false;
    for (int32_t k = row.begin; k < row.end; ++k) {
      const int32_t v = row_var_[k];
      const int64_t a = row_coef_[k];
      const int64_t slack = row.rhs - act + a * (a > 0 ? lo_[v] : hi_[v]);
      if (a > 0) {
        if (!set_hi(v, floor_div(slack, a))) return false;
      } else {
        if (!set_lo(v, ceil_div(slack, a))) return false;
      }
    }
    return true;
  }

  bool propagate_imp(const Imp& imp) {
    const int32_t g = imp.guard;
    const bool zero = imp.sense == GuardSense::kIsZero;
    const bool active = zero ? hi_[g] == 0 : lo_[g] >= 1;
    const bool impossible = zero ? lo_[g] >= 1 : hi_[g] == 0;
    if (impossible) return true;
    if (active) {
      for (int32_t r : imp.rows) {
        if (!propagate_row(rows_[r])) return false;
      }
      return true;
    }
    for (int32_t r : imp.rows) {
      if (min_activity(rows_[r]) > rows_[r].rhs) {
        return zero ? set_lo(g, 1) : set_hi(g, 0);
      }
    }
    return true;
  }

  bool propagate_prod(const ProductBound& pb) {
    const int32_t y = pb.bounded.index;
    const int32_t a = pb.factor_a.index;
    const int32_t b = pb.factor_b.index;
    const int64_t off = pb.offset;
    if (a == b) {
      auto f = [off](int64_t k) { return k * (k + off); };
      const int64_t ub = std::max(f(lo_[a]), f(hi_[a]));
      if (!set_hi(y, ub)) return false;
      if (lo_[y] > 0 && f(lo_[a]) < lo_[y]) {
        int64_t k = lo_[a];
        while (k <= hi_[a] && f(k) < lo_[y]) ++k;
        if (!set_lo(a, k)) return false;
      }
      return true;
    }
    const int64_t c_lo = lo_[b] + off;
    const int64_t c_hi = hi_[b] + off;
    const int64_t ub = std::max({lo_[a] * c_lo, lo_[a] * c_hi, hi_[a] * c_lo,
                                 hi_[a] * c_hi});
    if (!set_hi(y, ub)) return false;
    if (lo_[y] > 0 && c_lo >= 0) {
      if (c_hi <= 0 || hi_[a] <= 0) return false;
      if (!set_lo(a, ceil_div(lo_[y], c_hi))) return false;
      if (!set_lo(b, ceil_div(lo_[y], hi_[a]) - off)) return false;
    }
    return true;
  }

  bool propagate() {
    bool ok = true;
    while (!queue_.empty()) {
      const int32_t p = queue_.back();
      queue_.pop_back();
      in_queue_[p] = 0;
      if (!ok) continue;
      const Prop& prop = props_[p];
      switch (prop.kind) {
        case Kind::kRow:
          ok = propagate_row(rows_[prop.index]);
          break;
        case Kind::kImp:
          ok = propagate_imp(imps_[prop.index]);
          break;
        case Kind::kProd:
          ok = propagate_prod(prods_[prop.index]);
          break;
      }
    }
    return ok;
  }

  // Restricts v to [lo, hi] and propagates, including the current objective
  // cutoff.
  bool branch(int32_t v, int64_t lo, int64_t hi) {
    sync_bound();
    if (!set_lo(v, lo) || !set_hi(v, hi)) {
      clear_queue();
      return false;
    }
    if (has_objective()) enqueue(objective_prop_);
    if (!propagate()) {
      clear_queue();
      return false;
    }
    return true;
  }

  void clear_queue() {
    for (int32_t p : queue_) in_queue_[p] = 0;
    queue_.clear();
  }

  void sync_bound() {
    if (!has_objective()) return;
    const int64_t best = incumbent_.bound();
    if (best < kNoBound) rows_[objective_row_].rhs = best - 1;
  }

  int32_t select_variable() const {
    int32_t best = -1;
    int64_t best_size = 0;
    for (int32_t v = 0; v < static_cast<int32_t>(lo_.size()); ++v) {
      const int64_t size = hi_[v] - lo_[v];
      if (size == 0) continue;
      if (best < 0 || priority_[v] < priority_[best] ||
          (priority_[v] == priority_[best] &&
           (size < best_size ||
            (size == best_size && rank_[v] < rank_[best])))) {
        best = v;
        best_size = size;
      }
    }
    return best;
  }

  void on_solution() {
    ++stats_.solutions;
    int64_t value = 0;
    for (const auto& t : objective_terms_) value += t.coef * lo_[t.var.index];
    incumbent_.offer(objective_sign_ * value, lo_);
    sync_bound();
  }

  bool should_abort() {
    if ((stats_.nodes & 63) == 0 && incumbent_.stop_requested()) return true;
    if ((stats_.nodes & 1023) == 0 && Clock::now() >= deadline_) return true;
    return false;
  }

  bool finish(bool exhausted) {
    stats_.seconds =
        std::chrono::duration<double>(Clock::now() - start_).count();
    return exhausted;
  }

  Incumbent& incumbent_;
  Clock::time_point deadline_;
  Clock::time_point start_;

  std::vector<int64_t> lo_, hi_;
  std::vector<int32_t> rank_;
  std::vector<int> priority_;
  std::vector<char> high_first_;
  std::vector<TrailEntry> trail_;

  std::vector<int64_t> row_coef_;
  std::vector<int32_t> row_var_;
  std::vector<Row> rows_;
  std::vector<Imp> imps_;
  std::vector<ProductBound> prods_;
  std::vector<Prop> props_;
  std::vector<std::vector<int32_t>> watch_;
  std::vector<char> in_queue_;
  std::vector<int32_t> queue_;

  int32_t objective_row_ = -1;
  int32_t objective_prop_ = -1;
  int64_t objective_sign_ = 1;
  std::vector<Term> objective_terms_;

  SearchStats stats_;
};

Clock::time_point deadline_after(std::chrono::duration<double> limit) {
  const auto now = Clock::now();
  const auto room = std::chrono::duration<double>(Clock::time_point::max() -
                                                  now);
  if (limit >= room) return Clock::time_point::max();
  return now + std::chrono::duration_cast<Clock::duration>(limit);
}

}  // namespace

std::string_view to_string(Relation rel) {
  switch (rel) {
    case Relation::kLe:
      return "<=";
    case Relation::kGe:
      return ">=";
    case Relation::kEq:
      return "=";
  }
  return "?";
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kFeasibleUnproven:
      return "feasible_unproven";
    case SolveStatus::kUnsat:
      return "unsat";
    case SolveStatus::kTimeoutNoSolution:
      return "timeout_no_solution";
  }
  return "unknown";
}

VarId Model::add_variable(std::string name, int64_t lo, int64_t hi) {
  const int32_t index = static_cast<int32_t>(variables_.size());
  by_name_.emplace(name, index);
  variables_.push_back({std::move(name), lo, hi});
  return VarId{index};
}

std::optional<VarId> Model::find(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return VarId{it->second};
}

void Model::validate() const {
  const auto n = static_cast<int32_t>(variables_.size());
  if (by_name_.size() != variables_.size()) {
    throw InputError("model has duplicate variable names");
  }
  for (const auto& v : variables_) {
    if (!is_valid_identifier(v.name)) {
      throw InputError("invalid variable name '" + v.name + "'");
    }
    if (v.lo < 0 || v.lo > v.hi) {
      throw InputError("variable " + v.name + " has domain [" +
                       std::to_string(v.lo) + ", " + std::to_string(v.hi) +
                       "]");
    }
  }
  auto check_var = [n](VarId v) {
    if (v.index < 0 || v.index >= n) {
      throw InputError("constraint references unknown variable id " +
                       std::to_string(v.index));
    }
  };
  auto check_terms = [&](const std::vector<Term>& terms) {
    std::set<int32_t> seen;
    for (const auto& t : terms) {
      check_var(t.var);
      if (!seen.insert(t.var.index).second) {
        throw InputError("variable " + variables_[t.var.index].name +
                         " appears twice in one constraint");
      }
    }
  };
  for (const auto& c : linear_) check_terms(c.terms);
  for (const auto& imp : implications_) {
    check_var(imp.guard);
    check_terms(imp.consequence.terms);
  }
  for (const auto& pb : products_) {
    check_var(pb.bounded);
    check_var(pb.factor_a);
    check_var(pb.factor_b);
    if (pb.offset != 0 && pb.offset != -1) {
      throw InputError("product bound offset must be 0 or -1");
    }
  }
  check_terms(objective_.terms);
}

SolveOutcome solve(const Model& model, const Budget& budget) {
  model.validate();
  const auto deadline = deadline_after(budget.time_limit);
  const bool has_objective = !model.objective().terms.empty();
  Incumbent incumbent(has_objective);
  SolveOutcome outcome;

  const int threads = std::max(1, budget.threads);
  if (threads == 1) {
    Engine engine(model, incumbent, deadline, budget.seed, 0);
    if (engine.run()) incumbent.mark_proved();
    outcome.stats = engine.stats();
  } else {
    std::vector<SearchStats> per_worker(threads);
#pragma omp parallel num_threads(threads)
    {
#ifdef _OPENMP
      const int worker = omp_get_thread_num();
#else
      const int worker = 0;
#endif
      Engine engine(model, incumbent, deadline, budget.seed, worker);
      if (engine.run()) incumbent.mark_proved();
      per_worker[worker] = engine.stats();
    }
    for (const auto& s : per_worker) {
      outcome.stats.nodes += s.nodes;
      outcome.stats.failures += s.failures;
      outcome.stats.solutions += s.solutions;
      outcome.stats.seconds = std::max(outcome.stats.seconds, s.seconds);
    }
  }

  // A satisfaction search stops at its first solution, which is optimal.
  const bool proved = incumbent.proved() || (!has_objective && incumbent.found());
  if (incumbent.found()) {
    outcome.status =
        proved ? SolveStatus::kOptimal : SolveStatus::kFeasibleUnproven;
    outcome.assignment = incumbent.assignment();
    const int64_t sign =
        model.objective().sense == Sense::kMinimize ? 1 : -1;
    outcome.objective_value = has_objective ? sign * incumbent.bound() : 0;
  } else {
    outcome.status =
        proved ? SolveStatus::kUnsat : SolveStatus::kTimeoutNoSolution;
  }
  return outcome;
}

Evaluation evaluate(const Model& model, std::span<const int64_t> assignment) {
  const auto& vars = model.variables();
  if (assignment.size() != vars.size()) {
    throw InputError("assignment covers " + std::to_string(assignment.size()) +
                     " of " + std::to_string(vars.size()) + " variables");
  }
  auto value = [&](VarId v) { return assignment[v.index]; };
  auto holds = [&](const LinearConstraint& c) {
    int64_t sum = 0;
    for (const auto& t : c.terms) sum += t.coef * value(t.var);
    switch (c.relation) {
      case Relation::kLe:
        return sum <= c.constant;
      case Relation::kGe:
        return sum >= c.constant;
      case Relation::kEq:
        return sum == c.constant;
    }
    return false;
  };

  Evaluation out;
  out.satisfied = true;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (assignment[i] < vars[i].lo || assignment[i] > vars[i].hi) {
      out.satisfied = false;
    }
  }
  for (const auto& c : model.linear()) {
    if (!holds(c)) out.satisfied = false;
  }
  for (const auto& imp : model.implications()) {
    const int64_t g = value(imp.guard);
    const bool active = imp.sense == GuardSense::kIsZero ? g == 0 : g > 0;
    if (active && !holds(imp.consequence)) out.satisfied = false;
  }
  for (const auto& pb : model.products()) {
    if (value(pb.bounded) >
        value(pb.factor_a) * (value(pb.factor_b) + pb.offset)) {
      out.satisfied = false;
    }
  }
  for (const auto& t : model.objective().terms) {
    out.objective_value += t.coef * value(t.var);
  }
  return out;
}

}  // namespace mdeploy::solver
