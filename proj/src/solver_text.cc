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

// Text export and import of solver models.

#include <charconv>
#include <sstream>
#include <string>
#include <vector>

#include "mdeploy/model.h"
#include "mdeploy/solver.h"

namespace mdeploy::solver {

namespace {

void write_linear(std::ostream& os, const Model& model,
                  const LinearConstraint& c) {
  os << "lin " << to_string(c.relation) << ' ' << c.constant;
  for (const auto& t : c.terms) {
    os << ' ' << t.coef << '*' << model.variable(t.var).name;
  }
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

class Parser {
 public:
  explicit Parser(Model& model) : model_(model) {}

  void parse_line(std::string_view line, int line_no) {
    line_no_ = line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].starts_with('#')) return;
    const auto kind = tokens[0];
    if (kind == "var") {
      expect(tokens.size() == 4, "var needs a name and two bounds");
      model_.add_variable(std::string(tokens[1]), integer(tokens[2]),
                          integer(tokens[3]));
    } else if (kind == "lin") {
      model_.add_linear(linear(tokens, 0));
    } else if (kind == "imp") {
      expect(tokens.size() >= 5 && tokens[3] == ":" && tokens[4] == "lin",
             "imp needs '<name> <zero|pos> : lin ...'");
      Implication imp;
      imp.guard = var(tokens[1]);
      if (tokens[2] == "zero") {
        imp.sense = GuardSense::kIsZero;
      } else if (tokens[2] == "pos") {
        imp.sense = GuardSense::kIsPositive;
      } else {
        fail("guard sense must be zero or pos");
      }
      imp.consequence = linear(tokens, 4);
      model_.add_implication(std::move(imp));
    } else if (kind == "prod") {
      expect(tokens.size() == 4 && tokens[2] == "<=",
             "prod needs '<name> <= <name>*<name>[+k]'");
      ProductBound pb;
      pb.bounded = var(tokens[1]);
      std::string_view rhs = tokens[3];
      const auto star = rhs.find('*');
      expect(star != std::string_view::npos, "prod needs a '*'");
      pb.factor_a = var(rhs.substr(0, star));
      std::string_view rest = rhs.substr(star + 1);
      // The offset, if any, is the trailing +k or -k.
      const auto sign = rest.find_last_of("+-");
      if (sign != std::string_view::npos && sign > 0 &&
          model_.find(rest.substr(0, sign)).has_value()) {
        pb.factor_b = var(rest.substr(0, sign));
        std::string_view off = rest.substr(sign);
        if (off.starts_with('+')) off.remove_prefix(1);
        pb.offset = integer(off);
      } else {
        pb.factor_b = var(rest);
      }
      model_.add_product_bound(pb);
    } else if (kind == "obj") {
      expect(tokens.size() >= 2, "obj needs a sense");
      Objective obj;
      if (tokens[1] == "min") {
        obj.sense = Sense::kMinimize;
      } else if (tokens[1] == "max") {
        obj.sense = Sense::kMaximize;
      } else {
        fail("objective sense must be min or max");
      }
      for (std::size_t i = 2; i < tokens.size(); ++i) {
        obj.terms.push_back(term(tokens[i]));
      }
      model_.set_objective(std::move(obj));
    } else {
      fail("unknown line kind '" + std::string(kind) + "'");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("model line " + std::to_string(line_no_) + ": " + msg);
  }
  void expect(bool ok, const std::string& msg) const {
    if (!ok) fail(msg);
  }

  int64_t integer(std::string_view s) const {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail("bad integer '" + std::string(s) + "'");
    }
    return v;
  }

  VarId var(std::string_view name) const {
    auto v = model_.find(name);
    if (!v) fail("unknown variable '" + std::string(name) + "'");
    return *v;
  }

  Term term(std::string_view s) const {
    const auto star = s.find('*');
    expect(star != std::string_view::npos, "term needs '<coef>*<name>'");
    return Term{integer(s.substr(0, star)), var(s.substr(star + 1))};
  }

  // tokens[at] == "lin"
  LinearConstraint linear(const std::vector<std::string_view>& tokens,
                          std::size_t at) const {
    expect(tokens.size() >= at + 3, "lin needs a relation and a constant");
    LinearConstraint c;
    const auto rel = tokens[at + 1];
    if (rel == "<=") {
      c.relation = Relation::kLe;
    } else if (rel == ">=") {
      c.relation = Relation::kGe;
    } else if (rel == "=") {
      c.relation = Relation::kEq;
    } else {
      fail("bad relation '" + std::string(rel) + "'");
    }
    c.constant = integer(tokens[at + 2]);
    for (std::size_t i = at + 3; i < tokens.size(); ++i) {
      c.terms.push_back(term(tokens[i]));
    }
    return c;
  }

  Model& model_;
  int line_no_ = 0;
};

}  // namespace

std::string export_model(const Model& model) {
  std::ostringstream os;
  os << "# mdeploy-model v1\n";
  os << "# vars " << model.variables().size() << " linear "
     << model.linear().size() << " implications "
     << model.implications().size() << " products " << model.products().size()
     << "\n";
  for (const auto& v : model.variables()) {
    os << "var " << v.name << ' ' << v.lo << ' ' << v.hi << '\n';
  }
  for (const auto& c : model.linear()) {
    write_linear(os, model, c);
    os << '\n';
  }
  for (const auto& imp : model.implications()) {
    os << "imp " << model.variable(imp.guard).name << ' '
       << (imp.sense == GuardSense::kIsZero ? "zero" : "pos") << " : ";
    write_linear(os, model, imp.consequence);
    os << '\n';
  }
  for (const auto& pb : model.products()) {
    os << "prod " << model.variable(pb.bounded).name << " <= "
       << model.variable(pb.factor_a).name << '*'
       << model.variable(pb.factor_b).name;
    if (pb.offset > 0) os << '+' << pb.offset;
    if (pb.offset < 0) os << pb.offset;
    os << '\n';
  }
  const auto& obj = model.objective();
  if (!obj.terms.empty()) {
    os << "obj " << (obj.sense == Sense::kMinimize ? "min" : "max");
    for (const auto& t : obj.terms) {
      os << ' ' << t.coef << '*' << model.variable(t.var).name;
    }
    os << '\n';
  }
  return os.str();
}

Model parse_model(std::string_view text) {
  Model model;
  Parser parser(model);
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    parser.parse_line(text.substr(0, nl), line_no);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  model.validate();
  return model;
}

}  // namespace mdeploy::solver
