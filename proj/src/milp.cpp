// Copyright 2026 The caesuc Authors
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

#include "caesuc/milp.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "caesuc/util.hpp"

namespace caesuc::milp {

namespace {

constexpr double kCoefDropTol = 1e-12;

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
  }
  return true;
}

}  // namespace

const char* to_string(SolStatus status) {
  switch (status) {
    case SolStatus::kOptimal: return "optimal";
    case SolStatus::kFeasible: return "feasible";
    case SolStatus::kInfeasible: return "infeasible";
    case SolStatus::kUnbounded: return "unbounded";
    case SolStatus::kLimit: return "limit";
  }
  return "unknown";
}

void MilpModel::require_mutable() const {
  if (frozen_) fail(ErrorKind::kArgument, "model '" + name_ + "' is frozen");
}

VarId MilpModel::add_variable(const std::string& name, VarKind kind, double lb,
                              double ub) {
  require_mutable();
  if (!valid_name(name)) {
    fail(ErrorKind::kArgument, "invalid variable name '" + name + "'");
  }
  if (var_names_.count(name)) {
    fail(ErrorKind::kArgument, "duplicate variable name '" + name + "'");
  }
  if (!(lb <= ub)) {
    fail(ErrorKind::kArgument, "variable '" + name + "': inverted bounds [" +
                                   format_double(lb) + ", " + format_double(ub) + "]");
  }
  if (kind == VarKind::kBinary && (lb < 0 || ub > 1)) {
    fail(ErrorKind::kArgument, "binary variable '" + name + "' must have bounds within [0,1]");
  }
  if (!std::isfinite(lb) || !std::isfinite(ub)) {
    fail(ErrorKind::kArgument, "variable '" + name + "' must have finite bounds");
  }
  const VarId id{static_cast<int32_t>(vars_.size())};
  vars_.push_back({name, kind, lb, ub});
  obj_.push_back(0.0);
  var_names_.emplace(name, id.value);
  return id;
}

ConId MilpModel::add_constraint(const std::string& name, const LinExpr& expr,
                                Sense sense, double rhs) {
  require_mutable();
  if (!valid_name(name)) {
    fail(ErrorKind::kArgument, "invalid constraint name '" + name + "'");
  }
  if (con_names_.count(name)) {
    fail(ErrorKind::kArgument, "duplicate constraint name '" + name + "'");
  }
  // Merge repeated variables, then drop negligible coefficients.
  std::map<int32_t, double> merged;
  for (const LinTerm& t : expr.terms()) {
    if (!t.var.valid() || t.var.value >= static_cast<int32_t>(vars_.size())) {
      fail(ErrorKind::kArgument, "constraint '" + name + "': unknown variable handle");
    }
    merged[t.var.value] += t.coef;
  }
  Constraint con;
  con.name = name;
  con.sense = sense;
  con.rhs = rhs;
  for (const auto& [var, coef] : merged) {
    if (std::abs(coef) < kCoefDropTol) continue;
    con.terms.push_back({VarId{var}, coef});
  }
  if (con.terms.empty()) {
    fail(ErrorKind::kArgument, "constraint '" + name + "' is empty after coefficient drop");
  }
  const ConId id{static_cast<int32_t>(cons_.size())};
  cons_.push_back(std::move(con));
  con_names_.emplace(name, id.value);
  return id;
}

void MilpModel::add_objective_term(VarId var, double coef) {
  require_mutable();
  if (!var.valid() || var.value >= static_cast<int32_t>(vars_.size())) {
    fail(ErrorKind::kArgument, "objective: unknown variable handle");
  }
  obj_[var.value] += coef;
}

void MilpModel::add_objective_constant(double value) {
  require_mutable();
  obj_constant_ += value;
}

void MilpModel::freeze() { frozen_ = true; }

ModelStats MilpModel::stats() const {
  ModelStats s;
  s.variables = num_variables();
  s.constraints = num_constraints();
  for (const Variable& v : vars_) {
    if (v.kind == VarKind::kBinary) ++s.binaries;
  }
  for (const Constraint& c : cons_) s.nonzeros += static_cast<int64_t>(c.terms.size());
  return s;
}

const Variable& MilpModel::variable(VarId id) const {
  if (!id.valid() || id.value >= static_cast<int32_t>(vars_.size())) {
    fail(ErrorKind::kArgument, "unknown variable handle");
  }
  return vars_[id.value];
}

const Constraint& MilpModel::constraint(ConId id) const {
  if (!id.valid() || id.value >= static_cast<int32_t>(cons_.size())) {
    fail(ErrorKind::kArgument, "unknown constraint handle");
  }
  return cons_[id.value];
}

VarId MilpModel::find_variable(const std::string& name) const {
  auto it = var_names_.find(name);
  return it == var_names_.end() ? VarId{} : VarId{it->second};
}

double MilpModel::objective_value(const std::vector<double>& values) const {
  double total = obj_constant_;
  for (size_t i = 0; i < obj_.size() && i < values.size(); ++i) {
    total += obj_[i] * values[i];
  }
  return total;
}

// ---------------------------------------------------------------------------
// LP format

namespace {

// Appends " + c name" / " - c name" style terms, wrapping long lines.
class ExprWriter {
 public:
  explicit ExprWriter(std::ostringstream& os) : os_(os) {}

  void term(double coef, const std::string& name, bool first) {
    std::string piece;
    if (first) {
      piece = (coef < 0 ? "-" : "") + format_double(std::abs(coef)) + " " + name;
    } else {
      piece = (coef < 0 ? "- " : "+ ") + format_double(std::abs(coef)) + " " + name;
    }
    append(piece);
  }

  void constant(double value, bool first) {
    std::string piece;
    if (first) {
      piece = format_double(value);
    } else {
      piece = (value < 0 ? "- " : "+ ") + format_double(std::abs(value));
    }
    append(piece);
  }

  void tail(const std::string& text) { append(text); }

 private:
  void append(const std::string& piece) {
    if (column_ + piece.size() + 1 > 240) {
      os_ << "\n     ";
      column_ = 5;
    }
    os_ << ' ' << piece;
    column_ += piece.size() + 1;
  }

  std::ostringstream& os_;
  size_t column_ = 0;
};

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::kLe: return "<=";
    case Sense::kEq: return "=";
    case Sense::kGe: return ">=";
  }
  return "?";
}

}  // namespace

std::string emit_lp(const MilpModel& model) {
  std::ostringstream os;
  os << "\\ Problem: " << model.name() << '\n';
  os << "Minimize\n obj:";
  {
    ExprWriter w(os);
    bool first = true;
    for (int i = 0; i < model.num_variables(); ++i) {
      const double c = model.objective()[i];
      if (c == 0) continue;
      w.term(c, model.variables()[i].name, first);
      first = false;
    }
    if (model.objective_constant() != 0 || first) {
      w.constant(model.objective_constant(), first);
    }
  }
  os << "\nSubject To\n";
  for (const Constraint& con : model.constraints()) {
    os << ' ' << con.name << ':';
    ExprWriter w(os);
    bool first = true;
    for (const LinTerm& t : con.terms) {
      w.term(t.coef, model.variables()[t.var.value].name, first);
      first = false;
    }
    w.tail(std::string(sense_text(con.sense)) + " " + format_double(con.rhs));
    os << '\n';
  }
  os << "Bounds\n";
  for (const Variable& v : model.variables()) {
    if (v.lb == v.ub) {
      os << ' ' << v.name << " = " << format_double(v.lb) << '\n';
    } else {
      os << ' ' << format_double(v.lb) << " <= " << v.name << " <= "
         << format_double(v.ub) << '\n';
    }
  }
  bool any_binary = false;
  for (const Variable& v : model.variables()) {
    if (v.kind == VarKind::kBinary) { any_binary = true; break; }
  }
  if (any_binary) {
    os << "Binaries\n";
    size_t column = 0;
    for (const Variable& v : model.variables()) {
      if (v.kind != VarKind::kBinary) continue;
      if (column + v.name.size() + 1 > 240) {
        os << '\n';
        column = 0;
      }
      os << ' ' << v.name;
      column += v.name.size() + 1;
    }
    os << '\n';
  }
  os << "End\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// MPS fixed format

namespace {

std::string mps_value(double v) {
  std::string s = format_double(v);
  if (s.size() <= 12) return s;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string mps_var(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "x%07d", index);
  return buf;
}

std::string mps_con(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "c%07d", index);
  return buf;
}

void mps_line(std::ostringstream& os, const std::string& f1, const std::string& f2,
              const std::string& f3 = "", const std::string& f4 = "") {
  // Fixed fields at columns 2, 5, 15, 25.
  std::string line = " " + f1;
  auto pad_to = [&line](size_t col) {
    if (line.size() < col) line.append(col - line.size(), ' ');
    else line += ' ';
  };
  if (!f2.empty()) { pad_to(4); line += f2; }
  if (!f3.empty()) { pad_to(14); line += f3; }
  if (!f4.empty()) { pad_to(24); line += f4; }
  os << line << '\n';
}

}  // namespace

std::string emit_mps(const MilpModel& model) {
  std::ostringstream os;
  os << "NAME          " << model.name() << '\n';
  os << "ROWS\n";
  mps_line(os, "N", "OBJ");
  for (int c = 0; c < model.num_constraints(); ++c) {
    const char* kind = "L";
    switch (model.constraints()[c].sense) {
      case Sense::kLe: kind = "L"; break;
      case Sense::kEq: kind = "E"; break;
      case Sense::kGe: kind = "G"; break;
    }
    mps_line(os, kind, mps_con(c));
  }

  // Column-major coefficients.
  std::vector<std::vector<std::pair<int, double>>> columns(model.num_variables());
  for (int c = 0; c < model.num_constraints(); ++c) {
    for (const LinTerm& t : model.constraints()[c].terms) {
      columns[t.var.value].push_back({c, t.coef});
    }
  }
  os << "COLUMNS\n";
  bool in_integer = false;
  int marker = 0;
  for (int v = 0; v < model.num_variables(); ++v) {
    const bool is_binary = model.variables()[v].kind == VarKind::kBinary;
    if (is_binary != in_integer) {
      mps_line(os, "", "M" + std::to_string(marker++), "'MARKER'",
               is_binary ? "'INTORG'" : "'INTEND'");
      in_integer = is_binary;
    }
    if (model.objective()[v] != 0) {
      mps_line(os, "", mps_var(v), "OBJ", mps_value(model.objective()[v]));
    }
    for (const auto& [row, coef] : columns[v]) {
      mps_line(os, "", mps_var(v), mps_con(row), mps_value(coef));
    }
  }
  if (in_integer) {
    mps_line(os, "", "M" + std::to_string(marker++), "'MARKER'", "'INTEND'");
  }

  os << "RHS\n";
  if (model.objective_constant() != 0) {
    mps_line(os, "", "RHS", "OBJ", mps_value(-model.objective_constant()));
  }
  for (int c = 0; c < model.num_constraints(); ++c) {
    if (model.constraints()[c].rhs != 0) {
      mps_line(os, "", "RHS", mps_con(c), mps_value(model.constraints()[c].rhs));
    }
  }

  os << "BOUNDS\n";
  for (int v = 0; v < model.num_variables(); ++v) {
    const Variable& var = model.variables()[v];
    if (var.kind == VarKind::kBinary && var.lb == 0 && var.ub == 1) {
      mps_line(os, "BV", "BND", mps_var(v));
      continue;
    }
    if (var.lb == var.ub) {
      mps_line(os, "FX", "BND", mps_var(v), mps_value(var.lb));
      continue;
    }
    mps_line(os, "LO", "BND", mps_var(v), mps_value(var.lb));
    mps_line(os, "UP", "BND", mps_var(v), mps_value(var.ub));
  }
  os << "ENDATA\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// LP parsing (canonical subset)

namespace {

struct Token {
  std::string text;
  int line = 0;
};

std::vector<Token> lp_tokens(const std::string& text) {
  std::vector<Token> out;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    if (size_t pos = raw.find('\\'); pos != std::string::npos) raw.erase(pos);
    std::string current;
    auto flush = [&]() {
      if (!current.empty()) {
        out.push_back({current, lineno});
        current.clear();
      }
    };
    for (char c : raw) {
      if (c == ' ' || c == '\t' || c == '\r') {
        flush();
      } else if ((c == '+' || c == '-') && !current.empty() &&
                 (current.back() == 'e' || current.back() == 'E') &&
                 std::isdigit(static_cast<unsigned char>(current[0]))) {
        current += c;  // exponent sign inside a numeral
      } else if (c == ':' || c == '+' || c == '-') {
        flush();
        out.push_back({std::string(1, c), lineno});
      } else if (c == '<' || c == '>' || c == '=') {
        // Collect relational operators as a unit (<=, >=, =).
        if (!current.empty() && current != "<" && current != ">") flush();
        current += c;
        if (current == "<=" || current == ">=") flush();
      } else {
        current += c;
      }
    }
    flush();
  }
  return out;
}

class LpParser {
 public:
  LpParser(const std::string& text, const std::string& name)
      : tokens_(lp_tokens(text)), name_(name) {}

  MilpModel parse() {
    expect_keyword("Minimize");
    expect_keyword("obj");
    expect(":");
    parse_expr(&objective_, &objective_constant_, {"Subject"});
    expect_keyword("Subject");
    expect_keyword("To");
    while (!at_keyword("Bounds")) {
      RawConstraint con;
      con.name = next().text;
      expect(":");
      parse_expr(&con.terms, nullptr, {});
      con.sense = next().text;
      con.rhs = signed_number();
      constraints_.push_back(std::move(con));
    }
    expect_keyword("Bounds");
    while (!at_keyword("Binaries") && !at_keyword("End")) {
      parse_bound();
    }
    if (at_keyword("Binaries")) {
      next();
      while (!at_keyword("End")) binaries_.insert(next().text);
    }
    expect_keyword("End");
    return build();
  }

 private:
  struct RawConstraint {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    std::string sense;
    double rhs = 0;
  };

  [[noreturn]] void error(const std::string& message, int line) {
    fail(ErrorKind::kIo, name_ + ".lp:" + std::to_string(line) + ": " + message);
  }

  const Token& peek() {
    if (pos_ >= tokens_.size()) error("unexpected end of file", 0);
    return tokens_[pos_];
  }
  Token next() {
    Token t = peek();
    ++pos_;
    return t;
  }
  bool at_keyword(const std::string& kw) {
    return pos_ < tokens_.size() && tokens_[pos_].text == kw;
  }
  void expect(const std::string& text) {
    Token t = next();
    if (t.text != text) error("expected '" + text + "', got '" + t.text + "'", t.line);
  }
  void expect_keyword(const std::string& kw) { expect(kw); }

  static bool is_number(const std::string& s, double* out) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return false;
    *out = v;
    return true;
  }
  double number(const Token& t) {
    double v = 0;
    if (!is_number(t.text, &v)) error("expected a number, got '" + t.text + "'", t.line);
    return v;
  }
  double signed_number() {
    double sign = 1;
    if (at_keyword("-")) { sign = -1; next(); }
    else if (at_keyword("+")) { next(); }
    return sign * number(next());
  }

  // signed-term sequence: [-] c name | [+|-] c name ... ; a bare number is a
  // constant. Stops at a sense token, at a listed stop keyword, or (for
  // constraints) when the next token is not +/-.
  void parse_expr(std::vector<std::pair<std::string, double>>* terms,
                  double* constant, const std::vector<std::string>& stops) {
    bool first = true;
    while (pos_ < tokens_.size()) {
      const std::string& t = peek().text;
      if (t == "<=" || t == ">=" || t == "=") break;
      bool stop = false;
      for (const std::string& s : stops) {
        if (t == s) stop = true;
      }
      if (stop) break;
      if (!first && t != "+" && t != "-") break;

      double sign = 1;
      if (t == "+" || t == "-") {
        sign = (t == "-") ? -1 : 1;
        next();
      }
      Token num_tok = next();
      double value = number(num_tok);
      // A following identifier makes it a term; otherwise it is a constant.
      if (pos_ < tokens_.size()) {
        const std::string& id = peek().text;
        double dummy;
        const bool is_ident = !is_number(id, &dummy) && id != "+" && id != "-" &&
                              id != "<=" && id != ">=" && id != "=" && id != ":";
        bool ident_is_stop = false;
        for (const std::string& s : stops) {
          if (id == s) ident_is_stop = true;
        }
        if (is_ident && !ident_is_stop) {
          terms->push_back({next().text, sign * value});
          first = false;
          continue;
        }
      }
      if (constant == nullptr) {
        error("unexpected constant in constraint expression", num_tok.line);
      }
      *constant += sign * value;
      first = false;
    }
  }

  void parse_bound() {
    // Either `lb <= name <= ub` or `name = v`.
    double dummy;
    if (at_keyword("-") || at_keyword("+") || is_number(peek().text, &dummy)) {
      const double lb = signed_number();
      expect("<=");
      Token name = next();
      expect("<=");
      const double ub = signed_number();
      bounds_.push_back({name.text, lb, ub});
    } else {
      Token t1 = next();
      expect("=");
      const double v = signed_number();
      bounds_.push_back({t1.text, v, v});
    }
  }

  MilpModel build() {
    MilpModel model(name_);
    // Variable creation order is the Bounds section order, which the
    // canonical emitter writes in index order.
    for (const auto& [name, lb, ub] : bounds_) {
      const VarKind kind = binaries_.count(name) ? VarKind::kBinary : VarKind::kContinuous;
      model.add_variable(name, kind, lb, ub);
    }
    for (const auto& [name, coef] : objective_) {
      VarId id = model.find_variable(name);
      if (!id.valid()) fail(ErrorKind::kIo, name_ + ".lp: objective references unknown variable '" + name + "'");
      model.add_objective_term(id, coef);
    }
    model.add_objective_constant(objective_constant_);
    for (const RawConstraint& rc : constraints_) {
      LinExpr expr;
      for (const auto& [name, coef] : rc.terms) {
        VarId id = model.find_variable(name);
        if (!id.valid()) {
          fail(ErrorKind::kIo, name_ + ".lp: constraint '" + rc.name +
                                   "' references unknown variable '" + name + "'");
        }
        expr.add(id, coef);
      }
      Sense sense = Sense::kLe;
      if (rc.sense == "<=") sense = Sense::kLe;
      else if (rc.sense == ">=") sense = Sense::kGe;
      else if (rc.sense == "=") sense = Sense::kEq;
      else fail(ErrorKind::kIo, name_ + ".lp: bad sense '" + rc.sense + "'");
      model.add_constraint(rc.name, expr, sense, rc.rhs);
    }
    return model;
  }

  std::vector<Token> tokens_;
  std::string name_;
  size_t pos_ = 0;
  std::vector<std::pair<std::string, double>> objective_;
  double objective_constant_ = 0;
  std::vector<RawConstraint> constraints_;
  std::vector<std::tuple<std::string, double, double>> bounds_;
  std::set<std::string> binaries_;
};

}  // namespace

MilpModel parse_lp(const std::string& text, const std::string& name) {
  return LpParser(text, name).parse();
}

// ---------------------------------------------------------------------------
// Solution text

SolutionVector read_solution(const std::string& text, const MilpModel& model) {
  SolutionVector sol;
  sol.values.assign(model.num_variables(), 0.0);
  std::vector<bool> seen(model.num_variables(), false);

  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    if (size_t pos = raw.find('#'); pos != std::string::npos) raw.erase(pos);
    const auto tokens = split_ws(raw);
    if (tokens.empty()) continue;
    const std::string ctx = "solution:" + std::to_string(lineno);
    if (tokens.size() != 2) {
      fail(ErrorKind::kIo, ctx + ": expected `name value`, got '" + std::string(trim(raw)) + "'");
    }
    if (tokens[0] == "status") {
      if (tokens[1] == "optimal") sol.status = SolStatus::kOptimal;
      else if (tokens[1] == "feasible") sol.status = SolStatus::kFeasible;
      else if (tokens[1] == "infeasible") sol.status = SolStatus::kInfeasible;
      else if (tokens[1] == "unbounded") sol.status = SolStatus::kUnbounded;
      else if (tokens[1] == "limit") sol.status = SolStatus::kLimit;
      else fail(ErrorKind::kIo, ctx + ": unknown status '" + tokens[1] + "'");
      continue;
    }
    if (tokens[0] == "objective") {
      sol.objective = parse_double(tokens[1], ctx);
      continue;
    }
    if (tokens[0] == "gap") {
      sol.gap = parse_double(tokens[1], ctx);
      continue;
    }
    const VarId id = model.find_variable(tokens[0]);
    if (!id.valid()) {
      fail(ErrorKind::kIo, ctx + ": value for unknown variable '" + tokens[0] + "'");
    }
    const double value = parse_double(tokens[1], ctx);
    const Variable& var = model.variable(id);
    if (value < var.lb - 1e-6 || value > var.ub + 1e-6) {
      fail(ErrorKind::kIo, ctx + ": value " + format_double(value) + " for '" +
                               var.name + "' violates bounds [" + format_double(var.lb) +
                               ", " + format_double(var.ub) + "]");
    }
    if (var.kind == VarKind::kBinary &&
        std::abs(value - std::round(value)) > 1e-6) {
      fail(ErrorKind::kIo, ctx + ": binary '" + var.name + "' has fractional value " +
                               format_double(value));
    }
    sol.values[id.value] = value;
    seen[id.value] = true;
  }
  for (int v = 0; v < model.num_variables(); ++v) {
    if (!seen[v]) {
      sol.warnings.push_back("variable '" + model.variables()[v].name +
                             "' missing from solution, defaulted to 0");
    }
  }
  return sol;
}

std::string write_solution(const SolutionVector& solution, const MilpModel& model) {
  std::ostringstream os;
  os << "# " << model.name() << " solution\n";
  os << "status " << to_string(solution.status) << '\n';
  os << "objective " << format_double(solution.objective) << '\n';
  os << "gap " << format_double(solution.gap) << '\n';
  for (int v = 0; v < model.num_variables(); ++v) {
    os << model.variables()[v].name << ' ' << format_double(solution.values[v]) << '\n';
  }
  return os.str();
}

}  // namespace caesuc::milp
