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
//
// Solver-agnostic MILP container with deterministic text emitters.
//
// Formats (byte-exact specifications in docs/formats.md):
//   * LP (CPLEX-style). Full variable names, shortest round-trip numerals;
//     parse_lp() reads back everything emit_lp() writes, coefficient-exact.
//   * MPS (fixed format). Names are generated (x0000001/c0000001) because
//     canonical names do not fit the 8-character fields.
//   * Solution files: `name value` pairs plus status/objective/gap headers.

#ifndef CAESUC_MILP_HPP_
#define CAESUC_MILP_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace caesuc::milp {

enum class VarKind { kContinuous, kBinary };
enum class Sense { kLe, kEq, kGe };

enum class SolStatus { kOptimal, kFeasible, kInfeasible, kUnbounded, kLimit };
const char* to_string(SolStatus status);

struct VarId {
  int32_t value = -1;
  bool valid() const { return value >= 0; }
  friend bool operator==(VarId a, VarId b) { return a.value == b.value; }
};

struct ConId {
  int32_t value = -1;
  bool valid() const { return value >= 0; }
};

struct LinTerm {
  VarId var;
  double coef = 0;
};

// Sparse linear expression builder; repeated variables accumulate.
class LinExpr {
 public:
  LinExpr& add(VarId var, double coef) {
    terms_.push_back({var, coef});
    return *this;
  }
  const std::vector<LinTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

 private:
  std::vector<LinTerm> terms_;
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lb = 0;
  double ub = 0;
};

struct Constraint {
  std::string name;
  std::vector<LinTerm> terms;  // sorted by variable index, merged, no zeros
  Sense sense = Sense::kLe;
  double rhs = 0;
};

struct ModelStats {
  int variables = 0;
  int binaries = 0;
  int constraints = 0;
  int64_t nonzeros = 0;
};

class MilpModel {
 public:
  explicit MilpModel(std::string name = "model") : name_(std::move(name)) {}

  // Handles are stable for the model lifetime. Throws Error(kArgument) on
  // duplicate names, inverted bounds, or binary bounds outside [0,1].
  VarId add_variable(const std::string& name, VarKind kind, double lb, double ub);

  // Coefficients below 1e-12 in magnitude are dropped after merging;
  // an expression that becomes empty is rejected.
  ConId add_constraint(const std::string& name, const LinExpr& expr, Sense sense,
                       double rhs);

  void add_objective_term(VarId var, double coef);
  void add_objective_constant(double value);

  // Freezing makes the model immutable; solvers require a frozen model.
  void freeze();
  bool frozen() const { return frozen_; }

  const std::string& name() const { return name_; }
  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(cons_.size()); }
  ModelStats stats() const;

  const Variable& variable(VarId id) const;
  const Constraint& constraint(ConId id) const;
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  VarId find_variable(const std::string& name) const;  // invalid id if absent

  const std::vector<double>& objective() const { return obj_; }  // dense by var
  double objective_constant() const { return obj_constant_; }

  double objective_value(const std::vector<double>& values) const;

 private:
  void require_mutable() const;

  std::string name_;
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  std::vector<double> obj_;
  double obj_constant_ = 0;
  std::unordered_map<std::string, int32_t> var_names_;
  std::unordered_map<std::string, int32_t> con_names_;
  bool frozen_ = false;
};

struct SolutionVector {
  std::vector<double> values;  // dense by variable index
  double objective = 0;
  double gap = 0;  // relative optimality gap
  SolStatus status = SolStatus::kFeasible;
  std::vector<std::string> warnings;
};

std::string emit_lp(const MilpModel& model);
std::string emit_mps(const MilpModel& model);

// Reads the canonical LP subset emitted by emit_lp(); round-trips every
// coefficient exactly.
MilpModel parse_lp(const std::string& text, const std::string& name = "model");

// `name value` solution text; names missing from the text default to 0 with
// a warning, values outside bounds (beyond 1e-6) or off-integer binaries are
// errors.
SolutionVector read_solution(const std::string& text, const MilpModel& model);
std::string write_solution(const SolutionVector& solution, const MilpModel& model);

}  // namespace caesuc::milp

#endif  // CAESUC_MILP_HPP_
