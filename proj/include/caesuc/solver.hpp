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
// Built-in solvers: a bounded-variable two-phase primal simplex (dense in
// logic, sparse in algebra; the basis is factorized with Eigen's SparseLU
// and maintained with product-form eta updates) and a best-first
// branch-and-bound over binary variables with MIP-gap termination and
// incumbent warm starts. An external-solver bridge exchanges LP files and
// `name value` solution text with any command-line solver.

#ifndef CAESUC_SOLVER_HPP_
#define CAESUC_SOLVER_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "caesuc/milp.hpp"

namespace caesuc::solver {

struct LpOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-7;
  double pivot_tol = 1e-9;
  int64_t max_iterations = 0;  // 0 = automatic from model size
  int refactor_interval = 64;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterLimit, kNumericFail };
const char* to_string(LpStatus status);

// Basis snapshot: one entry per column (structurals then row logicals).
struct Basis {
  std::vector<int32_t> basic;          // column index per row
  std::vector<int8_t> state;           // 0 = at lower, 1 = at upper, 2 = basic
  bool valid(int rows, int cols) const;
};

struct LpResult {
  LpStatus status = LpStatus::kNumericFail;
  double objective = 0;
  std::vector<double> x;  // structural values
  int64_t iterations = 0;
  Basis basis;
};

// Reusable simplex over one frozen model; branch-and-bound calls solve()
// with per-node structural bound overrides and warm bases.
class SimplexSolver {
 public:
  explicit SimplexSolver(const milp::MilpModel& model, LpOptions options = {});
  ~SimplexSolver();
  SimplexSolver(const SimplexSolver&) = delete;
  SimplexSolver& operator=(const SimplexSolver&) = delete;

  LpResult solve();
  LpResult solve(const std::vector<double>& lb, const std::vector<double>& ub,
                 const Basis* warm = nullptr);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience: LP relaxation of a frozen model.
LpResult solve_lp(const milp::MilpModel& model, LpOptions options = {});

enum class Branching { kMostFractional, kPseudoCost, kLowestIndex };

struct BnbOptions {
  double mip_gap = 0.001;           // relative incumbent/bound gap
  int64_t node_limit = 2000000;
  double time_limit_sec = 1e30;
  Branching branching = Branching::kMostFractional;
  bool deterministic = true;        // strict node order; false = seeded tie-breaking
  uint64_t seed = 1;
  int64_t completion_node_limit = 200000;  // budget for partial warm starts
  double integrality_tol = 1e-6;
  LpOptions lp;
};

enum class MipStatus { kOptimal, kFeasible, kInfeasible, kLimit };
const char* to_string(MipStatus status);

// Either a complete candidate vector or partial variable fixings (binary
// hints); a complete vector is checked and installed as the root incumbent,
// hints are completed by a bounded auxiliary search first.
struct WarmStart {
  std::vector<double> values;                            // full when non-empty
  std::vector<std::pair<milp::VarId, double>> fixings;   // partial hints
};

struct MipResult {
  MipStatus status = MipStatus::kInfeasible;
  milp::SolutionVector solution;
  double bound = 0;             // best proven lower bound
  int64_t nodes = 0;            // main search nodes
  int64_t warmstart_nodes = 0;  // auxiliary completion nodes
  int64_t lp_iterations = 0;
  double wall_seconds = 0;
  std::vector<std::pair<int64_t, double>> bound_history;  // (node, bound)
  std::vector<std::string> warnings;
};

MipResult solve_mip(const milp::MilpModel& model, const BnbOptions& options,
                    const WarmStart* warm = nullptr);

// Writes model.lp under workdir, substitutes {lp} and {sol} into the command
// template, runs it through the shell, and parses the solution file.
MipResult solve_external(const milp::MilpModel& model,
                         const std::string& command_template,
                         const std::string& workdir);

}  // namespace caesuc::solver

#endif  // CAESUC_SOLVER_HPP_
