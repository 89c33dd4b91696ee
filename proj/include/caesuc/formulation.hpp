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
// Assembles the unit-commitment + storage MILP.
//
// Four model variants share one assembler:
//   * kModel2 — full cavern dynamics, linear mass balance, no explicit idle
//     binary (both reduction strategies on).
//   * kModel1 — full dynamics with both strategies off: an explicit idle
//     indicator with its coupling equality, and the mass balance built from
//     indicator-by-flow products.
//   * kConstTemp — pressure proportional to mass, no thermal block.
//   * kNoCaes — storage omitted entirely.
//
// Commitment (u/v/w) lives on the hourly grid; dispatch, storage modes and
// cavern states live on the fine grid. Variable names follow the documented
// grammar (docs/formats.md), e.g. ps_t7_i1_j2.

#ifndef CAESUC_FORMULATION_HPP_
#define CAESUC_FORMULATION_HPP_

#include <map>
#include <string>
#include <vector>

#include "caesuc/case_model.hpp"
#include "caesuc/cavern.hpp"
#include "caesuc/linearize.hpp"
#include "caesuc/milp.hpp"

namespace caesuc::formulation {

enum class Mode { kModel2, kModel1, kConstTemp, kNoCaes };
const char* to_string(Mode mode);
Mode mode_from_string(const std::string& text);

struct FormulationOptions {
  Mode mode = Mode::kModel2;
  int segments_plus = 16;
  int segments_minus = 16;
  // Process-variable bounds are widened by this fraction of their range so
  // one-step dynamics stay inside the linearization boxes.
  double bounds_widening = 0.05;
  bool apply_mass_reduction = true;     // linear mass balance
  bool idle_binary_elimination = true;  // represent idle as 1 - alpha - beta
  int switch_intervals = -1;            // -1: per-unit case value
  double load_shed_cost = -1;           // -1: case costs value

  static FormulationOptions for_mode(Mode mode);
};

// Dense handle tables; index order is [t][unit][j] unless noted. Entries for
// variants that do not create a family are left invalid.
struct VariableIndex {
  using Grid2 = std::vector<std::vector<milp::VarId>>;
  using Grid3 = std::vector<std::vector<std::vector<milp::VarId>>>;

  Grid2 u, v, w;              // [hour][gen]
  Grid2 ramp_up, ramp_down;   // [transition][gen], fine grid
  Grid3 P;                    // [t][gen][j]
  Grid3 W;                    // [t][farm][j]
  Grid3 shed;                 // [t][bus][j]
  Grid3 flow;                 // [t][line][j]
  Grid3 theta;                // [t][bus][j]

  Grid3 alpha, beta, idle;    // [t][caes][j]; idle only for kModel1
  Grid3 p_charge, p_discharge, flow_in, flow_out;  // [t][caes][j]
  Grid3 mass, temp, pres;     // [t 0..n_t][caes][j]; t=0 fixed at the initial state
  Grid3 temp_ch, temp_dch, temp_idl;  // [t 1..n_t][caes][j], stored at t-1
  Grid3 pres_ch, pres_dch, pres_idl;
  Grid3 q_ch, q_dch, q_ia, q_ib, q_idl;  // McCormick T products
  Grid3 s_ch, s_dch, s_ia, s_ib, s_idl;  // McCormick p products

  // Continuous products keyed by (family, transition t, unit, scenario);
  // transitions from t=0 need no product (the initial state is a constant).
  std::map<std::tuple<std::string, int, int, int>, linearize::ProductLink> products;
};

struct FamilyCount {
  int variables = 0;
  int binaries = 0;
  int constraints = 0;
};

struct BuildStats {
  milp::ModelStats totals;
  std::vector<std::pair<std::string, FamilyCount>> families;  // build order
  std::string text() const;
};

struct BuiltModel {
  milp::MilpModel model;
  VariableIndex index;
  FormulationOptions options;
  BuildStats stats;
  // Dimensions the verifier needs without re-deriving them.
  int n_t = 0, hours = 0, steps_per_hour = 0, scenarios = 0;
};

// Builds and freezes the full MILP for the requested variant.
BuiltModel build_model(const GridCase& grid, const ScenarioSet& scenarios,
                       const FormulationOptions& options);

// Consistency audit of the index against the variant: every family the
// variant requires resolves to valid handles, exactly once. Empty = sound.
std::vector<std::string> index_audit(const BuiltModel& built);

// Extracts u/v/w/alpha/beta values from a solved variant (by shared names)
// as integer fixings usable as a warm-start hint for another variant of the
// same case. Throws kArgument for infeasible sources or off-integer values.
std::vector<std::pair<milp::VarId, double>> warm_start_from(
    const milp::SolutionVector& source, const milp::MilpModel& source_model,
    const BuiltModel& target);

// A constructive feasible commitment skeleton: all units committed (where
// initial conditions allow), storage idle, chain binaries completed along
// the linearized idle trajectory. Returns binary fixings; continuous
// variables are left to an LP completion. Throws kValidation if the case
// cannot cover load plus reserve with everything committed.
std::vector<std::pair<milp::VarId, double>> feasibility_seed(
    const GridCase& grid, const ScenarioSet& scenarios, const BuiltModel& built);

// Values for every cavern-block variable of one unit/scenario implied by a
// mode/power schedule under the piecewise-linearized dynamics (chord
// evaluation, proper fill patterns). Used for seeds and schedule audits.
std::vector<std::pair<milp::VarId, double>> complete_cavern_block(
    const BuiltModel& built, const GridCase& grid, int unit, int scenario,
    const std::vector<cavern::Interval>& schedule);

}  // namespace caesuc::formulation

#endif  // CAESUC_FORMULATION_HPP_
