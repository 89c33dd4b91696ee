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
// Grid case data model and the text case-file format.
//
// A case file is a sectioned, line-oriented text document; see
// docs/formats.md for the grammar and schema/case.schema for the formal
// field list. Loading produces an immutable GridCase (network, fleet,
// storage) plus a ScenarioSet (time grids, per-scenario load/wind series,
// probabilities, costs).

#ifndef CAESUC_CASE_MODEL_HPP_
#define CAESUC_CASE_MODEL_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "caesuc/cavern.hpp"

namespace caesuc {

struct Bus {
  std::string name;
};

struct Line {
  std::string name;
  int from = -1;  // bus index
  int to = -1;    // bus index
  double susceptance = 0;  // Siemens
  double capacity = 0;     // MW
};

struct Generator {
  std::string name;
  int bus = -1;
  double pmin = 0;           // MW
  double pmax = 0;           // MW
  double cost_energy = 0;    // $/MWh
  double cost_fixed = 0;     // $/h, charged per dispatch step regardless of u
  double cost_startup = 0;   // $
  double cost_shutdown = 0;  // $
  double cost_ramp_up = 0;   // $/MW of upward ramp reserve
  double cost_ramp_down = 0; // $/MW of downward ramp reserve
  double ramp_up = 0;        // MW per dispatch step
  double ramp_down = 0;      // MW per dispatch step
  int min_up = 1;            // hours
  int min_down = 1;          // hours
  bool init_on = false;
  int init_hours = 0;        // how long the initial status has held, hours
};

struct WindFarm {
  std::string name;
  int bus = -1;
  double capacity = 0;  // MW
};

struct CaesUnit {
  std::string name;
  int bus = -1;
  cavern::CavernParams params;
  cavern::CavernState initial;  // state at t = 0, shared by all scenarios
};

struct GridCase {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<WindFarm> wind_farms;
  std::vector<CaesUnit> caes_units;

  // -1 if unknown.
  int bus_index(const std::string& bus_name) const;
  // Node-branch incidence entry: -1 at the from bus, +1 at the to bus.
  int incidence(int bus, const Line& line) const;
};

struct CostParams {
  double wind_shed = 100.0;  // $/MWh
  double charge = 3.0;       // $/MWh
  double discharge = 3.0;    // $/MWh
  double reserve = 3.0;      // $/MWh
  double load_shed = 5000.0; // $/MWh
};

// Scenario tree flattened to a fixed scenario count per period.
struct ScenarioSet {
  int n_t = 0;             // fine (dispatch) periods
  int steps_per_hour = 1;  // fine steps per commitment hour
  double step_seconds = 3600.0;

  int num_scenarios = 1;
  std::vector<std::vector<double>> probability;        // [t][j]
  std::vector<std::vector<std::vector<double>>> load;  // [j][bus][t], MW
  std::vector<std::vector<std::vector<double>>> wind_max;  // [j][farm][t], MW
  std::vector<double> reserve;  // [t], MW
  CostParams costs;

  int hours() const { return steps_per_hour > 0 ? n_t / steps_per_hour : 0; }
  double dt_hours() const { return step_seconds / 3600.0; }
};

struct Violation {
  std::string where;    // e.g. "generators g2" or "scenarios"
  std::string message;
};

struct CaseBundle {
  GridCase grid;
  ScenarioSet scenarios;
};

// Parses, then validates; throws Error(kIo) on grammar/schema errors (with
// line numbers) and Error(kValidation) listing the violations otherwise.
CaseBundle load_case(const std::string& path);
CaseBundle load_case_text(const std::string& text, const std::string& name);

// Canonical text form; load_case_text(serialize_case(b)) == b field-for-field.
std::string serialize_case(const CaseBundle& bundle);

// Structural checks; empty result means the inputs have solvable shape.
std::vector<Violation> validate(const GridCase& grid, const ScenarioSet& scenarios);

// Scales every wind series by a per-scenario multiplier (all must be > 0).
ScenarioSet scale_wind(const ScenarioSet& scenarios,
                       const std::vector<double>& multipliers);

// One row of the formal schema: section/record/field/type/required.
// Record "_" stands for scalar `key = value` settings of the section.
struct SchemaField {
  const char* section;
  const char* record;
  const char* field;
  const char* type;
  bool required;
};
const std::vector<SchemaField>& case_schema();
// Renders the schema exactly as shipped in schema/case.schema.
std::string render_case_schema();

}  // namespace caesuc

#endif  // CAESUC_CASE_MODEL_HPP_
