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
// Discrete-time thermodynamics of a compressed-air storage cavern.
//
// The cavern state (air mass, temperature, pressure) evolves per time step
// under one of three processes: charging (air injected by the compressor
// train), discharging (air drawn by the expander train), or idle (heat
// exchange with the cavern wall only). Every nonlinearity in the step maps
// is a product of two state/flow quantities, which is what the MILP side
// linearizes; this module is the exact reference used to verify schedules.

#ifndef CAESUC_CAVERN_HPP_
#define CAESUC_CAVERN_HPP_

#include <cstddef>
#include <vector>

namespace caesuc::cavern {

// Physical cavern constants plus the operating limits of the attached
// compressor/expander train. Pressures are in bar throughout and the gas
// constant is supplied in bar·m³/(kg·K), so no formula hides a unit change.
struct CavernParams {
  double volume = 141000.0;        // V_s, m³
  double wall_area = 25000.0;      // A_c, m²
  double heat_coeff = 0.5;         // h_c, W/(m²·K)
  double wall_temp = 310.0;        // T_RW, K
  double inject_temp = 313.0;      // T_in, K
  double inject_pressure = 70.0;   // p_in, bar
  double cv = 718.0;               // c_v, J/(kg·K)
  double gas_constant = 0.00287;   // R, bar·m³/(kg·K)
  double kappa = 1.4;              // adiabatic index k
  double mass_avg = 9.0e6;         // m_av0, kg
  double dt = 1200.0;              // step length, s
  double pressure_min = 46.0;      // bar
  double pressure_max = 66.0;      // bar
  double temp_min = 290.0;         // K
  double temp_max = 330.0;         // K
  double flow_per_mw_in = 1.8;     // c_Ain, (kg/s)/MW
  double flow_per_mw_out = 1.4;    // c_Aout, (kg/s)/MW
  double charge_min = 10.0;        // MW
  double charge_max = 60.0;        // MW
  double discharge_min = 20.0;     // MW
  double discharge_max = 100.0;    // MW
  double temp_const = 310.0;       // T_con for the constant-temperature model, K
  int switch_intervals = 1;        // minimum idle intervals between ch and dch

  // Throws Error(kValidation) naming the offending field.
  void check() const;
};

// Derived step-map coefficients. c2/c3/c5/c6/c7 take no part in the step
// maps as printed; they are computed and kept so a corrected charging map
// can plug them in without touching callers.
struct CavernCoefficients {
  double a2 = 0, a3 = 0, a4 = 0;
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0;
  double c7 = 0, c8 = 0, c9 = 0, c10 = 0, c11 = 0;
};

struct CavernState {
  double mass = 0;  // kg
  double temp = 0;  // K
  double pres = 0;  // bar
};

enum class Mode { kIdle = 0, kCharge = 1, kDischarge = 2 };

struct Flows {
  double in = 0;   // kg/s
  double out = 0;  // kg/s
};

// One interval of an operating schedule, powers in MW.
struct Interval {
  Mode mode = Mode::kIdle;
  double charge_mw = 0;
  double discharge_mw = 0;
};

// Simulated state series: states[0..n] boundary states, intervals[0..n-1].
struct Trajectory {
  std::vector<CavernState> states;
  std::vector<Mode> modes;
  std::vector<Flows> flows;
  // First interval whose *end* pressure leaves [pressure_min, pressure_max],
  // or -1 if the whole trajectory stays inside.
  int first_pressure_violation = -1;
};

CavernCoefficients derive_coefficients(const CavernParams& params);

// Mass flows from electrical power; rejects simultaneous charge/discharge.
Flows flows_from_power(double charge_mw, double discharge_mw,
                       const CavernParams& params);

CavernState step_charge(const CavernState& state, double flow_in,
                        const CavernCoefficients& coeffs,
                        const CavernParams& params);
CavernState step_discharge(const CavernState& state, double flow_out,
                           const CavernCoefficients& coeffs,
                           const CavernParams& params);
CavernState step_idle(const CavernState& state,
                      const CavernCoefficients& coeffs,
                      const CavernParams& params);

Trajectory simulate(const std::vector<Interval>& schedule,
                    const CavernState& initial, const CavernParams& params);

// Pressure of the constant-temperature model: m·R·T_con/V_s.
double constant_temp_pressure(double mass, const CavernParams& params);

struct MassBounds {
  double min = 0;
  double max = 0;
};

// Widest mass interval consistent with the pressure window and the
// temperature band under the ideal-gas relation.
MassBounds mass_bounds(const CavernParams& params);

}  // namespace caesuc::cavern

#endif  // CAESUC_CAVERN_HPP_
