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

#include "caesuc/cavern.hpp"

#include <cmath>
#include <string>

#include "caesuc/util.hpp"

namespace caesuc::cavern {

namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0)) {
    fail(ErrorKind::kValidation,
         std::string("cavern: ") + field + " must be positive, got " +
             format_double(v));
  }
}

}  // namespace

void CavernParams::check() const {
  require_positive(volume, "volume");
  require_positive(wall_area, "wall_area");
  if (heat_coeff < 0) {
    fail(ErrorKind::kValidation, "cavern: heat_coeff must be non-negative");
  }
  require_positive(wall_temp, "wall_temp");
  require_positive(inject_temp, "inject_temp");
  require_positive(inject_pressure, "inject_pressure");
  require_positive(cv, "cv");
  require_positive(gas_constant, "gas_constant");
  if (!(kappa > 1)) {
    fail(ErrorKind::kValidation, "cavern: kappa must exceed 1");
  }
  require_positive(mass_avg, "mass_avg");
  require_positive(dt, "dt");
  require_positive(pressure_min, "pressure_min");
  if (!(pressure_min < pressure_max)) {
    fail(ErrorKind::kValidation, "cavern: pressure_min must be below pressure_max");
  }
  require_positive(temp_min, "temp_min");
  if (!(temp_min < temp_max)) {
    fail(ErrorKind::kValidation, "cavern: temp_min must be below temp_max");
  }
  require_positive(flow_per_mw_in, "flow_per_mw_in");
  require_positive(flow_per_mw_out, "flow_per_mw_out");
  // Zero minimum power would let the idle indicator float while flows are
  // zero, so the exclusivity logic in the scheduling model degenerates.
  require_positive(charge_min, "charge_min");
  require_positive(discharge_min, "discharge_min");
  if (!(charge_min <= charge_max)) {
    fail(ErrorKind::kValidation, "cavern: charge_min must not exceed charge_max");
  }
  if (!(discharge_min <= discharge_max)) {
    fail(ErrorKind::kValidation, "cavern: discharge_min must not exceed discharge_max");
  }
  require_positive(temp_const, "temp_const");
  if (switch_intervals < 0) {
    fail(ErrorKind::kValidation, "cavern: switch_intervals must be >= 0");
  }
}

CavernCoefficients derive_coefficients(const CavernParams& p) {
  require_positive(p.mass_avg, "mass_avg");
  require_positive(p.cv, "cv");
  require_positive(p.volume, "volume");
  require_positive(p.inject_pressure, "inject_pressure");
  require_positive(p.dt, "dt");

  const double k = p.kappa;
  const double R = p.gas_constant;
  const double dt = p.dt;
  const double m0 = p.mass_avg;

  CavernCoefficients c;
  c.a2 = std::pow(R, k) * std::pow(p.inject_temp, k) /
         (std::pow(p.volume, k) * std::pow(p.inject_pressure, k - 1));
  c.a3 = std::pow(R, k - 1) * std::pow(p.inject_temp, k) /
         (std::pow(p.volume, k - 1) * std::pow(p.inject_pressure, k - 1));
  c.a4 = p.heat_coeff * p.wall_area * dt / (m0 * p.cv);
  c.c4 = p.heat_coeff * p.wall_area / p.cv;
  c.c1 = (k - 2) * dt - 0.5 * (k - 2) * dt * dt / (p.cv * m0);
  c.c2 = c.a3 * dt * (k - 1) * std::pow(m0, k - 2) -
         (k - 2) * std::pow(m0, k - 3) * 0.5 * c.c4 * c.a3 * dt * dt;
  c.c3 = c.a3 * dt * std::pow(m0, k - 1) - c.c2 * m0 -
         std::pow(m0, k - 2) * c.c4 * 0.5 * c.a3 * dt * dt;
  c.c5 = -0.5 * c.c4 * (k - 1) * dt * dt * R / p.volume;
  c.c6 = c.c4 * p.wall_temp * dt * R / p.volume;
  c.c7 = 0.5 * c.c4 * p.wall_temp * dt * dt * R / p.volume +
         (1 - k) * c.a2 * dt * std::pow(m0, k);
  c.c8 = (c.c4 * dt * dt / (2 * m0) - dt) * (k - 1);
  c.c9 = 0.5 * c.c4 * R * dt * dt * k / p.volume;
  c.c10 = std::exp(-c.a4) - c.a4 * std::exp(-c.a4);
  c.c11 = (1 - c.c10) * R * p.wall_temp / p.volume;
  return c;
}

Flows flows_from_power(double charge_mw, double discharge_mw,
                       const CavernParams& params) {
  if (charge_mw < 0 || discharge_mw < 0) {
    fail(ErrorKind::kValidation, "cavern: negative power");
  }
  if (charge_mw > 0 && discharge_mw > 0) {
    fail(ErrorKind::kValidation,
         "cavern: simultaneous charge and discharge (" +
             format_double(charge_mw) + " MW / " + format_double(discharge_mw) +
             " MW)");
  }
  return {params.flow_per_mw_in * charge_mw,
          params.flow_per_mw_out * discharge_mw};
}

// The three step maps below are the single place the process equations are
// evaluated; the scheduling model and the verifier both defer to them.

CavernState step_charge(const CavernState& s, double flow_in,
                        const CavernCoefficients& c,
                        const CavernParams& p) {
  if (!(s.mass > 0)) {
    fail(ErrorKind::kValidation, "cavern: charge step from non-positive mass");
  }
  if (flow_in < 0) fail(ErrorKind::kValidation, "cavern: negative inflow");
  const double k = p.kappa;
  CavernState next;
  next.temp = (s.temp * s.mass + c.c1 * flow_in * s.temp +
               c.c4 * p.wall_temp * p.dt) /
              s.mass;
  next.pres = (s.pres * s.mass + (k - 1) * p.dt * s.pres * flow_in +
               c.a2 * p.dt * k * std::pow(p.mass_avg, k - 1) * s.mass * flow_in) /
              s.mass;
  next.mass = s.mass + flow_in * p.dt;
  return next;
}

CavernState step_discharge(const CavernState& s, double flow_out,
                           const CavernCoefficients& c,
                           const CavernParams& p) {
  if (flow_out < 0) fail(ErrorKind::kValidation, "cavern: negative outflow");
  if (!(s.mass > flow_out * p.dt)) {
    fail(ErrorKind::kValidation,
         "cavern: discharge would exhaust stored mass (" +
             format_double(s.mass) + " kg, outflow " + format_double(flow_out) +
             " kg/s over " + format_double(p.dt) + " s)");
  }
  const double k = p.kappa;
  CavernState next;
  next.temp = (s.mass * s.temp + c.c8 * s.temp * flow_out +
               c.c4 * p.dt * p.wall_temp) /
              s.mass;
  next.pres = (s.mass * s.pres - k * p.dt * flow_out * s.pres -
               (c.c4 * p.gas_constant / p.volume) * p.dt * s.mass * s.temp +
               c.c9 * s.temp * flow_out) /
              s.mass;
  next.mass = s.mass - flow_out * p.dt;
  return next;
}

CavernState step_idle(const CavernState& s, const CavernCoefficients& c,
                      const CavernParams& p) {
  if (!(s.mass > 0)) {
    fail(ErrorKind::kValidation, "cavern: idle step from non-positive mass");
  }
  // gamma*m + c10 is the linearized wall-exchange decay factor
  // e^{-a4*m_av0/m}; at T = T_RW, p = mRT_RW/V the map is the identity.
  const double gamma = c.a4 * std::exp(-c.a4) / p.mass_avg;
  const double rw_over_v = p.gas_constant * p.wall_temp / p.volume;
  CavernState next;
  next.temp = gamma * s.mass * s.temp + c.c10 * s.temp -
              gamma * p.wall_temp * s.mass + (1 - c.c10) * p.wall_temp;
  next.pres = gamma * s.mass * s.pres - gamma * rw_over_v * s.mass * s.mass +
              c.c10 * s.pres + c.c11 * s.mass;
  next.mass = s.mass;
  return next;
}

Trajectory simulate(const std::vector<Interval>& schedule,
                    const CavernState& initial, const CavernParams& params) {
  const CavernCoefficients coeffs = derive_coefficients(params);
  Trajectory traj;
  traj.states.reserve(schedule.size() + 1);
  traj.states.push_back(initial);
  traj.modes.reserve(schedule.size());
  traj.flows.reserve(schedule.size());

  CavernState s = initial;
  for (size_t t = 0; t < schedule.size(); ++t) {
    const Interval& iv = schedule[t];
    const Flows f = flows_from_power(iv.charge_mw, iv.discharge_mw, params);
    switch (iv.mode) {
      case Mode::kCharge:
        if (f.out > 0) fail(ErrorKind::kValidation, "cavern: outflow in charge interval");
        s = step_charge(s, f.in, coeffs, params);
        break;
      case Mode::kDischarge:
        if (f.in > 0) fail(ErrorKind::kValidation, "cavern: inflow in discharge interval");
        s = step_discharge(s, f.out, coeffs, params);
        break;
      case Mode::kIdle:
        if (f.in > 0 || f.out > 0) {
          fail(ErrorKind::kValidation, "cavern: nonzero flow in idle interval");
        }
        s = step_idle(s, coeffs, params);
        break;
    }
    traj.states.push_back(s);
    traj.modes.push_back(iv.mode);
    traj.flows.push_back(f);
    if (traj.first_pressure_violation < 0 &&
        (s.pres < params.pressure_min || s.pres > params.pressure_max)) {
      traj.first_pressure_violation = static_cast<int>(t);
    }
  }
  return traj;
}

double constant_temp_pressure(double mass, const CavernParams& params) {
  if (!(mass > 0)) {
    fail(ErrorKind::kValidation, "cavern: constant-temperature pressure needs positive mass");
  }
  return mass * params.gas_constant * params.temp_const / params.volume;
}

MassBounds mass_bounds(const CavernParams& params) {
  MassBounds b;
  b.min = params.pressure_min * params.volume /
          (params.gas_constant * params.temp_max);
  b.max = params.pressure_max * params.volume /
          (params.gas_constant * params.temp_min);
  return b;
}

}  // namespace caesuc::cavern
