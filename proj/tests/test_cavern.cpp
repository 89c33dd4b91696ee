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
#include <random>

#include "caesuc/util.hpp"
#include "doctest.h"
#include "support/cavern_oracle.hpp"

using namespace caesuc;
using namespace caesuc::cavern;

namespace {

// Unit-ish parameter set: a4 collapses to 1, c10 to 0, c11 to 3.
CavernParams unit_params() {
  CavernParams p;
  p.volume = 100.0;
  p.wall_area = 1.0;
  p.heat_coeff = 1.0;
  p.wall_temp = 300.0;
  p.inject_temp = 310.0;
  p.inject_pressure = 60.0;
  p.cv = 1.0;
  p.gas_constant = 1.0;
  p.kappa = 1.4;
  p.mass_avg = 1.0;
  p.dt = 1.0;
  p.pressure_min = 1.0;
  p.pressure_max = 1000.0;
  p.temp_min = 200.0;
  p.temp_max = 400.0;
  return p;
}

// Field-scale parameters (salt cavern + machine train sized like the usual
// demonstration plant).
CavernParams field_params() { return CavernParams{}; }

CavernState equilibrium_state(double mass, const CavernParams& p) {
  return {mass, p.wall_temp, mass * p.gas_constant * p.wall_temp / p.volume};
}

}  // namespace

TEST_CASE("derive_coefficients: unit parameter set") {
  const CavernParams p = unit_params();
  const CavernCoefficients c = derive_coefficients(p);
  CHECK(c.a4 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.c10 == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(c.c11 == doctest::Approx(3.0).epsilon(1e-15));
  // Frozen from an independent evaluation of the coefficient formulas.
  CHECK(c.a2 == doctest::Approx(0.94764542703927579).epsilon(1e-14));
  CHECK(c.a3 == doctest::Approx(94.764542703927603).epsilon(1e-14));
  CHECK(c.c1 == doctest::Approx(-0.3).epsilon(1e-14));
  CHECK(c.c8 == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(c.c9 == doctest::Approx(0.007).epsilon(1e-14));
}

TEST_CASE("derive_coefficients: identities hold to machine precision") {
  for (const CavernParams& p : {unit_params(), field_params()}) {
    const CavernCoefficients c = derive_coefficients(p);
    CHECK(c.c10 == std::exp(-c.a4) - c.a4 * std::exp(-c.a4));
    CHECK(c.c11 == (1 - c.c10) * p.gas_constant * p.wall_temp / p.volume);
    CHECK(c.a4 > 0);
    const testing::OracleCoeffs o = testing::oracle_coeffs(p);
    CHECK(c.a2 == doctest::Approx(o.a2).epsilon(1e-13));
    CHECK(c.a3 == doctest::Approx(o.a3).epsilon(1e-13));
    CHECK(c.c1 == doctest::Approx(o.c1).epsilon(1e-13));
    CHECK(c.c8 == doctest::Approx(o.c8).epsilon(1e-13));
    CHECK(c.c9 == doctest::Approx(o.c9).epsilon(1e-13));
    CHECK(c.c10 == doctest::Approx(o.c10).epsilon(1e-13));
  }
}

TEST_CASE("derive_coefficients rejects non-positive denominators") {
  CavernParams p = unit_params();
  p.mass_avg = 0;
  CHECK_THROWS_AS(derive_coefficients(p), Error);
  p = unit_params();
  p.cv = -1;
  CHECK_THROWS_AS(derive_coefficients(p), Error);
  p = unit_params();
  p.volume = 0;
  CHECK_THROWS_AS(derive_coefficients(p), Error);
}

TEST_CASE("flows_from_power") {
  CavernParams p = unit_params();
  const Flows zero = flows_from_power(0, 0, p);
  CHECK(zero.in == 0);
  CHECK(zero.out == 0);

  p.flow_per_mw_in = 0.4;
  CHECK(flows_from_power(60, 0, p).in == doctest::Approx(24.0).epsilon(1e-15));

  p.flow_per_mw_out = 0.37;
  CHECK(flows_from_power(0, 100, p).out == doctest::Approx(37.0).epsilon(1e-12));

  CHECK_THROWS_AS(flows_from_power(10, 10, p), Error);
  CHECK_THROWS_AS(flows_from_power(-1, 0, p), Error);
}

TEST_CASE("step_charge: zero flow leaves only the wall-exchange term") {
  const CavernParams p = unit_params();
  const CavernCoefficients c = derive_coefficients(p);
  CavernState s{500.0, p.wall_temp, 40.0};
  const CavernState n = step_charge(s, 0, c, p);
  CHECK(n.temp == doctest::Approx(p.wall_temp * (1 + c.c4 * p.dt / s.mass)).epsilon(1e-14));
  CHECK(n.pres == doctest::Approx(s.pres).epsilon(1e-15));
  CHECK(n.mass == s.mass);
}

TEST_CASE("step_charge: frozen oracle point") {
  const CavernParams p = unit_params();
  const CavernCoefficients c = derive_coefficients(p);
  const CavernState s{1000.0, 300.0, 50.0};
  const CavernState n = step_charge(s, 10.0, c, p);
  // Frozen from the scripted residual-form evaluation of the charge map.
  CHECK(n.mass == doctest::Approx(1010.0).epsilon(1e-15));
  CHECK(n.temp == doctest::Approx(299.39999999999998).epsilon(1e-13));
  CHECK(n.pres == doctest::Approx(63.467035978549859).epsilon(1e-13));
  const CavernState o = testing::oracle_charge(s, 10.0, p);
  CHECK(n.temp == doctest::Approx(o.temp).epsilon(1e-12));
  CHECK(n.pres == doctest::Approx(o.pres).epsilon(1e-12));
  CHECK(n.mass == o.mass);
}

TEST_CASE("step_charge: adiabatic no-flow point is fixed except mass bookkeeping") {
  CavernParams p = unit_params();
  p.heat_coeff = 0;  // c4 = 0
  const CavernCoefficients c = derive_coefficients(p);
  const CavernState s{750.0, 315.0, 47.0};
  const CavernState n = step_charge(s, 0, c, p);
  CHECK(n.mass == s.mass);
  CHECK(n.temp == s.temp);
  CHECK(n.pres == s.pres);
}

TEST_CASE("step_charge rejects non-positive mass") {
  const CavernParams p = unit_params();
  const CavernCoefficients c = derive_coefficients(p);
  CHECK_THROWS_AS(step_charge({0.0, 300.0, 50.0}, 1.0, c, p), Error);
}

TEST_CASE("step_discharge: no flow, no heat exchange is the identity") {
  CavernParams p = unit_params();
  p.heat_coeff = 0;
  const CavernCoefficients c = derive_coefficients(p);
  const CavernState s{900.0, 305.0, 52.0};
  const CavernState n = step_discharge(s, 0, c, p);
  CHECK(n.temp == s.temp);
  CHECK(n.pres == s.pres);
  CHECK(n.mass == s.mass);
}

TEST_CASE("step_discharge: wall exchange alone shifts pressure") {
  const CavernParams p = unit_params();
  const CavernCoefficients c = derive_coefficients(p);
  const CavernState s{800.0, 310.0, 55.0};
  const CavernState n = step_discharge(s, 0, c, p);
  const double expected =
      s.pres - c.c4 * p.gas_constant / p.volume * p.dt * s.temp;
  CHECK(n.pres == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("step_discharge: frozen oracle point") {
  const CavernParams p = unit_params();
  const CavernCoefficients c = derive_coefficients(p);
  const CavernState s{1000.0, 310.0, 60.0};
  const CavernState n = step_discharge(s, 15.0, c, p);
  CHECK(n.mass == doctest::Approx(985.0).epsilon(1e-15));
  CHECK(n.temp == doctest::Approx(309.37).epsilon(1e-13));
  CHECK(n.pres == doctest::Approx(55.672550000000001).epsilon(1e-13));
  const CavernState o = testing::oracle_discharge(s, 15.0, p);
  CHECK(n.temp == doctest::Approx(o.temp).epsilon(1e-12));
  CHECK(n.pres == doctest::Approx(o.pres).epsilon(1e-12));
}

TEST_CASE("step_discharge rejects mass exhaustion") {
  const CavernParams p = unit_params();
  const CavernCoefficients c = derive_coefficients(p);
  CHECK_THROWS_AS(step_discharge({10.0, 300.0, 50.0}, 10.0, c, p), Error);
}

TEST_CASE("step_idle: equilibrium is a fixed point for any mass") {
  for (const CavernParams& p : {unit_params(), field_params()}) {
    const CavernCoefficients c = derive_coefficients(p);
    for (double mass : {0.5 * p.mass_avg, p.mass_avg, 1.7 * p.mass_avg}) {
      const CavernState s = equilibrium_state(mass, p);
      const CavernState n = step_idle(s, c, p);
      CHECK(n.temp == doctest::Approx(s.temp).epsilon(1e-12));
      CHECK(n.pres == doctest::Approx(s.pres).epsilon(1e-12));
      CHECK(n.mass == s.mass);
    }
  }
}

TEST_CASE("step_idle: spec numeric equilibrium point") {
  CavernParams p = field_params();
  p.gas_constant = 0.000287;
  p.mass_avg = 4e6;
  p.wall_temp = 310.0;
  const CavernCoefficients c = derive_coefficients(p);
  const CavernState s = equilibrium_state(4e6, p);
  const CavernState n = step_idle(s, c, p);
  CHECK(std::abs(n.temp - s.temp) / s.temp <= 1e-9);
  CHECK(std::abs(n.pres - s.pres) / s.pres <= 1e-9);
}

TEST_CASE("step_idle: no heat exchange is the identity") {
  CavernParams p = unit_params();
  p.heat_coeff = 0;  // a4 = 0, c10 = 1, c11 = 0
  const CavernCoefficients c = derive_coefficients(p);
  CHECK(c.c10 == 1.0);
  CHECK(c.c11 == 0.0);
  const CavernState s{620.0, 317.0, 58.0};
  const CavernState n = step_idle(s, c, p);
  CHECK(n.temp == s.temp);
  CHECK(n.pres == s.pres);
}

TEST_CASE("step_idle: decay factor algebra at m = m_av0, a4 = 1") {
  const CavernParams p = unit_params();  // a4 == 1
  const CavernCoefficients c = derive_coefficients(p);
  const double gamma = c.a4 * std::exp(-c.a4) / p.mass_avg;
  CHECK(gamma * p.mass_avg + c.c10 == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const CavernState s{p.mass_avg, 350.0, 42.0};
  const CavernState n = step_idle(s, c, p);
  const double expected =
      std::exp(-1.0) * s.temp + (1 - std::exp(-1.0)) * p.wall_temp;
  CHECK(n.temp == doctest::Approx(expected).epsilon(1e-13));
  const CavernState o = testing::oracle_idle(s, p);
  CHECK(n.temp == doctest::Approx(o.temp).epsilon(1e-12));
  CHECK(n.pres == doctest::Approx(o.pres).epsilon(1e-12));
}

TEST_CASE("simulate: all-idle from equilibrium stays put") {
  const CavernParams p = field_params();
  const CavernState init = equilibrium_state(p.mass_avg, p);
  const std::vector<Interval> schedule(8, Interval{});
  const Trajectory traj = simulate(schedule, init, p);
  REQUIRE(traj.states.size() == 9);
  for (const CavernState& s : traj.states) {
    CHECK(s.temp == doctest::Approx(init.temp).epsilon(1e-12));
    CHECK(s.pres == doctest::Approx(init.pres).epsilon(1e-12));
    CHECK(s.mass == init.mass);
  }
  CHECK(traj.first_pressure_violation == -1);
}

TEST_CASE("simulate: balanced charge/discharge restores the mass") {
  CavernParams p = field_params();
  const CavernState init = equilibrium_state(p.mass_avg, p);
  // Equal mass moved: flows scale with power, so pick powers such that
  // c_Ain * P_ch == c_Aout * P_dch.
  const double pch = 50.0;
  const double pdch = pch * p.flow_per_mw_in / p.flow_per_mw_out;
  std::vector<Interval> schedule{{Mode::kCharge, pch, 0},
                                 {Mode::kDischarge, 0, pdch}};
  const Trajectory traj = simulate(schedule, init, p);
  CHECK(traj.states.back().mass == doctest::Approx(init.mass).epsilon(1e-13));
}

TEST_CASE("simulate: six mixed intervals equal the composed single-step oracle") {
  const CavernParams p = field_params();
  const CavernState init = equilibrium_state(0.9 * p.mass_avg, p);
  const std::vector<Interval> schedule{
      {Mode::kCharge, 55.0, 0},    {Mode::kCharge, 30.0, 0},
      {Mode::kIdle, 0, 0},         {Mode::kDischarge, 0, 80.0},
      {Mode::kDischarge, 0, 40.0}, {Mode::kIdle, 0, 0},
  };
  const Trajectory traj = simulate(schedule, init, p);
  const auto expected = testing::oracle_simulate(schedule, init, p);
  REQUIRE(traj.states.size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK(traj.states[i].mass == doctest::Approx(expected[i].mass).epsilon(1e-12));
    CHECK(traj.states[i].temp == doctest::Approx(expected[i].temp).epsilon(1e-12));
    CHECK(traj.states[i].pres == doctest::Approx(expected[i].pres).epsilon(1e-12));
  }
}

TEST_CASE("simulate: mass telescoping over random schedules") {
  const CavernParams p = field_params();
  std::mt19937 rng(20260810);
  std::uniform_int_distribution<int> mode_pick(0, 2);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  const cavern::MassBounds mb = mass_bounds(p);

  for (int trial = 0; trial < 5; ++trial) {
    CavernState s = equilibrium_state(p.mass_avg, p);
    std::vector<Interval> schedule;
    double mass_guess = s.mass;
    for (int t = 0; t < 100; ++t) {
      Interval iv;
      int m = mode_pick(rng);
      // Keep the walk inside the physical window.
      if (mass_guess < mb.min * 1.05) m = 1;
      if (mass_guess > mb.max * 0.95) m = 2;
      if (m == 1) {
        iv.mode = Mode::kCharge;
        iv.charge_mw = p.charge_min + frac(rng) * (p.charge_max - p.charge_min);
        mass_guess += p.flow_per_mw_in * iv.charge_mw * p.dt;
      } else if (m == 2) {
        iv.mode = Mode::kDischarge;
        iv.discharge_mw =
            p.discharge_min + frac(rng) * (p.discharge_max - p.discharge_min);
        mass_guess -= p.flow_per_mw_out * iv.discharge_mw * p.dt;
      }
      schedule.push_back(iv);
    }
    const Trajectory traj = simulate(schedule, s, p);
    double net_flow = 0;
    for (const Flows& f : traj.flows) net_flow += f.in - f.out;
    const double lhs = traj.states.back().mass - traj.states.front().mass;
    CHECK(std::abs(lhs - p.dt * net_flow) <=
          1e-9 * std::max(1.0, std::abs(traj.states.back().mass)));
    // Stepwise recomposition in the implementation's operation order is
    // bit-exact.
    double m_acc = traj.states.front().mass;
    for (const Flows& f : traj.flows) m_acc += (f.in - f.out) * p.dt;
    CHECK(m_acc == traj.states.back().mass);
  }
}

TEST_CASE("simulate is deterministic") {
  const CavernParams p = field_params();
  const CavernState init = equilibrium_state(p.mass_avg, p);
  const std::vector<Interval> schedule{
      {Mode::kCharge, 42.5, 0}, {Mode::kIdle, 0, 0}, {Mode::kDischarge, 0, 61.25}};
  const Trajectory a = simulate(schedule, init, p);
  const Trajectory b = simulate(schedule, init, p);
  for (size_t i = 0; i < a.states.size(); ++i) {
    CHECK(a.states[i].mass == b.states[i].mass);
    CHECK(a.states[i].temp == b.states[i].temp);
    CHECK(a.states[i].pres == b.states[i].pres);
  }
}

TEST_CASE("adiabatic monotonicity: charge raises pressure, discharge lowers it") {
  CavernParams p = field_params();
  p.heat_coeff = 0;
  const CavernCoefficients c = derive_coefficients(p);
  const CavernState s = equilibrium_state(p.mass_avg, p);
  for (double mw : {15.0, 30.0, 60.0}) {
    CHECK(step_charge(s, p.flow_per_mw_in * mw, c, p).pres > s.pres);
  }
  for (double mw : {25.0, 50.0, 100.0}) {
    CHECK(step_discharge(s, p.flow_per_mw_out * mw, c, p).pres < s.pres);
  }
}

TEST_CASE("constant_temp_pressure") {
  const CavernParams p = field_params();
  CHECK(constant_temp_pressure(1e-9, p) == doctest::Approx(0.0).epsilon(1e-12));
  const double p1 = constant_temp_pressure(4e6, p);
  CHECK(constant_temp_pressure(8e6, p) == doctest::Approx(2 * p1).epsilon(1e-15));
  const double m_at_pmin =
      p.volume * p.pressure_min / (p.gas_constant * p.temp_const);
  CHECK(constant_temp_pressure(m_at_pmin, p) ==
        doctest::Approx(p.pressure_min).epsilon(1e-14));
  CHECK_THROWS_AS(constant_temp_pressure(0, p), Error);
}

TEST_CASE("mass_bounds") {
  CavernParams p = field_params();

  SUBCASE("degenerate temperature band matches the constant-model inversion") {
    p.temp_min = p.temp_max = p.temp_const = 305.0;
    // check() would reject temp_min == temp_max; bounds math is still defined.
    const MassBounds b = mass_bounds(p);
    CHECK(b.min == doctest::Approx(p.volume * p.pressure_min /
                                   (p.gas_constant * p.temp_const)).epsilon(1e-14));
    CHECK(b.max == doctest::Approx(p.volume * p.pressure_max /
                                   (p.gas_constant * p.temp_const)).epsilon(1e-14));
  }

  SUBCASE("degenerate pressure window gives the scaled identity") {
    p.pressure_min = p.pressure_max = 50.0;
    const MassBounds b = mass_bounds(p);
    CHECK(b.min * p.temp_max == doctest::Approx(b.max * p.temp_min).epsilon(1e-12));
  }

  SUBCASE("field window arithmetic") {
    const MassBounds b = mass_bounds(p);
    // 46 * 141000 / (0.00287 * 330), 66 * 141000 / (0.00287 * 290)
    CHECK(b.min == doctest::Approx(6848273.6775419703).epsilon(1e-12));
    CHECK(b.max == doctest::Approx(11181064.520004805).epsilon(1e-12));
    CHECK(b.min < b.max);
  }
}

TEST_CASE("params check rejects inverted windows and zero minimum powers") {
  CavernParams p = field_params();
  CHECK_NOTHROW(p.check());
  p.pressure_min = 70;
  CHECK_THROWS_AS(p.check(), Error);
  p = field_params();
  p.charge_min = 0;
  CHECK_THROWS_AS(p.check(), Error);
  p = field_params();
  p.kappa = 1.0;
  CHECK_THROWS_AS(p.check(), Error);
}
