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

#include "caesuc/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>
#include <sstream>

#include "caesuc/util.hpp"

namespace caesuc::formulation {

using linearize::Bounds1D;
using linearize::PiecewiseGrid;
using linearize::ProductLink;
using milp::LinExpr;
using milp::MilpModel;
using milp::Sense;
using milp::VarId;
using milp::VarKind;

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kModel2: return "model2";
    case Mode::kModel1: return "model1";
    case Mode::kConstTemp: return "const-temp";
    case Mode::kNoCaes: return "no-caes";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& text) {
  if (text == "model2") return Mode::kModel2;
  if (text == "model1") return Mode::kModel1;
  if (text == "const-temp") return Mode::kConstTemp;
  if (text == "no-caes") return Mode::kNoCaes;
  fail(ErrorKind::kArgument, "unknown model mode '" + text + "'");
}

FormulationOptions FormulationOptions::for_mode(Mode mode) {
  FormulationOptions o;
  o.mode = mode;
  if (mode == Mode::kModel1) {
    o.apply_mass_reduction = false;
    o.idle_binary_elimination = false;
  }
  return o;
}

std::string BuildStats::text() const {
  std::ostringstream os;
  os << "variables " << totals.variables << " (binaries " << totals.binaries
     << "), constraints " << totals.constraints << ", nonzeros "
     << totals.nonzeros << "\n";
  os << "family                    vars   bins   rows\n";
  for (const auto& [name, c] : families) {
    os << name;
    for (size_t pad = name.size(); pad < 24; ++pad) os << ' ';
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%7d%7d%7d\n", c.variables, c.binaries,
                  c.constraints);
    os << buf;
  }
  return os.str();
}

namespace {

std::string idx3(const std::string& sym, int t, int i, int j) {
  return sym + "_t" + std::to_string(t) + "_i" + std::to_string(i) + "_j" +
         std::to_string(j);
}
std::string idx2(const std::string& sym, int t, int i) {
  return sym + "_t" + std::to_string(t) + "_i" + std::to_string(i);
}
std::string idxb(const std::string& sym, int t, int b, int j) {
  return sym + "_t" + std::to_string(t) + "_b" + std::to_string(b) + "_j" +
         std::to_string(j);
}
std::string idxl(const std::string& sym, int t, int l, int j) {
  return sym + "_t" + std::to_string(t) + "_l" + std::to_string(l) + "_j" +
         std::to_string(j);
}

// Either a constant or coef*var; the cavern equations are written over
// these so transitions out of the fixed initial state reuse the same code.
struct Term {
  double constant = 0;
  VarId var{};
  double coef = 0;

  static Term of_const(double c) { return {c, VarId{}, 0}; }
  static Term of_var(VarId v, double coef = 1.0) { return {0, v, coef}; }
  bool is_const() const { return !var.valid(); }
  double value_if_const() const { return constant; }
};

// expr += mult * term, constants folded into the right-hand side.
void accumulate(LinExpr& expr, double& rhs, const Term& term, double mult) {
  if (term.is_const()) {
    rhs -= mult * term.constant;
  } else {
    expr.add(term.var, mult * term.coef);
  }
}

class Builder {
 public:
  Builder(const GridCase& grid, const ScenarioSet& scen,
          const FormulationOptions& options)
      : grid_(grid), scen_(scen), opt_(options) {
    built_.model = MilpModel("uc_caes_" + std::string(to_string(options.mode)));
    built_.options = opt_;
    built_.n_t = scen_.n_t;
    built_.steps_per_hour = scen_.steps_per_hour;
    built_.hours = scen_.hours();
    built_.scenarios = scen_.num_scenarios;
  }

  BuiltModel build() {
    const bool with_caes = opt_.mode != Mode::kNoCaes && !grid_.caes_units.empty();
    phase("commitment", [&] { commitment_vars(); });
    phase("dispatch", [&] { dispatch_vars(); });
    if (with_caes) {
      phase("storage-mode", [&] { caes_mode_vars(); });
      phase("storage-state", [&] { caes_state_vars(); });
    }
    phase("commitment-logic", [&] { commitment_logic(); });
    phase("generator-limits", [&] { generator_limits(); });
    phase("power-balance", [&] { power_balance(); });
    phase("dc-flow", [&] { dc_flow(); });
    phase("reserve", [&] { reserve_rows(); });
    phase("ramp-reserve", [&] { ramp_rows(); });
    if (with_caes) {
      phase("storage-logic", [&] { caes_logic(); });
      phase("switch-time", [&] { switch_time(); });
      phase("mass-balance", [&] { mass_balance(); });
      if (opt_.mode == Mode::kConstTemp) {
        phase("const-temp-pressure", [&] { const_temp_rows(); });
      } else {
        phase("cavern-dynamics", [&] { cavern_dynamics(); });
      }
    }
    phase("objective", [&] { objective(); });
    built_.model.freeze();
    built_.stats.totals = built_.model.stats();
    return std::move(built_);
  }

 private:
  void phase(const std::string& name, const std::function<void()>& body) {
    const milp::ModelStats before = built_.model.stats();
    body();
    const milp::ModelStats after = built_.model.stats();
    FamilyCount c;
    c.variables = after.variables - before.variables;
    c.binaries = after.binaries - before.binaries;
    c.constraints = after.constraints - before.constraints;
    built_.stats.families.push_back({name, c});
  }

  int hour_of(int ti) const { return ti / scen_.steps_per_hour; }
  double dt_hours() const { return scen_.dt_hours(); }
  int nt() const { return scen_.n_t; }
  int nj() const { return scen_.num_scenarios; }
  MilpModel& m() { return built_.model; }
  VariableIndex& ix() { return built_.index; }

  bool dynamics_mode() const {
    return opt_.mode == Mode::kModel2 || opt_.mode == Mode::kModel1;
  }

  // --- variables ----------------------------------------------------------

  void commitment_vars() {
    const int H = built_.hours;
    ix().u.assign(H, std::vector<VarId>(grid_.generators.size()));
    ix().v = ix().u;
    ix().w = ix().u;
    for (int h = 0; h < H; ++h) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        const Generator& gen = grid_.generators[g];
        double lb = 0, ub = 1;
        // Initial minimum up/down time can pin the first hours.
        if (gen.init_on && gen.init_hours < gen.min_up &&
            h < gen.min_up - gen.init_hours) {
          lb = 1;
        }
        if (!gen.init_on && gen.init_hours < gen.min_down &&
            h < gen.min_down - gen.init_hours) {
          ub = 0;
        }
        ix().u[h][g] = m().add_variable(idx2("u", h + 1, g + 1), VarKind::kBinary, lb, ub);
      }
    }
    for (int h = 0; h < H; ++h) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        ix().v[h][g] = m().add_variable(idx2("v", h + 1, g + 1), VarKind::kBinary, 0, 1);
      }
    }
    for (int h = 0; h < H; ++h) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        ix().w[h][g] = m().add_variable(idx2("w", h + 1, g + 1), VarKind::kBinary, 0, 1);
      }
    }
  }

  void dispatch_vars() {
    const int T = nt(), J = nj();
    auto grid3 = [&](size_t inner) {
      return VariableIndex::Grid3(
          T, std::vector<std::vector<VarId>>(inner, std::vector<VarId>(J)));
    };
    ix().P = grid3(grid_.generators.size());
    ix().W = grid3(grid_.wind_farms.size());
    ix().shed = grid3(grid_.buses.size());
    ix().flow = grid3(grid_.lines.size());
    ix().theta = grid3(grid_.buses.size());
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < J; ++j) {
        for (size_t g = 0; g < grid_.generators.size(); ++g) {
          ix().P[t][g][j] = m().add_variable(idx3("P", t + 1, g + 1, j + 1),
                                             VarKind::kContinuous, 0,
                                             grid_.generators[g].pmax);
        }
        for (size_t wf = 0; wf < grid_.wind_farms.size(); ++wf) {
          ix().W[t][wf][j] = m().add_variable(idx3("Wp", t + 1, wf + 1, j + 1),
                                              VarKind::kContinuous, 0,
                                              scen_.wind_max[j][wf][t]);
        }
        for (size_t b = 0; b < grid_.buses.size(); ++b) {
          ix().shed[t][b][j] = m().add_variable(idxb("dls", t + 1, b + 1, j + 1),
                                                VarKind::kContinuous, 0,
                                                scen_.load[j][b][t]);
          // First bus is the angle reference.
          const double th = (b == 0) ? 0.0 : 100.0;
          ix().theta[t][b][j] = m().add_variable(idxb("th", t + 1, b + 1, j + 1),
                                                 VarKind::kContinuous, -th, th);
        }
        for (size_t l = 0; l < grid_.lines.size(); ++l) {
          ix().flow[t][l][j] = m().add_variable(idxl("f", t + 1, l + 1, j + 1),
                                                VarKind::kContinuous,
                                                -grid_.lines[l].capacity,
                                                grid_.lines[l].capacity);
        }
      }
    }
    // Load-following ramp reserves per fine transition.
    ix().ramp_up.assign(std::max(0, T - 1), std::vector<VarId>(grid_.generators.size()));
    ix().ramp_down = ix().ramp_up;
    for (int t = 0; t + 1 < T; ++t) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        ix().ramp_up[t][g] = m().add_variable(idx2("dp", t + 1, g + 1),
                                              VarKind::kContinuous, 0,
                                              grid_.generators[g].ramp_up);
        ix().ramp_down[t][g] = m().add_variable(idx2("dm", t + 1, g + 1),
                                                VarKind::kContinuous, 0,
                                                grid_.generators[g].ramp_down);
      }
    }
  }

  void caes_mode_vars() {
    const int T = nt(), J = nj();
    const size_t C = grid_.caes_units.size();
    auto grid3 = [&]() {
      return VariableIndex::Grid3(
          T, std::vector<std::vector<VarId>>(C, std::vector<VarId>(J)));
    };
    ix().alpha = grid3();
    ix().beta = grid3();
    if (!opt_.idle_binary_elimination) ix().idle = grid3();
    ix().p_charge = grid3();
    ix().p_discharge = grid3();
    ix().flow_in = grid3();
    ix().flow_out = grid3();
    for (int t = 0; t < T; ++t) {
      for (size_t c = 0; c < C; ++c) {
        const cavern::CavernParams& p = grid_.caes_units[c].params;
        for (int j = 0; j < J; ++j) {
          ix().alpha[t][c][j] = m().add_variable(idx3("al", t + 1, c + 1, j + 1),
                                                 VarKind::kBinary, 0, 1);
          ix().beta[t][c][j] = m().add_variable(idx3("be", t + 1, c + 1, j + 1),
                                                VarKind::kBinary, 0, 1);
          if (!opt_.idle_binary_elimination) {
            ix().idle[t][c][j] = m().add_variable(idx3("io", t + 1, c + 1, j + 1),
                                                  VarKind::kBinary, 0, 1);
          }
          ix().p_charge[t][c][j] = m().add_variable(
              idx3("Pch", t + 1, c + 1, j + 1), VarKind::kContinuous, 0, p.charge_max);
          ix().p_discharge[t][c][j] =
              m().add_variable(idx3("Pdch", t + 1, c + 1, j + 1),
                               VarKind::kContinuous, 0, p.discharge_max);
          ix().flow_in[t][c][j] = m().add_variable(
              idx3("mfi", t + 1, c + 1, j + 1), VarKind::kContinuous, 0,
              p.flow_per_mw_in * p.charge_max);
          ix().flow_out[t][c][j] = m().add_variable(
              idx3("mfo", t + 1, c + 1, j + 1), VarKind::kContinuous, 0,
              p.flow_per_mw_out * p.discharge_max);
        }
      }
    }
  }

  struct CavernBox {
    Bounds1D mass, temp, pres;          // state boxes (mass widened)
    Bounds1D temp_proc, pres_proc;      // widened process boxes
    Bounds1D flow_in, flow_out;
  };

  CavernBox box_for(const cavern::CavernParams& p) const {
    CavernBox b;
    const cavern::MassBounds mb = cavern::mass_bounds(p);
    const double wm = opt_.bounds_widening * (mb.max - mb.min);
    b.mass = {mb.min - wm, mb.max + wm};
    b.temp = {p.temp_min, p.temp_max};
    b.pres = {p.pressure_min, p.pressure_max};
    const double wt = opt_.bounds_widening * (p.temp_max - p.temp_min);
    b.temp_proc = {p.temp_min - wt, p.temp_max + wt};
    const double wp = opt_.bounds_widening * (p.pressure_max - p.pressure_min);
    b.pres_proc = {std::max(0.0, p.pressure_min - wp), p.pressure_max + wp};
    b.flow_in = {0, p.flow_per_mw_in * p.charge_max};
    b.flow_out = {0, p.flow_per_mw_out * p.discharge_max};
    return b;
  }

  void caes_state_vars() {
    const int T = nt(), J = nj();
    const size_t C = grid_.caes_units.size();
    auto grid3 = [&](int periods) {
      return VariableIndex::Grid3(
          periods, std::vector<std::vector<VarId>>(C, std::vector<VarId>(J)));
    };
    ix().mass = grid3(T + 1);
    ix().pres = grid3(T + 1);
    if (dynamics_mode()) {
      ix().temp = grid3(T + 1);
      ix().temp_ch = grid3(T);
      ix().temp_dch = grid3(T);
      ix().temp_idl = grid3(T);
      ix().pres_ch = grid3(T);
      ix().pres_dch = grid3(T);
      ix().pres_idl = grid3(T);
    }
    for (size_t c = 0; c < C; ++c) {
      const CaesUnit& unit = grid_.caes_units[c];
      const CavernBox box = box_for(unit.params);
      for (int j = 0; j < J; ++j) {
        // t = 0 is the shared initial state, held as fixed variables.
        ix().mass[0][c][j] = m().add_variable(idx3("ms", 0, c + 1, j + 1),
                                              VarKind::kContinuous,
                                              unit.initial.mass, unit.initial.mass);
        ix().pres[0][c][j] = m().add_variable(idx3("ps", 0, c + 1, j + 1),
                                              VarKind::kContinuous,
                                              unit.initial.pres, unit.initial.pres);
        if (dynamics_mode()) {
          ix().temp[0][c][j] = m().add_variable(idx3("Ts", 0, c + 1, j + 1),
                                                VarKind::kContinuous,
                                                unit.initial.temp, unit.initial.temp);
        }
        for (int t = 1; t <= T; ++t) {
          ix().mass[t][c][j] = m().add_variable(idx3("ms", t, c + 1, j + 1),
                                                VarKind::kContinuous, box.mass.lb,
                                                box.mass.ub);
          ix().pres[t][c][j] = m().add_variable(idx3("ps", t, c + 1, j + 1),
                                                VarKind::kContinuous, box.pres.lb,
                                                box.pres.ub);
          if (dynamics_mode()) {
            ix().temp[t][c][j] = m().add_variable(idx3("Ts", t, c + 1, j + 1),
                                                  VarKind::kContinuous, box.temp.lb,
                                                  box.temp.ub);
            ix().temp_ch[t - 1][c][j] =
                m().add_variable(idx3("Tsch", t, c + 1, j + 1), VarKind::kContinuous,
                                 box.temp_proc.lb, box.temp_proc.ub);
            ix().temp_dch[t - 1][c][j] =
                m().add_variable(idx3("Tsdch", t, c + 1, j + 1), VarKind::kContinuous,
                                 box.temp_proc.lb, box.temp_proc.ub);
            ix().temp_idl[t - 1][c][j] =
                m().add_variable(idx3("Tsidl", t, c + 1, j + 1), VarKind::kContinuous,
                                 box.temp_proc.lb, box.temp_proc.ub);
            ix().pres_ch[t - 1][c][j] =
                m().add_variable(idx3("psch", t, c + 1, j + 1), VarKind::kContinuous,
                                 box.pres_proc.lb, box.pres_proc.ub);
            ix().pres_dch[t - 1][c][j] =
                m().add_variable(idx3("psdch", t, c + 1, j + 1), VarKind::kContinuous,
                                 box.pres_proc.lb, box.pres_proc.ub);
            ix().pres_idl[t - 1][c][j] =
                m().add_variable(idx3("psidl", t, c + 1, j + 1), VarKind::kContinuous,
                                 box.pres_proc.lb, box.pres_proc.ub);
          }
        }
      }
    }
  }

  // --- rows ---------------------------------------------------------------

  // Cavern rows mix unit-sized and mass-sized coefficients; equilibrate any
  // row whose magnitude leaves [1e-3, 1e3].
  void add_row(const std::string& name, const LinExpr& expr, Sense sense, double rhs) {
    double maxc = 0;
    for (const auto& t : expr.terms()) maxc = std::max(maxc, std::abs(t.coef));
    if (maxc > 1e3 || (maxc > 0 && maxc < 1e-3)) {
      LinExpr scaled;
      for (const auto& t : expr.terms()) scaled.add(t.var, t.coef / maxc);
      m().add_constraint(name, scaled, sense, rhs / maxc);
    } else {
      m().add_constraint(name, expr, sense, rhs);
    }
  }

  void commitment_logic() {
    for (int h = 0; h < built_.hours; ++h) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        const Generator& gen = grid_.generators[g];
        LinExpr lgc;
        lgc.add(ix().v[h][g], 1).add(ix().w[h][g], -1).add(ix().u[h][g], -1);
        double rhs = 0;
        if (h == 0) {
          rhs = -(gen.init_on ? 1.0 : 0.0);
        } else {
          lgc.add(ix().u[h - 1][g], 1);
        }
        m().add_constraint(idx2("lgc", h + 1, g + 1), lgc, Sense::kEq, rhs);
        m().add_constraint(idx2("vws", h + 1, g + 1),
                           LinExpr().add(ix().v[h][g], 1).add(ix().w[h][g], 1),
                           Sense::kLe, 1);
        // Rolling-window minimum up/down times.
        LinExpr mup;
        for (int k = std::max(0, h - gen.min_up + 1); k <= h; ++k) {
          mup.add(ix().v[k][g], 1);
        }
        mup.add(ix().u[h][g], -1);
        m().add_constraint(idx2("mup", h + 1, g + 1), mup, Sense::kLe, 0);
        LinExpr mdn;
        for (int k = std::max(0, h - gen.min_down + 1); k <= h; ++k) {
          mdn.add(ix().w[k][g], 1);
        }
        mdn.add(ix().u[h][g], 1);
        m().add_constraint(idx2("mdn", h + 1, g + 1), mdn, Sense::kLe, 1);
      }
    }
  }

  void generator_limits() {
    for (int t = 0; t < nt(); ++t) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        const Generator& gen = grid_.generators[g];
        const VarId uh = ix().u[hour_of(t)][g];
        for (int j = 0; j < nj(); ++j) {
          m().add_constraint(idx3("glo", t + 1, g + 1, j + 1),
                             LinExpr().add(uh, gen.pmin).add(ix().P[t][g][j], -1),
                             Sense::kLe, 0);
          m().add_constraint(idx3("ghi", t + 1, g + 1, j + 1),
                             LinExpr().add(ix().P[t][g][j], 1).add(uh, -gen.pmax),
                             Sense::kLe, 0);
        }
      }
    }
  }

  void power_balance() {
    const bool with_caes = opt_.mode != Mode::kNoCaes;
    for (int t = 0; t < nt(); ++t) {
      for (size_t b = 0; b < grid_.buses.size(); ++b) {
        for (int j = 0; j < nj(); ++j) {
          LinExpr bal;
          for (size_t l = 0; l < grid_.lines.size(); ++l) {
            const int mbl = grid_.incidence(static_cast<int>(b), grid_.lines[l]);
            if (mbl != 0) bal.add(ix().flow[t][l][j], mbl);
          }
          for (size_t g = 0; g < grid_.generators.size(); ++g) {
            if (grid_.generators[g].bus == static_cast<int>(b)) {
              bal.add(ix().P[t][g][j], 1);
            }
          }
          for (size_t wf = 0; wf < grid_.wind_farms.size(); ++wf) {
            if (grid_.wind_farms[wf].bus == static_cast<int>(b)) {
              bal.add(ix().W[t][wf][j], 1);
            }
          }
          if (with_caes) {
            for (size_t c = 0; c < grid_.caes_units.size(); ++c) {
              if (grid_.caes_units[c].bus == static_cast<int>(b)) {
                bal.add(ix().p_discharge[t][c][j], 1).add(ix().p_charge[t][c][j], -1);
              }
            }
          }
          bal.add(ix().shed[t][b][j], 1);
          m().add_constraint(idxb("bal", t + 1, b + 1, j + 1), bal, Sense::kEq,
                             scen_.load[j][b][t]);
        }
      }
    }
  }

  void dc_flow() {
    for (int t = 0; t < nt(); ++t) {
      for (size_t l = 0; l < grid_.lines.size(); ++l) {
        const Line& line = grid_.lines[l];
        for (int j = 0; j < nj(); ++j) {
          LinExpr dcf;
          dcf.add(ix().flow[t][l][j], 1)
              .add(ix().theta[t][line.from][j], -line.susceptance)
              .add(ix().theta[t][line.to][j], line.susceptance);
          add_row(idxl("dcf", t + 1, l + 1, j + 1), dcf, Sense::kEq, 0);
        }
      }
    }
  }

  void reserve_rows() {
    const bool with_caes = opt_.mode != Mode::kNoCaes;
    for (int t = 0; t < nt(); ++t) {
      for (int j = 0; j < nj(); ++j) {
        LinExpr res;
        for (size_t g = 0; g < grid_.generators.size(); ++g) {
          res.add(ix().u[hour_of(t)][g], grid_.generators[g].pmax);
        }
        for (size_t wf = 0; wf < grid_.wind_farms.size(); ++wf) {
          res.add(ix().W[t][wf][j], 1);
        }
        if (with_caes) {
          for (size_t c = 0; c < grid_.caes_units.size(); ++c) {
            res.add(ix().beta[t][c][j], grid_.caes_units[c].params.discharge_max);
          }
        }
        double need = scen_.reserve[t];
        for (size_t b = 0; b < grid_.buses.size(); ++b) need += scen_.load[j][b][t];
        m().add_constraint("res_t" + std::to_string(t + 1) + "_j" + std::to_string(j + 1),
                           res, Sense::kGe, need);
      }
    }
  }

  void ramp_rows() {
    for (int t = 0; t + 1 < nt(); ++t) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        for (int j1 = 0; j1 < nj(); ++j1) {
          for (int j2 = 0; j2 < nj(); ++j2) {
            const std::string tag = "_t" + std::to_string(t + 1) + "_i" +
                                    std::to_string(g + 1) + "_a" +
                                    std::to_string(j1 + 1) + "_b" +
                                    std::to_string(j2 + 1);
            m().add_constraint("rru" + tag,
                               LinExpr()
                                   .add(ix().P[t + 1][g][j2], 1)
                                   .add(ix().P[t][g][j1], -1)
                                   .add(ix().ramp_up[t][g], -1),
                               Sense::kLe, 0);
            m().add_constraint("rrd" + tag,
                               LinExpr()
                                   .add(ix().P[t][g][j1], 1)
                                   .add(ix().P[t + 1][g][j2], -1)
                                   .add(ix().ramp_down[t][g], -1),
                               Sense::kLe, 0);
          }
        }
      }
    }
  }

  void caes_logic() {
    for (int t = 0; t < nt(); ++t) {
      for (size_t c = 0; c < grid_.caes_units.size(); ++c) {
        const cavern::CavernParams& p = grid_.caes_units[c].params;
        if (!(p.charge_min > 0) || !(p.discharge_min > 0)) {
          fail(ErrorKind::kValidation,
               "caes " + grid_.caes_units[c].name +
                   ": minimum charge/discharge power must be positive");
        }
        for (int j = 0; j < nj(); ++j) {
          const VarId al = ix().alpha[t][c][j], be = ix().beta[t][c][j];
          const VarId pch = ix().p_charge[t][c][j], pdch = ix().p_discharge[t][c][j];
          m().add_constraint(idx3("fin", t + 1, c + 1, j + 1),
                             LinExpr().add(ix().flow_in[t][c][j], 1).add(pch, -p.flow_per_mw_in),
                             Sense::kEq, 0);
          m().add_constraint(idx3("fou", t + 1, c + 1, j + 1),
                             LinExpr().add(ix().flow_out[t][c][j], 1).add(pdch, -p.flow_per_mw_out),
                             Sense::kEq, 0);
          LinExpr exc;
          exc.add(al, 1).add(be, 1);
          if (!opt_.idle_binary_elimination) {
            m().add_constraint(idx3("ieq", t + 1, c + 1, j + 1),
                               LinExpr().add(al, 1).add(be, 1).add(ix().idle[t][c][j], 1),
                               Sense::kEq, 1);
          }
          m().add_constraint(idx3("exc", t + 1, c + 1, j + 1), exc, Sense::kLe, 1);
          m().add_constraint(idx3("pcl", t + 1, c + 1, j + 1),
                             LinExpr().add(al, p.charge_min).add(pch, -1), Sense::kLe, 0);
          m().add_constraint(idx3("pcu", t + 1, c + 1, j + 1),
                             LinExpr().add(pch, 1).add(al, -p.charge_max), Sense::kLe, 0);
          m().add_constraint(idx3("dcl", t + 1, c + 1, j + 1),
                             LinExpr().add(be, p.discharge_min).add(pdch, -1), Sense::kLe, 0);
          m().add_constraint(idx3("dcu", t + 1, c + 1, j + 1),
                             LinExpr().add(pdch, 1).add(be, -p.discharge_max), Sense::kLe, 0);
          // Zero charging and discharging power must force the idle process.
          const double pmin_min = std::min(p.charge_min, p.discharge_min);
          m().add_constraint(idx3("idl", t + 1, c + 1, j + 1),
                             LinExpr().add(al, pmin_min).add(be, pmin_min).add(pch, -1).add(pdch, -1),
                             Sense::kLe, 0);
        }
      }
    }
  }

  void switch_time() {
    for (size_t c = 0; c < grid_.caes_units.size(); ++c) {
      const int t_sw = opt_.switch_intervals >= 0
                           ? opt_.switch_intervals
                           : grid_.caes_units[c].params.switch_intervals;
      for (int t = 0; t < nt(); ++t) {
        for (int tau = 1; tau <= t_sw && t + tau < nt(); ++tau) {
          for (int j = 0; j < nj(); ++j) {
            const std::string tag = "_t" + std::to_string(t + 1) + "_i" +
                                    std::to_string(c + 1) + "_j" +
                                    std::to_string(j + 1) + "_k" + std::to_string(tau);
            m().add_constraint("swa" + tag,
                               LinExpr().add(ix().alpha[t][c][j], 1).add(ix().beta[t + tau][c][j], 1),
                               Sense::kLe, 1);
            m().add_constraint("swb" + tag,
                               LinExpr().add(ix().beta[t][c][j], 1).add(ix().alpha[t + tau][c][j], 1),
                               Sense::kLe, 1);
          }
        }
      }
    }
  }

  void mass_balance() {
    for (int t = 0; t < nt(); ++t) {
      for (size_t c = 0; c < grid_.caes_units.size(); ++c) {
        const CaesUnit& unit = grid_.caes_units[c];
        const CavernBox box = box_for(unit.params);
        const double dt = unit.params.dt;
        for (int j = 0; j < nj(); ++j) {
          LinExpr bal;
          double rhs = 0;
          bal.add(ix().mass[t + 1][c][j], 1);
          if (t == 0) {
            rhs += unit.initial.mass;
          } else {
            bal.add(ix().mass[t][c][j], -1);
          }
          if (opt_.apply_mass_reduction) {
            bal.add(ix().flow_in[t][c][j], -dt).add(ix().flow_out[t][c][j], dt);
          } else {
            // Indicator-gated flows, each an exact binary product.
            const VarId ami = linearize::mccormick_binary_p(
                m(), ix().alpha[t][c][j], ix().flow_in[t][c][j], box.flow_in.ub,
                idx3("Ami", t + 1, c + 1, j + 1));
            const VarId amo = linearize::mccormick_binary_p(
                m(), ix().beta[t][c][j], ix().flow_out[t][c][j], box.flow_out.ub,
                idx3("Amo", t + 1, c + 1, j + 1));
            bal.add(ami, -dt).add(amo, dt);
          }
          add_row(idx3("mbl", t + 1, c + 1, j + 1), bal, Sense::kEq, rhs);
        }
      }
    }
  }

  void const_temp_rows() {
    for (int t = 1; t <= nt(); ++t) {
      for (size_t c = 0; c < grid_.caes_units.size(); ++c) {
        const cavern::CavernParams& p = grid_.caes_units[c].params;
        const double k = p.gas_constant * p.temp_const / p.volume;
        for (int j = 0; j < nj(); ++j) {
          add_row(idx3("ctp", t, c + 1, j + 1),
                  LinExpr().add(ix().pres[t][c][j], 1).add(ix().mass[t][c][j], -k),
                  Sense::kEq, 0);
        }
      }
    }
  }

  // --- cavern dynamics ----------------------------------------------------

  Term state_term(const VariableIndex::Grid3& grid, int t, int c, int j,
                  double initial) const {
    if (t == 0) return Term::of_const(initial);
    return Term::of_var(grid[t][c][j]);
  }

  // Product of two cavern quantities for the transition t -> t+1. Constant
  // factors (the t = 0 state) collapse to linear terms; otherwise a shared
  // ProductLink provides a scaled product variable.
  Term product(const std::string& fam, int t, int c, int j, Term x, Term y,
               Bounds1D xb, Bounds1D yb) {
    if (x.is_const() && y.is_const()) {
      return Term::of_const(x.constant * y.constant);
    }
    if (x.is_const()) return Term::of_var(y.var, x.constant * y.coef);
    if (y.is_const()) return Term::of_var(x.var, y.constant * x.coef);
    const auto key = std::make_tuple(fam, t, c, j);
    auto it = ix().products.find(key);
    if (it == ix().products.end()) {
      ProductLink link = linearize::linearize_product(
          m(), x.var, y.var, xb, yb, opt_.segments_plus, opt_.segments_minus,
          idx3("x" + fam, t + 1, c + 1, j + 1));
      it = ix().products.emplace(key, std::move(link)).first;
    }
    return Term::of_var(it->second.product, it->second.scale());
  }

  void cavern_dynamics() {
    ix().q_ch = ix().temp_ch;  // shape templates; overwritten below
    ix().q_dch = ix().temp_ch;
    ix().s_ch = ix().temp_ch;
    ix().s_dch = ix().temp_ch;
    if (opt_.idle_binary_elimination) {
      ix().q_ia = ix().temp_ch;
      ix().q_ib = ix().temp_ch;
      ix().s_ia = ix().temp_ch;
      ix().s_ib = ix().temp_ch;
    } else {
      ix().q_idl = ix().temp_ch;
      ix().s_idl = ix().temp_ch;
    }

    for (size_t c = 0; c < grid_.caes_units.size(); ++c) {
      const CaesUnit& unit = grid_.caes_units[c];
      const cavern::CavernParams& p = unit.params;
      const cavern::CavernCoefficients cf = cavern::derive_coefficients(p);
      const CavernBox box = box_for(p);
      const double dt = p.dt;
      const double k = p.kappa;
      const double gamma = cf.a4 * std::exp(-cf.a4) / p.mass_avg;
      const double chg_mass_coef = cf.a2 * dt * k * std::pow(p.mass_avg, k - 1);

      for (int j = 0; j < nj(); ++j) {
        for (int t = 0; t < nt(); ++t) {
          const int tau = t;  // storage slot for arrival period t+1
          const Term ms = state_term(ix().mass, t, c, j, unit.initial.mass);
          const Term Ts = state_term(ix().temp, t, c, j, unit.initial.temp);
          const Term ps = state_term(ix().pres, t, c, j, unit.initial.pres);
          const Term mfi = Term::of_var(ix().flow_in[t][c][j]);
          const Term mfo = Term::of_var(ix().flow_out[t][c][j]);
          const VarId t_ch = ix().temp_ch[tau][c][j];
          const VarId t_dch = ix().temp_dch[tau][c][j];
          const VarId t_idl = ix().temp_idl[tau][c][j];
          const VarId p_ch = ix().pres_ch[tau][c][j];
          const VarId p_dch = ix().pres_dch[tau][c][j];
          const VarId p_idl = ix().pres_idl[tau][c][j];

          const Term x_mTch = product("mTch", t, c, j, ms, Term::of_var(t_ch),
                                      box.mass, box.temp_proc);
          const Term x_mTdc = product("mTdc", t, c, j, ms, Term::of_var(t_dch),
                                      box.mass, box.temp_proc);
          const Term x_mpch = product("mpch", t, c, j, ms, Term::of_var(p_ch),
                                      box.mass, box.pres_proc);
          const Term x_mpdc = product("mpdc", t, c, j, ms, Term::of_var(p_dch),
                                      box.mass, box.pres_proc);
          const Term x_mT = product("mT", t, c, j, ms, Ts, box.mass, box.temp);
          const Term x_mp = product("mp", t, c, j, ms, ps, box.mass, box.pres);
          const Term x_mm = product("mm", t, c, j, ms, ms, box.mass, box.mass);
          const Term x_Tmi = product("Tmi", t, c, j, Ts, mfi, box.temp, box.flow_in);
          const Term x_pmi = product("pmi", t, c, j, ps, mfi, box.pres, box.flow_in);
          const Term x_mmi = product("mmi", t, c, j, ms, mfi, box.mass, box.flow_in);
          const Term x_Tmo = product("Tmo", t, c, j, Ts, mfo, box.temp, box.flow_out);
          const Term x_pmo = product("pmo", t, c, j, ps, mfo, box.pres, box.flow_out);

          // Charging temperature: m*T' = m*T + c1*mfi*T + c4*T_RW*dt.
          {
            LinExpr e;
            double rhs = cf.c4 * p.wall_temp * dt;
            accumulate(e, rhs, x_mTch, 1.0);
            accumulate(e, rhs, x_mT, -1.0);
            accumulate(e, rhs, x_Tmi, -cf.c1);
            add_row(idx3("tch", t + 1, c + 1, j + 1), e, Sense::kEq, rhs);
          }
          // Charging pressure:
          // m*p' = p*m + (k-1)*dt*p*mfi + a2*dt*k*m_av0^{k-1}*m*mfi.
          {
            LinExpr e;
            double rhs = 0;
            accumulate(e, rhs, x_mpch, 1.0);
            accumulate(e, rhs, x_mp, -1.0);
            accumulate(e, rhs, x_pmi, -(k - 1) * dt);
            accumulate(e, rhs, x_mmi, -chg_mass_coef);
            add_row(idx3("pch", t + 1, c + 1, j + 1), e, Sense::kEq, rhs);
          }
          // Discharging temperature: m*T' = m*T + c8*T*mfo + c4*dt*T_RW.
          {
            LinExpr e;
            double rhs = cf.c4 * dt * p.wall_temp;
            accumulate(e, rhs, x_mTdc, 1.0);
            accumulate(e, rhs, x_mT, -1.0);
            accumulate(e, rhs, x_Tmo, -cf.c8);
            add_row(idx3("tdc", t + 1, c + 1, j + 1), e, Sense::kEq, rhs);
          }
          // Discharging pressure:
          // m*p' = m*p - k*dt*mfo*p - (c4*R/V)*dt*m*T + c9*T*mfo.
          {
            LinExpr e;
            double rhs = 0;
            accumulate(e, rhs, x_mpdc, 1.0);
            accumulate(e, rhs, x_mp, -1.0);
            accumulate(e, rhs, x_pmo, k * dt);
            accumulate(e, rhs, x_mT, (cf.c4 * p.gas_constant / p.volume) * dt);
            accumulate(e, rhs, x_Tmo, -cf.c9);
            add_row(idx3("pdc", t + 1, c + 1, j + 1), e, Sense::kEq, rhs);
          }
          // Idle temperature:
          // T' = gamma*m*T + c10*T - gamma*T_RW*m + (1-c10)*T_RW.
          {
            LinExpr e;
            double rhs = (1 - cf.c10) * p.wall_temp;
            e.add(t_idl, 1);
            accumulate(e, rhs, x_mT, -gamma);
            accumulate(e, rhs, Ts, -cf.c10);
            accumulate(e, rhs, ms, gamma * p.wall_temp);
            add_row(idx3("tid", t + 1, c + 1, j + 1), e, Sense::kEq, rhs);
          }
          // Idle pressure:
          // p' = gamma*m*p - gamma*(R*T_RW/V)*m^2 + c10*p + c11*m.
          {
            LinExpr e;
            double rhs = 0;
            e.add(p_idl, 1);
            accumulate(e, rhs, x_mp, -gamma);
            accumulate(e, rhs, x_mm,
                       gamma * p.gas_constant * p.wall_temp / p.volume);
            accumulate(e, rhs, ps, -cf.c10);
            accumulate(e, rhs, ms, -cf.c11);
            add_row(idx3("pid", t + 1, c + 1, j + 1), e, Sense::kEq, rhs);
          }

          // Process selection via exact binary products.
          const VarId al = ix().alpha[t][c][j], be = ix().beta[t][c][j];
          ix().q_ch[tau][c][j] = linearize::mccormick_binary_T(
              m(), al, t_ch, box.temp_proc, idx3("Qch", t + 1, c + 1, j + 1));
          ix().q_dch[tau][c][j] = linearize::mccormick_binary_T(
              m(), be, t_dch, box.temp_proc, idx3("Qdch", t + 1, c + 1, j + 1));
          ix().s_ch[tau][c][j] = linearize::mccormick_binary_p(
              m(), al, p_ch, box.pres_proc.ub, idx3("Sch", t + 1, c + 1, j + 1));
          ix().s_dch[tau][c][j] = linearize::mccormick_binary_p(
              m(), be, p_dch, box.pres_proc.ub, idx3("Sdch", t + 1, c + 1, j + 1));

          LinExpr tsel, psel;
          tsel.add(ix().temp[t + 1][c][j], 1)
              .add(ix().q_ch[tau][c][j], -1)
              .add(ix().q_dch[tau][c][j], -1);
          psel.add(ix().pres[t + 1][c][j], 1)
              .add(ix().s_ch[tau][c][j], -1)
              .add(ix().s_dch[tau][c][j], -1);
          if (opt_.idle_binary_elimination) {
            ix().q_ia[tau][c][j] = linearize::mccormick_binary_T(
                m(), al, t_idl, box.temp_proc, idx3("Qia", t + 1, c + 1, j + 1));
            ix().q_ib[tau][c][j] = linearize::mccormick_binary_T(
                m(), be, t_idl, box.temp_proc, idx3("Qib", t + 1, c + 1, j + 1));
            ix().s_ia[tau][c][j] = linearize::mccormick_binary_p(
                m(), al, p_idl, box.pres_proc.ub, idx3("Sia", t + 1, c + 1, j + 1));
            ix().s_ib[tau][c][j] = linearize::mccormick_binary_p(
                m(), be, p_idl, box.pres_proc.ub, idx3("Sib", t + 1, c + 1, j + 1));
            tsel.add(ix().temp_idl[tau][c][j], -1)
                .add(ix().q_ia[tau][c][j], 1)
                .add(ix().q_ib[tau][c][j], 1);
            psel.add(ix().pres_idl[tau][c][j], -1)
                .add(ix().s_ia[tau][c][j], 1)
                .add(ix().s_ib[tau][c][j], 1);
          } else {
            const VarId io = ix().idle[t][c][j];
            ix().q_idl[tau][c][j] = linearize::mccormick_binary_T(
                m(), io, t_idl, box.temp_proc, idx3("Qidl", t + 1, c + 1, j + 1));
            ix().s_idl[tau][c][j] = linearize::mccormick_binary_p(
                m(), io, p_idl, box.pres_proc.ub, idx3("Sidl", t + 1, c + 1, j + 1));
            tsel.add(ix().q_idl[tau][c][j], -1);
            psel.add(ix().s_idl[tau][c][j], -1);
          }
          m().add_constraint(idx3("tsl", t + 1, c + 1, j + 1), tsel, Sense::kEq, 0);
          m().add_constraint(idx3("psl", t + 1, c + 1, j + 1), psel, Sense::kEq, 0);
        }
      }
    }
  }

  void objective() {
    const double dth = dt_hours();
    for (int h = 0; h < built_.hours; ++h) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        m().add_objective_term(ix().v[h][g], grid_.generators[g].cost_startup);
        m().add_objective_term(ix().w[h][g], grid_.generators[g].cost_shutdown);
      }
    }
    for (int t = 0; t + 1 < nt(); ++t) {
      for (size_t g = 0; g < grid_.generators.size(); ++g) {
        m().add_objective_term(ix().ramp_up[t][g], grid_.generators[g].cost_ramp_up);
        m().add_objective_term(ix().ramp_down[t][g], grid_.generators[g].cost_ramp_down);
      }
    }
    const bool with_caes = opt_.mode != Mode::kNoCaes && !grid_.caes_units.empty();
    for (int t = 0; t < nt(); ++t) {
      for (int j = 0; j < nj(); ++j) {
        const double width = scen_.probability[t][j] * dth;
        for (size_t g = 0; g < grid_.generators.size(); ++g) {
          const Generator& gen = grid_.generators[g];
          // Energy cost plus spinning-reserve cost C_R*(u*pmax - P).
          m().add_objective_term(ix().P[t][g][j],
                                 width * (gen.cost_energy - scen_.costs.reserve));
          m().add_objective_term(ix().u[hour_of(t)][g],
                                 width * scen_.costs.reserve * gen.pmax);
          m().add_objective_constant(width * gen.cost_fixed);
        }
        for (size_t wf = 0; wf < grid_.wind_farms.size(); ++wf) {
          m().add_objective_term(ix().W[t][wf][j], -width * scen_.costs.wind_shed);
          m().add_objective_constant(width * scen_.costs.wind_shed *
                                     scen_.wind_max[j][wf][t]);
        }
        const double shed_cost =
            opt_.load_shed_cost >= 0 ? opt_.load_shed_cost : scen_.costs.load_shed;
        for (size_t b = 0; b < grid_.buses.size(); ++b) {
          m().add_objective_term(ix().shed[t][b][j], width * shed_cost);
        }
        if (with_caes) {
          for (size_t c = 0; c < grid_.caes_units.size(); ++c) {
            m().add_objective_term(ix().p_charge[t][c][j], width * scen_.costs.charge);
            m().add_objective_term(ix().p_discharge[t][c][j],
                                   width * (scen_.costs.discharge - scen_.costs.reserve));
            m().add_objective_term(ix().beta[t][c][j],
                                   width * scen_.costs.reserve *
                                       grid_.caes_units[c].params.discharge_max);
          }
        }
      }
    }
  }

  const GridCase& grid_;
  const ScenarioSet& scen_;
  FormulationOptions opt_;
  BuiltModel built_;
};

}  // namespace

BuiltModel build_model(const GridCase& grid, const ScenarioSet& scenarios,
                       const FormulationOptions& options) {
  const std::vector<Violation> violations = validate(grid, scenarios);
  if (!violations.empty()) {
    fail(ErrorKind::kValidation,
         "build_model: case is invalid: [" + violations[0].where + "] " +
             violations[0].message);
  }
  FormulationOptions opts = options;
  if (opts.mode == Mode::kModel2) {
    opts.apply_mass_reduction = true;
    opts.idle_binary_elimination = true;
  } else if (opts.mode == Mode::kModel1) {
    opts.apply_mass_reduction = false;
    opts.idle_binary_elimination = false;
  }
  return Builder(grid, scenarios, opts).build();
}

std::vector<std::string> index_audit(const BuiltModel& built) {
  std::vector<std::string> issues;
  const VariableIndex& ix = built.index;
  auto check2 = [&](const VariableIndex::Grid2& g, const std::string& name,
                    size_t d0, size_t d1) {
    if (g.size() != d0) {
      issues.push_back(name + ": expected " + std::to_string(d0) + " rows");
      return;
    }
    for (const auto& row : g) {
      if (row.size() != d1) {
        issues.push_back(name + ": ragged row");
        return;
      }
      for (VarId v : row) {
        if (!v.valid()) {
          issues.push_back(name + ": invalid handle");
          return;
        }
      }
    }
  };
  auto check3 = [&](const VariableIndex::Grid3& g, const std::string& name,
                    size_t d0) {
    if (g.size() != d0) {
      issues.push_back(name + ": expected " + std::to_string(d0) + " slabs, got " +
                       std::to_string(g.size()));
      return;
    }
    for (const auto& slab : g) {
      for (const auto& row : slab) {
        for (VarId v : row) {
          if (!v.valid()) {
            issues.push_back(name + ": invalid handle");
            return;
          }
        }
      }
    }
  };
  const size_t T = built.n_t;
  check2(ix.u, "u", built.hours, ix.u.empty() ? 0 : ix.u[0].size());
  check2(ix.v, "v", built.hours, ix.u.empty() ? 0 : ix.u[0].size());
  check2(ix.w, "w", built.hours, ix.u.empty() ? 0 : ix.u[0].size());
  check3(ix.P, "P", T);
  check3(ix.W, "W", T);
  check3(ix.shed, "dls", T);
  check3(ix.flow, "f", T);
  check3(ix.theta, "th", T);
  const bool with_caes = built.options.mode != Mode::kNoCaes && !ix.alpha.empty();
  if (with_caes) {
    check3(ix.alpha, "alpha", T);
    check3(ix.beta, "beta", T);
    check3(ix.mass, "ms", T + 1);
    check3(ix.pres, "ps", T + 1);
    if (built.options.mode == Mode::kModel2 || built.options.mode == Mode::kModel1) {
      check3(ix.temp, "Ts", T + 1);
      check3(ix.temp_ch, "Tsch", T);
      check3(ix.temp_dch, "Tsdch", T);
      check3(ix.temp_idl, "Tsidl", T);
      check3(ix.pres_ch, "psch", T);
      check3(ix.pres_dch, "psdch", T);
      check3(ix.pres_idl, "psidl", T);
      check3(ix.q_ch, "Qch", T);
      check3(ix.q_dch, "Qdch", T);
      check3(ix.s_ch, "Sch", T);
      check3(ix.s_dch, "Sdch", T);
      if (built.options.idle_binary_elimination) {
        check3(ix.q_ia, "Qia", T);
        check3(ix.q_ib, "Qib", T);
        check3(ix.s_ia, "Sia", T);
        check3(ix.s_ib, "Sib", T);
        if (!ix.idle.empty()) issues.push_back("idle binaries present with elimination on");
      } else {
        check3(ix.idle, "io", T);
        check3(ix.q_idl, "Qidl", T);
        check3(ix.s_idl, "Sidl", T);
      }
      // Transitions out of t=0 are affine in the fixed state, so products
      // exist exactly for t >= 1.
      for (const auto& [key, link] : ix.products) {
        if (std::get<1>(key) == 0) {
          issues.push_back("product at transition 0 should be constant-folded");
        }
        if (!link.product.valid()) issues.push_back("product link with invalid handle");
      }
    }
  }
  return issues;
}

std::vector<std::pair<VarId, double>> warm_start_from(
    const milp::SolutionVector& source, const milp::MilpModel& source_model,
    const BuiltModel& target) {
  if (source.status != milp::SolStatus::kOptimal &&
      source.status != milp::SolStatus::kFeasible) {
    fail(ErrorKind::kArgument,
         "warm_start_from: source solution is not feasible (status " +
             std::string(milp::to_string(source.status)) + ")");
  }
  std::vector<std::pair<VarId, double>> fixings;
  auto take = [&](VarId target_id) {
    const std::string& name = target.model.variable(target_id).name;
    const VarId src = source_model.find_variable(name);
    if (!src.valid()) return;  // variant without this family
    const double value = source.values[src.value];
    if (std::abs(value - std::round(value)) > 1e-6) {
      fail(ErrorKind::kArgument,
           "warm_start_from: binary '" + name + "' has fractional value " +
               format_double(value));
    }
    fixings.push_back({target_id, std::round(value)});
  };
  for (const auto& row : target.index.u) for (VarId id : row) take(id);
  for (const auto& row : target.index.v) for (VarId id : row) take(id);
  for (const auto& row : target.index.w) for (VarId id : row) take(id);
  for (const auto& slab : target.index.alpha)
    for (const auto& row : slab) for (VarId id : row) take(id);
  for (const auto& slab : target.index.beta)
    for (const auto& row : slab) for (VarId id : row) take(id);
  return fixings;
}

namespace {

double chord_value(const PiecewiseGrid& grid, double z) {
  const int n = grid.segments();
  int seg = 0;
  while (seg + 1 < n && z > grid.points[seg + 1]) ++seg;
  const double z0 = grid.points[seg], z1 = grid.points[seg + 1];
  const double f = std::clamp((z - z0) / (z1 - z0), 0.0, 1.0);
  return grid.squares[seg] + f * (grid.squares[seg + 1] - grid.squares[seg]);
}

// Fill pattern (1,..,1,f,0,..,0) reproducing z on the grid.
void fill_pattern(const PiecewiseGrid& grid, double z, std::vector<double>* fills,
                  std::vector<double>* steps) {
  const int n = grid.segments();
  fills->assign(n, 0.0);
  steps->assign(std::max(0, n - 1), 0.0);
  double remaining = z - grid.points.front();
  for (int i = 0; i < n; ++i) {
    const double w = grid.points[i + 1] - grid.points[i];
    const double f = std::clamp(remaining / w, 0.0, 1.0);
    (*fills)[i] = f;
    remaining -= f * w;
    if (f < 1.0) break;
  }
  for (int i = 0; i + 1 < n; ++i) {
    (*steps)[i] = ((*fills)[i] >= 1.0 - 1e-12) ? 1.0 : 0.0;
  }
}

// Piecewise product value and the implied link-variable values.
double link_value(const ProductLink& link, double x, double y,
                  std::vector<std::pair<VarId, double>>* out) {
  const double zx = x / link.scale_x, zy = y / link.scale_y;
  const double zp = (zx + zy) / 2, zm = (zx - zy) / 2;
  const double sqp = chord_value(link.grid_plus, zp);
  const double sqm = chord_value(link.grid_minus, zm);
  const double prod = sqp - sqm;
  if (out != nullptr) {
    out->push_back({link.z_plus, zp});
    out->push_back({link.z_minus, zm});
    out->push_back({link.chain_plus.square, sqp});
    out->push_back({link.chain_minus.square, sqm});
    out->push_back({link.product, prod});
    std::vector<double> fills, steps;
    fill_pattern(link.grid_plus, zp, &fills, &steps);
    for (size_t i = 0; i < fills.size(); ++i) out->push_back({link.chain_plus.fills[i], fills[i]});
    for (size_t i = 0; i < steps.size(); ++i) out->push_back({link.chain_plus.steps[i], steps[i]});
    fill_pattern(link.grid_minus, zm, &fills, &steps);
    for (size_t i = 0; i < fills.size(); ++i) out->push_back({link.chain_minus.fills[i], fills[i]});
    for (size_t i = 0; i < steps.size(); ++i) out->push_back({link.chain_minus.steps[i], steps[i]});
  }
  return prod * link.scale_x * link.scale_y;
}

}  // namespace

std::vector<std::pair<VarId, double>> complete_cavern_block(
    const BuiltModel& built, const GridCase& grid, int unit, int scenario,
    const std::vector<cavern::Interval>& schedule) {
  if (built.options.mode != Mode::kModel2 && built.options.mode != Mode::kModel1) {
    fail(ErrorKind::kArgument, "complete_cavern_block needs a dynamics-mode model");
  }
  if (static_cast<int>(schedule.size()) != built.n_t) {
    fail(ErrorKind::kArgument, "schedule length must match the horizon");
  }
  const CaesUnit& cu = grid.caes_units.at(unit);
  const cavern::CavernParams& p = cu.params;
  const cavern::CavernCoefficients cf = cavern::derive_coefficients(p);
  const VariableIndex& ix = built.index;
  const int c = unit, j = scenario;
  const double dt = p.dt, k = p.kappa;
  const double gamma = cf.a4 * std::exp(-cf.a4) / p.mass_avg;
  const double chg_mass_coef = cf.a2 * dt * k * std::pow(p.mass_avg, k - 1);

  std::vector<std::pair<VarId, double>> out;
  auto set = [&](VarId id, double v) { out.push_back({id, v}); };

  auto link_of = [&](const std::string& fam, int t) -> const ProductLink* {
    auto it = ix.products.find(std::make_tuple(fam, t, c, j));
    return it == ix.products.end() ? nullptr : &it->second;
  };
  // Product value via the linearized encoding; the recording variant also
  // emits the implied chain-variable values (call it exactly once per link).
  auto prod_eval = [&](const std::string& fam, int t, double x, double y) {
    const ProductLink* link = link_of(fam, t);
    if (link == nullptr) return x * y;  // constant-folded transition
    return link_value(*link, x, y, nullptr);
  };
  auto prod = [&](const std::string& fam, int t, double x, double y) {
    const ProductLink* link = link_of(fam, t);
    if (link == nullptr) return x * y;
    return link_value(*link, x, y, &out);
  };
  // Solves r(v) = 0 where r is monotone via bisection over [lo, hi].
  auto bisolve = [&](double lo, double hi, const std::function<double(double)>& r) {
    double rlo = r(lo), rhi = r(hi);
    if (rlo == 0) return lo;
    if (rhi == 0) return hi;
    if ((rlo > 0) == (rhi > 0)) {
      fail(ErrorKind::kVerify,
           "cavern completion: process value escapes its widened bounds "
           "(residuals " + format_double(rlo) + " / " + format_double(rhi) + ")");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double rm = r(mid);
      if (rm == 0 || (hi - lo) < 1e-13 * std::max(1.0, std::abs(hi))) return mid;
      if ((rm > 0) == (rlo > 0)) {
        lo = mid;
        rlo = rm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  double ms = cu.initial.mass, Ts = cu.initial.temp, ps = cu.initial.pres;
  for (int t = 0; t < built.n_t; ++t) {
    const cavern::Interval& iv = schedule[t];
    const cavern::Flows flows = cavern::flows_from_power(iv.charge_mw, iv.discharge_mw, p);
    set(ix.alpha[t][c][j], iv.mode == cavern::Mode::kCharge ? 1 : 0);
    set(ix.beta[t][c][j], iv.mode == cavern::Mode::kDischarge ? 1 : 0);
    if (!built.options.idle_binary_elimination) {
      set(ix.idle[t][c][j], iv.mode == cavern::Mode::kIdle ? 1 : 0);
    }
    set(ix.p_charge[t][c][j], iv.charge_mw);
    set(ix.p_discharge[t][c][j], iv.discharge_mw);
    set(ix.flow_in[t][c][j], flows.in);
    set(ix.flow_out[t][c][j], flows.out);

    // Products over the pre-transition state.
    const double x_mT = prod("mT", t, ms, Ts);
    const double x_mp = prod("mp", t, ms, ps);
    const double x_mm = prod("mm", t, ms, ms);
    const double x_Tmi = prod("Tmi", t, Ts, flows.in);
    const double x_pmi = prod("pmi", t, ps, flows.in);
    const double x_mmi = prod("mmi", t, ms, flows.in);
    const double x_Tmo = prod("Tmo", t, Ts, flows.out);
    const double x_pmo = prod("pmo", t, ps, flows.out);

    const auto& tch_var = built.model.variable(ix.temp_ch[t][c][j]);
    const auto& pch_var = built.model.variable(ix.pres_ch[t][c][j]);

    // Process values under the linearized dynamics (both fixed-point
    // products solved monotonically).
    const double t_ch = bisolve(tch_var.lb, tch_var.ub, [&](double v) {
      return prod_eval("mTch", t, ms, v) - x_mT - cf.c1 * x_Tmi - cf.c4 * p.wall_temp * dt;
    });
    const double p_ch = bisolve(pch_var.lb, pch_var.ub, [&](double v) {
      return prod_eval("mpch", t, ms, v) - x_mp - (k - 1) * dt * x_pmi - chg_mass_coef * x_mmi;
    });
    const double t_dch = bisolve(tch_var.lb, tch_var.ub, [&](double v) {
      return prod_eval("mTdc", t, ms, v) - x_mT - cf.c8 * x_Tmo - cf.c4 * dt * p.wall_temp;
    });
    const double p_dch = bisolve(pch_var.lb, pch_var.ub, [&](double v) {
      return prod_eval("mpdc", t, ms, v) - x_mp + k * dt * x_pmo +
             (cf.c4 * p.gas_constant / p.volume) * dt * x_mT - cf.c9 * x_Tmo;
    });
    const double t_idl = gamma * x_mT + cf.c10 * Ts - gamma * p.wall_temp * ms +
                         (1 - cf.c10) * p.wall_temp;
    const double p_idl = gamma * x_mp -
                         gamma * p.gas_constant * p.wall_temp / p.volume * x_mm +
                         cf.c10 * ps + cf.c11 * ms;
    // Record the solved-value products exactly once.
    prod("mTch", t, ms, t_ch);
    prod("mpch", t, ms, p_ch);
    prod("mTdc", t, ms, t_dch);
    prod("mpdc", t, ms, p_dch);

    set(ix.temp_ch[t][c][j], t_ch);
    set(ix.temp_dch[t][c][j], t_dch);
    set(ix.temp_idl[t][c][j], t_idl);
    set(ix.pres_ch[t][c][j], p_ch);
    set(ix.pres_dch[t][c][j], p_dch);
    set(ix.pres_idl[t][c][j], p_idl);

    const double a = iv.mode == cavern::Mode::kCharge ? 1 : 0;
    const double b = iv.mode == cavern::Mode::kDischarge ? 1 : 0;
    set(ix.q_ch[t][c][j], a * t_ch);
    set(ix.q_dch[t][c][j], b * t_dch);
    set(ix.s_ch[t][c][j], a * p_ch);
    set(ix.s_dch[t][c][j], b * p_dch);
    double t_next, p_next;
    if (built.options.idle_binary_elimination) {
      set(ix.q_ia[t][c][j], a * t_idl);
      set(ix.q_ib[t][c][j], b * t_idl);
      set(ix.s_ia[t][c][j], a * p_idl);
      set(ix.s_ib[t][c][j], b * p_idl);
      t_next = a * t_ch + b * t_dch + (1 - a - b) * t_idl;
      p_next = a * p_ch + b * p_dch + (1 - a - b) * p_idl;
    } else {
      const double io = 1 - a - b;
      set(ix.q_idl[t][c][j], io * t_idl);
      set(ix.s_idl[t][c][j], io * p_idl);
      t_next = a * t_ch + b * t_dch + io * t_idl;
      p_next = a * p_ch + b * p_dch + io * p_idl;
    }
    const double m_next = ms + flows.in * dt - flows.out * dt;
    set(ix.mass[t + 1][c][j], m_next);
    set(ix.temp[t + 1][c][j], t_next);
    set(ix.pres[t + 1][c][j], p_next);
    ms = m_next;
    Ts = t_next;
    ps = p_next;
  }
  set(ix.mass[0][c][j], cu.initial.mass);
  set(ix.temp[0][c][j], cu.initial.temp);
  set(ix.pres[0][c][j], cu.initial.pres);
  return out;
}

std::vector<std::pair<VarId, double>> feasibility_seed(
    const GridCase& grid, const ScenarioSet& /*scenarios*/, const BuiltModel& built) {
  std::vector<std::pair<VarId, double>> out;
  const VariableIndex& ix = built.index;
  // Commit everything the initial conditions allow.
  for (int h = 0; h < built.hours; ++h) {
    for (size_t g = 0; g < grid.generators.size(); ++g) {
      const auto& var = built.model.variable(ix.u[h][g]);
      const double u = var.ub;  // 1 unless forced off
      out.push_back({ix.u[h][g], u});
    }
  }
  // Derive v/w from the committed pattern.
  for (size_t g = 0; g < grid.generators.size(); ++g) {
    double prev = grid.generators[g].init_on ? 1.0 : 0.0;
    for (int h = 0; h < built.hours; ++h) {
      const double u = out[h * grid.generators.size() + g].second;
      out.push_back({ix.v[h][g], std::max(0.0, u - prev)});
      out.push_back({ix.w[h][g], std::max(0.0, prev - u)});
      prev = u;
    }
  }
  if (built.options.mode != Mode::kNoCaes) {
    const std::vector<cavern::Interval> all_idle(built.n_t, cavern::Interval{});
    for (size_t c = 0; c < grid.caes_units.size(); ++c) {
      for (int j = 0; j < built.scenarios; ++j) {
        if (built.options.mode == Mode::kConstTemp) {
          for (int t = 0; t < built.n_t; ++t) {
            out.push_back({ix.alpha[t][c][j], 0.0});
            out.push_back({ix.beta[t][c][j], 0.0});
          }
        } else {
          const auto block = complete_cavern_block(built, grid, static_cast<int>(c),
                                                   j, all_idle);
          for (const auto& [id, value] : block) {
            if (built.model.variable(id).kind == VarKind::kBinary) {
              out.push_back({id, value});
            }
          }
        }
      }
    }
  }
  // Keep only binary fixings (continuous values are the LP's job).
  std::vector<std::pair<VarId, double>> fixings;
  for (const auto& [id, value] : out) {
    if (built.model.variable(id).kind == VarKind::kBinary) {
      fixings.push_back({id, value});
    }
  }
  return fixings;
}

}  // namespace caesuc::formulation
