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
// Bounded-variable primal simplex over the system [A | -I] [x; w] = 0 with
// row activities w carrying the constraint senses as bounds. Phase 1 drives
// the summed bound violation of the basis to zero with the composite
// piecewise-linear objective; phase 2 is textbook Dantzig pricing with a
// Bland fallback after a degeneracy streak. The basis inverse is held as an
// Eigen SparseLU factorization plus product-form eta updates, refactorized
// on a fixed cadence.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

#include "caesuc/solver.hpp"
#include "caesuc/util.hpp"

namespace caesuc::solver {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int8_t kAtLower = 0;
constexpr int8_t kAtUpper = 1;
constexpr int8_t kBasic = 2;
}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterLimit: return "iteration-limit";
    case LpStatus::kNumericFail: return "numeric-failure";
  }
  return "unknown";
}

bool Basis::valid(int rows, int cols) const {
  if (static_cast<int>(basic.size()) != rows) return false;
  if (static_cast<int>(state.size()) != cols) return false;
  std::vector<bool> seen(cols, false);
  int basics = 0;
  for (int32_t c : basic) {
    if (c < 0 || c >= cols || seen[c]) return false;
    seen[c] = true;
  }
  for (int j = 0; j < cols; ++j) {
    if (state[j] == kBasic) ++basics;
    if (state[j] == kBasic && !seen[j]) return false;
    if (state[j] != kBasic && seen[j]) return false;
  }
  return basics == rows;
}

struct SimplexSolver::Impl {
  const milp::MilpModel& model;
  LpOptions opts;
  int m = 0, n = 0, total = 0;

  // CSC of [A | -I].
  std::vector<int> col_start;
  std::vector<int> rows;
  std::vector<double> vals;
  std::vector<double> cost;      // phase-2 cost per column
  std::vector<double> lb0, ub0;  // default bounds per column

  // Working state per solve().
  std::vector<double> lb, ub;
  std::vector<int8_t> vstat;
  std::vector<int32_t> basic;
  std::vector<double> x;

  Eigen::SparseMatrix<double> bmat;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  struct Eta {
    int r;
    double wr;
    std::vector<std::pair<int, double>> w;  // off-pivot entries
  };
  std::vector<Eta> etas;
  bool factor_ok = false;

  Eigen::VectorXd work, pi;
  int64_t iterations = 0;
  int degenerate_streak = 0;
  bool bland = false;

  explicit Impl(const milp::MilpModel& mdl, LpOptions o) : model(mdl), opts(o) {
    if (!model.frozen()) fail(ErrorKind::kArgument, "simplex requires a frozen model");
    m = model.num_constraints();
    n = model.num_variables();
    total = n + m;

    // Column-compressed [A | -I] plus costs and bounds.
    std::vector<std::vector<std::pair<int, double>>> cols(total);
    for (int r = 0; r < m; ++r) {
      for (const milp::LinTerm& t : model.constraints()[r].terms) {
        cols[t.var.value].push_back({r, t.coef});
      }
    }
    for (int r = 0; r < m; ++r) cols[n + r].push_back({r, -1.0});
    col_start.assign(total + 1, 0);
    for (int j = 0; j < total; ++j) col_start[j + 1] = col_start[j] + static_cast<int>(cols[j].size());
    rows.resize(col_start[total]);
    vals.resize(col_start[total]);
    for (int j = 0; j < total; ++j) {
      int k = col_start[j];
      for (const auto& [r, v] : cols[j]) {
        rows[k] = r;
        vals[k] = v;
        ++k;
      }
    }

    cost.assign(total, 0.0);
    for (int j = 0; j < n; ++j) cost[j] = model.objective()[j];

    lb0.resize(total);
    ub0.resize(total);
    for (int j = 0; j < n; ++j) {
      lb0[j] = model.variables()[j].lb;
      ub0[j] = model.variables()[j].ub;
    }
    for (int r = 0; r < m; ++r) {
      const milp::Constraint& con = model.constraints()[r];
      switch (con.sense) {
        case milp::Sense::kLe: lb0[n + r] = -kInf; ub0[n + r] = con.rhs; break;
        case milp::Sense::kGe: lb0[n + r] = con.rhs; ub0[n + r] = kInf; break;
        case milp::Sense::kEq: lb0[n + r] = con.rhs; ub0[n + r] = con.rhs; break;
      }
    }
    work.resize(m);
    pi.resize(m);
    if (opts.max_iterations <= 0) {
      opts.max_iterations = 50000 + 200LL * m;
    }
  }

  // --- factorization ------------------------------------------------------

  bool refactorize() {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(col_start[total] / std::max(1, total / std::max(1, m)));
    for (int r = 0; r < m; ++r) {
      const int j = basic[r];
      for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
        trips.emplace_back(rows[k], r, vals[k]);
      }
    }
    bmat.resize(m, m);
    bmat.setFromTriplets(trips.begin(), trips.end());
    lu.analyzePattern(bmat);
    lu.factorize(bmat);
    etas.clear();
    factor_ok = (lu.info() == Eigen::Success);
    return factor_ok;
  }

  void ftran(Eigen::VectorXd& v) {
    v = lu.solve(v);
    for (const Eta& e : etas) {
      const double t = v[e.r] / e.wr;
      if (t != 0.0) {
        for (const auto& [i, wi] : e.w) v[i] -= wi * t;
      }
      v[e.r] = t;
    }
  }

  void btran(Eigen::VectorXd& v) {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double dot = 0;
      for (const auto& [i, wi] : it->w) dot += wi * v[i];
      v[it->r] = (v[it->r] - dot) / it->wr;
    }
    v = lu.transpose().solve(v);
  }

  // --- state helpers ------------------------------------------------------

  double bound_for_state(int j, int8_t s) const {
    return s == kAtLower ? lb[j] : ub[j];
  }

  void compute_basic_values() {
    work.setZero();
    for (int j = 0; j < total; ++j) {
      if (vstat[j] == kBasic) continue;
      const double v = bound_for_state(j, vstat[j]);
      x[j] = v;
      if (v != 0.0) {
        for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
          work[rows[k]] -= vals[k] * v;
        }
      }
    }
    ftran(work);
    for (int r = 0; r < m; ++r) x[basic[r]] = work[r];
  }

  double infeasibility() const {
    double f = 0;
    for (int r = 0; r < m; ++r) {
      const int j = basic[r];
      if (x[j] < lb[j]) f += lb[j] - x[j];
      else if (x[j] > ub[j]) f += x[j] - ub[j];
    }
    return f;
  }

  double column_dot_pi(int j) const {
    double dot = 0;
    for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
      dot += vals[k] * pi[rows[k]];
    }
    return dot;
  }

  // --- simplex core -------------------------------------------------------

  // One phase: phase1 == true minimizes bound violations of the basics,
  // otherwise the model objective. Returns an LpStatus when the phase is
  // decided, or -1 cast placeholder via optional semantics.
  LpStatus run_phase(bool phase1) {
    std::vector<double> c1(phase1 ? m : 0);
    while (true) {
      if (iterations >= opts.max_iterations) return LpStatus::kIterLimit;

      // Duals for the active objective.
      if (phase1) {
        double worst = 0;
        for (int r = 0; r < m; ++r) {
          const int j = basic[r];
          double c = 0;
          if (x[j] < lb[j] - opts.feas_tol) c = -1;
          else if (x[j] > ub[j] + opts.feas_tol) c = 1;
          c1[r] = c;
          worst = std::max(worst, std::max(lb[j] - x[j], x[j] - ub[j]));
        }
        if (worst <= opts.feas_tol) return LpStatus::kOptimal;  // feasible
        for (int r = 0; r < m; ++r) pi[r] = c1[r];
      } else {
        for (int r = 0; r < m; ++r) pi[r] = cost[basic[r]];
      }
      btran(pi);

      // Pricing.
      int q = -1;
      int dir = +1;
      double best = -opts.opt_tol;
      for (int j = 0; j < total; ++j) {
        if (vstat[j] == kBasic) continue;
        if (ub[j] - lb[j] < 1e-30) continue;  // fixed
        const double d = (phase1 ? 0.0 : cost[j]) - column_dot_pi(j);
        double score = 0;
        int cand_dir = 0;
        if (vstat[j] == kAtLower && d < best) {
          score = d;
          cand_dir = +1;
        } else if (vstat[j] == kAtUpper && -d < best) {
          score = -d;
          cand_dir = -1;
        } else {
          continue;
        }
        if (bland) {  // first eligible, lowest index
          q = j;
          dir = cand_dir;
          break;
        }
        if (score < best) {
          best = score;
          q = j;
          dir = cand_dir;
        }
      }
      if (q < 0) {
        // No improving column: phase 1 still infeasible means the LP is
        // infeasible; phase 2 means optimal.
        return phase1 ? LpStatus::kInfeasible : LpStatus::kOptimal;
      }

      // Spike: h = B^{-1} a_q.
      work.setZero();
      for (int k = col_start[q]; k < col_start[q + 1]; ++k) {
        work[rows[k]] = vals[k];
      }
      ftran(work);

      // Two-pass ratio test along step s >= 0 of x_q in direction dir:
      // pass 1 finds the smallest tolerance-relaxed limit, pass 2 picks the
      // numerically best (or, under Bland, lowest-index) blocking row whose
      // exact limit fits under it; the applied step is exact.
      auto row_limit = [&](int r, double* exact, double* slack, int8_t* hit) {
        const double h = work[r];
        if (std::abs(h) <= opts.pivot_tol) return false;
        const int j = basic[r];
        const double delta = -dir * h;  // dx_j/ds
        const bool below = phase1 && x[j] < lb[j] - opts.feas_tol;
        const bool above = phase1 && x[j] > ub[j] + opts.feas_tol;
        if (below) {
          if (delta <= 0) return false;  // moves further out: no block
          *exact = (lb[j] - x[j]) / delta;
          *slack = *exact;
          *hit = kAtLower;
        } else if (above) {
          if (delta >= 0) return false;
          *exact = (ub[j] - x[j]) / delta;
          *slack = *exact;
          *hit = kAtUpper;
        } else if (delta > 0) {
          if (ub[j] == kInf) return false;
          *exact = (ub[j] - x[j]) / delta;
          *slack = (ub[j] - x[j] + opts.feas_tol) / delta;
          *hit = kAtUpper;
        } else {
          if (lb[j] == -kInf) return false;
          *exact = (lb[j] - x[j]) / delta;
          *slack = (lb[j] - x[j] - opts.feas_tol) / delta;
          *hit = kAtLower;
        }
        *exact = std::max(*exact, 0.0);
        *slack = std::max(*slack, 0.0);
        return true;
      };

      const double flip_width = ub[q] - lb[q];
      double s_slack = flip_width;
      for (int r = 0; r < m; ++r) {
        double exact, slack;
        int8_t hit;
        if (row_limit(r, &exact, &slack, &hit)) s_slack = std::min(s_slack, slack);
      }
      int leave_pos = -1;
      double leave_pivot = 0;
      int8_t leave_state = kAtLower;
      double s_best = flip_width;
      for (int r = 0; r < m; ++r) {
        double exact, slack;
        int8_t hit;
        if (!row_limit(r, &exact, &slack, &hit)) continue;
        if (exact > s_slack) continue;
        const bool better =
            leave_pos < 0
                ? true
                : (bland ? basic[r] < basic[leave_pos]
                         : std::abs(work[r]) > std::abs(leave_pivot));
        if (better) {
          leave_pos = r;
          leave_pivot = work[r];
          leave_state = hit;
          s_best = exact;
        }
      }
      if (leave_pos < 0) s_best = flip_width;

      if (s_best == kInf) {
        return LpStatus::kUnbounded;
      }

      ++iterations;
      if (s_best <= 1e-11) {
        if (++degenerate_streak > 1000) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }

      // Apply the step.
      if (s_best > 0) {
        for (int r = 0; r < m; ++r) {
          if (work[r] != 0.0) x[basic[r]] -= s_best * dir * work[r];
        }
        x[q] += s_best * dir;
      }
      if (leave_pos < 0) {
        // Bound flip.
        vstat[q] = (vstat[q] == kAtLower) ? kAtUpper : kAtLower;
        x[q] = bound_for_state(q, vstat[q]);
        continue;
      }

      const int leaving = basic[leave_pos];
      x[leaving] = bound_for_state(leaving, leave_state);
      vstat[leaving] = leave_state;
      vstat[q] = kBasic;
      basic[leave_pos] = q;

      if (std::abs(leave_pivot) < opts.pivot_tol) {
        if (!refactorize()) return LpStatus::kNumericFail;
        compute_basic_values();
        continue;
      }
      Eta eta;
      eta.r = leave_pos;
      eta.wr = work[leave_pos];
      for (int r = 0; r < m; ++r) {
        if (r != leave_pos && std::abs(work[r]) > 1e-13) {
          eta.w.push_back({r, work[r]});
        }
      }
      etas.push_back(std::move(eta));
      if (static_cast<int>(etas.size()) >= opts.refactor_interval) {
        if (!refactorize()) return LpStatus::kNumericFail;
        compute_basic_values();
      }
    }
  }

  LpResult solve_with_bounds(const std::vector<double>& slb,
                             const std::vector<double>& sub, const Basis* warm) {
    lb = lb0;
    ub = ub0;
    for (int j = 0; j < n; ++j) {
      lb[j] = slb[j];
      ub[j] = sub[j];
    }
    x.assign(total, 0.0);
    iterations = 0;
    degenerate_streak = 0;
    bland = false;

    bool warmed = false;
    if (warm != nullptr && warm->valid(m, total)) {
      basic.assign(warm->basic.begin(), warm->basic.end());
      vstat.assign(warm->state.begin(), warm->state.end());
      // Nonbasic states must sit on finite bounds.
      for (int j = 0; j < total; ++j) {
        if (vstat[j] == kBasic) continue;
        if (vstat[j] == kAtLower && lb[j] == -kInf) vstat[j] = kAtUpper;
        if (vstat[j] == kAtUpper && ub[j] == kInf) vstat[j] = kAtLower;
      }
      warmed = refactorize();
    }
    if (!warmed) {
      basic.resize(m);
      vstat.assign(total, kAtLower);
      for (int j = 0; j < n; ++j) {
        vstat[j] = (std::abs(ub[j]) < std::abs(lb[j])) ? kAtUpper : kAtLower;
      }
      for (int r = 0; r < m; ++r) {
        basic[r] = n + r;
        vstat[n + r] = kBasic;
      }
      if (!refactorize()) {
        LpResult res;
        res.status = LpStatus::kNumericFail;
        return res;
      }
    }
    compute_basic_values();

    LpResult res;
    LpStatus st = run_phase(/*phase1=*/true);
    if (st == LpStatus::kOptimal) {
      st = run_phase(/*phase1=*/false);
      if (st == LpStatus::kOptimal && infeasibility() > opts.feas_tol * 10) {
        // Degenerate drift; rebuild once and re-run.
        if (refactorize()) {
          compute_basic_values();
          st = run_phase(true);
          if (st == LpStatus::kOptimal) st = run_phase(false);
        }
      }
    }
    res.status = st;
    res.iterations = iterations;
    res.x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
      res.x[j] = std::clamp(x[j], lb[j], ub[j]);
    }
    res.objective = model.objective_constant();
    for (int j = 0; j < n; ++j) res.objective += cost[j] * res.x[j];
    res.basis.basic.assign(basic.begin(), basic.end());
    res.basis.state.assign(vstat.begin(), vstat.end());
    return res;
  }
};

SimplexSolver::SimplexSolver(const milp::MilpModel& model, LpOptions options)
    : impl_(std::make_unique<Impl>(model, options)) {}

SimplexSolver::~SimplexSolver() = default;

LpResult SimplexSolver::solve() {
  std::vector<double> lbs(impl_->n), ubs(impl_->n);
  for (int j = 0; j < impl_->n; ++j) {
    lbs[j] = impl_->lb0[j];
    ubs[j] = impl_->ub0[j];
  }
  return impl_->solve_with_bounds(lbs, ubs, nullptr);
}

LpResult SimplexSolver::solve(const std::vector<double>& lb,
                              const std::vector<double>& ub, const Basis* warm) {
  if (static_cast<int>(lb.size()) != impl_->n || static_cast<int>(ub.size()) != impl_->n) {
    fail(ErrorKind::kArgument, "simplex: bound override size mismatch");
  }
  return impl_->solve_with_bounds(lb, ub, warm);
}

LpResult solve_lp(const milp::MilpModel& model, LpOptions options) {
  SimplexSolver solver(model, options);
  return solver.solve();
}

}  // namespace caesuc::solver
