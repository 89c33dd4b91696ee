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
// Best-first branch-and-bound over the binary variables of a frozen model.
// Node order is (bound, depth, LIFO) when deterministic, with a seeded
// random tie-break otherwise; children inherit the parent LP bound and the
// last simplex basis warm-starts the next node. Warm starts install a
// checked incumbent directly, or complete partial binary hints with a
// bounded auxiliary search whose node count is reported separately.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "caesuc/solver.hpp"
#include "caesuc/util.hpp"

namespace caesuc::solver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1afe59b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Node {
  double bound = -kInf;
  int depth = 0;
  int64_t seq = 0;
  uint64_t tie = 0;
  // Bound overrides along the path: (var, lb, ub).
  std::vector<std::tuple<int32_t, double, double>> changes;
  // Pseudocost bookkeeping.
  int32_t branch_var = -1;
  double branch_frac = 0;
  bool branch_up = false;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-bound first
    if (a.tie != b.tie) return a.tie > b.tie;
    if (a.depth != b.depth) return a.depth < b.depth;  // deeper first
    return a.seq < b.seq;                              // LIFO
  }
};

struct Frame {
  const milp::MilpModel& model;
  const BnbOptions& opts;
  SimplexSolver simplex;
  std::vector<int32_t> binaries;
  std::vector<double> root_lb, root_ub;
  std::vector<double> pseudo_up, pseudo_dn;
  std::vector<int64_t> pseudo_up_n, pseudo_dn_n;

  explicit Frame(const milp::MilpModel& m, const BnbOptions& o)
      : model(m), opts(o), simplex(m, o.lp) {
    const int n = model.num_variables();
    root_lb.resize(n);
    root_ub.resize(n);
    for (int j = 0; j < n; ++j) {
      root_lb[j] = model.variables()[j].lb;
      root_ub[j] = model.variables()[j].ub;
      if (model.variables()[j].kind == milp::VarKind::kBinary) {
        binaries.push_back(j);
      }
    }
    pseudo_up.assign(n, 0.0);
    pseudo_dn.assign(n, 0.0);
    pseudo_up_n.assign(n, 0);
    pseudo_dn_n.assign(n, 0);
    for (int j = 0; j < n; ++j) {
      pseudo_up[j] = pseudo_dn[j] = std::abs(model.objective()[j]) + 1e-6;
    }
  }

  bool integral(const std::vector<double>& x, int32_t* worst) const {
    double worst_frac = opts.integrality_tol;
    int32_t worst_var = -1;
    for (int32_t j : binaries) {
      const double f = std::abs(x[j] - std::round(x[j]));
      if (f > worst_frac) {
        worst_frac = f;
        worst_var = j;
      }
    }
    if (worst != nullptr) *worst = worst_var;
    return worst_var < 0;
  }

  int32_t pick_branch_var(const std::vector<double>& x) const {
    int32_t best = -1;
    double best_score = -1;
    for (int32_t j : binaries) {
      const double f = x[j] - std::floor(x[j]);
      const double frac = std::min(f, 1 - f);
      if (frac <= opts.integrality_tol) continue;
      if (opts.branching == Branching::kLowestIndex) return j;
      double score = frac;
      if (opts.branching == Branching::kPseudoCost) {
        const double up = pseudo_up[j] / std::max<int64_t>(1, pseudo_up_n[j]);
        const double dn = pseudo_dn[j] / std::max<int64_t>(1, pseudo_dn_n[j]);
        score = std::max(up * (1 - f), 1e-12) * std::max(dn * f, 1e-12);
      }
      if (score > best_score + 1e-15 ||
          (score > best_score - 1e-15 && best >= 0 &&
           std::abs(model.objective()[j]) > std::abs(model.objective()[best]))) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }
};

// Internal search shared by the main solve and warm-start completion.
struct SearchResult {
  bool has_incumbent = false;
  std::vector<double> incumbent;
  double incumbent_obj = kInf;
  double bound = -kInf;
  int64_t nodes = 0;
  int64_t lp_iterations = 0;
  bool hit_limit = false;
  bool root_infeasible = false;
  std::vector<std::pair<int64_t, double>> bound_history;
};

SearchResult run_search(Frame& frame, const std::vector<double>& start_lb,
                        const std::vector<double>& start_ub,
                        double initial_incumbent_obj,
                        const std::vector<double>* initial_incumbent,
                        int64_t node_limit, double gap, bool stop_at_first,
                        std::chrono::steady_clock::time_point deadline) {
  const BnbOptions& opts = frame.opts;
  SearchResult out;
  if (initial_incumbent != nullptr) {
    out.has_incumbent = true;
    out.incumbent = *initial_incumbent;
    out.incumbent_obj = initial_incumbent_obj;
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  int64_t seq = 0;
  Node root;
  root.bound = -kInf;
  root.seq = seq++;
  open.push(root);

  const solver::Basis* warm = nullptr;
  solver::Basis last_basis;
  std::vector<double> lb = start_lb, ub = start_ub;

  auto cutoff = [&]() {
    if (!out.has_incumbent) return kInf;
    return out.incumbent_obj - gap * std::max(1.0, std::abs(out.incumbent_obj));
  };

  while (!open.empty()) {
    if (out.nodes >= node_limit ||
        std::chrono::steady_clock::now() >= deadline) {
      out.hit_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();

    // Best-first: the popped bound is the global lower bound.
    const double glb = std::min(std::max(node.bound, out.bound),
                                out.has_incumbent ? out.incumbent_obj : kInf);
    if (glb > out.bound) {
      out.bound = glb;
      out.bound_history.push_back({out.nodes, out.bound});
    }
    if (node.bound >= cutoff() - 1e-12) {
      // All remaining nodes are at least as bad; the cutoff certifies the gap.
      out.bound = std::min(std::max(out.bound, node.bound), out.incumbent_obj);
      break;
    }

    // Apply path bounds.
    lb = start_lb;
    ub = start_ub;
    for (const auto& [var, l, u] : node.changes) {
      lb[var] = l;
      ub[var] = u;
    }
    LpResult lp = frame.simplex.solve(lb, ub, warm);
    last_basis = std::move(lp.basis);
    warm = &last_basis;
    ++out.nodes;
    out.lp_iterations += lp.iterations;

    if (lp.status == LpStatus::kInfeasible) continue;
    if (lp.status != LpStatus::kOptimal) {
      // Iteration limit or numeric trouble: drop the warm basis and retry
      // cold once; if it persists, treat the node as unresolved (keep going
      // with its parent bound, which stays a valid lower bound).
      warm = nullptr;
      lp = frame.simplex.solve(lb, ub, nullptr);
      last_basis = std::move(lp.basis);
      warm = &last_basis;
      out.lp_iterations += lp.iterations;
      if (lp.status == LpStatus::kInfeasible) continue;
      if (lp.status != LpStatus::kOptimal) {
        if (node.seq == 0) {
          out.hit_limit = true;  // unresolved root: report a limit, not infeasibility
          break;
        }
        continue;
      }
    }

    const double node_bound = std::max(lp.objective, node.bound);
    if (node.seq == 0 && out.bound == -kInf) {
      out.bound = std::min(node_bound, out.has_incumbent ? out.incumbent_obj : kInf);
      out.bound_history.push_back({out.nodes, out.bound});
    }

    // Pseudocost update from the parent bound to this child's value.
    if (node.branch_var >= 0 && opts.branching == Branching::kPseudoCost) {
      const double degrade = std::max(0.0, lp.objective - node.bound);
      if (node.branch_up) {
        frame.pseudo_up[node.branch_var] += degrade / std::max(node.branch_frac, 1e-6);
        frame.pseudo_up_n[node.branch_var]++;
      } else {
        frame.pseudo_dn[node.branch_var] += degrade / std::max(node.branch_frac, 1e-6);
        frame.pseudo_dn_n[node.branch_var]++;
      }
    }

    if (node_bound >= cutoff() - 1e-12) continue;

    int32_t frac_var = -1;
    if (frame.integral(lp.x, &frac_var)) {
      if (lp.objective < out.incumbent_obj - 1e-12) {
        out.has_incumbent = true;
        out.incumbent_obj = lp.objective;
        out.incumbent = lp.x;
        // Snap binaries exactly.
        for (int32_t j : frame.binaries) {
          out.incumbent[j] = std::round(out.incumbent[j]);
        }
        if (stop_at_first) break;
      }
      continue;
    }

    const int32_t bv = frame.pick_branch_var(lp.x);
    if (bv < 0) continue;  // fractionality below branching resolution
    const double f = lp.x[bv] - std::floor(lp.x[bv]);

    Node down = node;
    down.bound = node_bound;
    down.depth = node.depth + 1;
    down.changes.push_back({bv, 0.0, 0.0});
    down.branch_var = bv;
    down.branch_frac = f;
    down.branch_up = false;

    Node up = node;
    up.bound = node_bound;
    up.depth = node.depth + 1;
    up.changes.push_back({bv, 1.0, 1.0});
    up.branch_var = bv;
    up.branch_frac = 1 - f;
    up.branch_up = true;

    // The side nearer the LP value gets the larger seq so it pops first
    // among equal bounds (LIFO) and the dive follows the relaxation.
    Node* first = (f < 0.5) ? &up : &down;
    Node* second = (f < 0.5) ? &down : &up;
    first->seq = seq++;
    second->seq = seq++;
    if (!opts.deterministic) {
      first->tie = splitmix64(opts.seed ^ static_cast<uint64_t>(first->seq));
      second->tie = splitmix64(opts.seed ^ static_cast<uint64_t>(second->seq));
    }
    open.push(*first);
    open.push(*second);
  }

  if (open.empty() && !out.hit_limit && out.has_incumbent) {
    out.bound = out.incumbent_obj;  // tree exhausted
  }
  return out;
}

}  // namespace

const char* to_string(MipStatus status) {
  switch (status) {
    case MipStatus::kOptimal: return "optimal";
    case MipStatus::kFeasible: return "feasible";
    case MipStatus::kInfeasible: return "infeasible";
    case MipStatus::kLimit: return "limit";
  }
  return "unknown";
}

namespace {

// Residual check of a complete candidate vector.
bool candidate_feasible(const milp::MilpModel& model, const std::vector<double>& x,
                        double feas_tol, double int_tol, std::string* why) {
  if (static_cast<int>(x.size()) != model.num_variables()) {
    *why = "value count mismatch";
    return false;
  }
  for (int j = 0; j < model.num_variables(); ++j) {
    const auto& v = model.variables()[j];
    if (x[j] < v.lb - 1e-6 || x[j] > v.ub + 1e-6) {
      *why = "bound violation on " + v.name;
      return false;
    }
    if (v.kind == milp::VarKind::kBinary &&
        std::abs(x[j] - std::round(x[j])) > int_tol) {
      *why = "fractional binary " + v.name;
      return false;
    }
  }
  for (const auto& con : model.constraints()) {
    double act = 0;
    double scale = 1.0;
    for (const auto& t : con.terms) {
      act += t.coef * x[t.var.value];
      scale = std::max(scale, std::abs(t.coef * x[t.var.value]));
    }
    const double tol = feas_tol * 100 * scale + 1e-6;
    const bool ok = (con.sense == milp::Sense::kLe && act <= con.rhs + tol) ||
                    (con.sense == milp::Sense::kGe && act >= con.rhs - tol) ||
                    (con.sense == milp::Sense::kEq && std::abs(act - con.rhs) <= tol);
    if (!ok) {
      *why = "constraint " + con.name + " violated";
      return false;
    }
  }
  return true;
}

}  // namespace

MipResult solve_mip(const milp::MilpModel& model, const BnbOptions& options,
                    const WarmStart* warm) {
  if (!model.frozen()) fail(ErrorKind::kArgument, "solve_mip requires a frozen model");
  if (!(options.mip_gap >= 0 && options.mip_gap < 1)) {
    fail(ErrorKind::kArgument, "mip_gap must lie in [0, 1)");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto deadline =
      options.time_limit_sec >= 1e29
          ? std::chrono::steady_clock::time_point::max()
          : t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                     std::chrono::duration<double>(options.time_limit_sec));

  Frame frame(model, options);
  MipResult result;

  // Warm start: a complete vector installs directly, hints are completed by
  // a bounded search with the hinted variables fixed.
  std::vector<double> incumbent;
  double incumbent_obj = kInf;
  bool has_incumbent = false;
  if (warm != nullptr && !warm->values.empty()) {
    std::string why;
    if (candidate_feasible(model, warm->values, options.lp.feas_tol,
                           options.integrality_tol, &why)) {
      incumbent = warm->values;
      incumbent_obj = model.objective_value(incumbent);
      has_incumbent = true;
    } else {
      result.warnings.push_back("warm start rejected: " + why);
    }
  } else if (warm != nullptr && !warm->fixings.empty()) {
    std::vector<double> lb = frame.root_lb, ub = frame.root_ub;
    bool ok = true;
    for (const auto& [var, value] : warm->fixings) {
      if (!var.valid() || var.value >= model.num_variables()) {
        result.warnings.push_back("warm start hint for unknown variable ignored");
        ok = false;
        break;
      }
      const double v = std::round(value);
      if (std::abs(value - v) > options.integrality_tol) {
        result.warnings.push_back("warm start hint with fractional value rejected");
        ok = false;
        break;
      }
      if (v < lb[var.value] - 1e-9 || v > ub[var.value] + 1e-9) {
        result.warnings.push_back("warm start hint outside variable bounds rejected");
        ok = false;
        break;
      }
      lb[var.value] = ub[var.value] = v;
    }
    if (ok) {
      SearchResult completion = run_search(
          frame, lb, ub, kInf, nullptr, options.completion_node_limit,
          std::max(options.mip_gap, 0.03), /*stop_at_first=*/true, deadline);
      result.warmstart_nodes = completion.nodes;
      result.lp_iterations += completion.lp_iterations;
      if (completion.has_incumbent) {
        incumbent = completion.incumbent;
        incumbent_obj = completion.incumbent_obj;
        has_incumbent = true;
      } else {
        result.warnings.push_back("warm start completion found no feasible point");
      }
    }
  }

  SearchResult search = run_search(
      frame, frame.root_lb, frame.root_ub, incumbent_obj,
      has_incumbent ? &incumbent : nullptr, options.node_limit,
      options.mip_gap, /*stop_at_first=*/false, deadline);

  result.nodes = search.nodes;
  result.lp_iterations += search.lp_iterations;
  result.bound_history = std::move(search.bound_history);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  result.solution.values.assign(model.num_variables(), 0.0);
  if (search.has_incumbent) {
    result.solution.values = search.incumbent;
    result.solution.objective = search.incumbent_obj;
    result.bound = std::min(search.bound, search.incumbent_obj);
    result.solution.gap =
        (search.incumbent_obj - result.bound) /
        std::max(1.0, std::abs(search.incumbent_obj));
    if (!search.hit_limit && result.solution.gap <= options.mip_gap + 1e-12) {
      result.status = MipStatus::kOptimal;
      result.solution.status = milp::SolStatus::kOptimal;
    } else {
      result.status = search.hit_limit ? MipStatus::kLimit : MipStatus::kFeasible;
      result.solution.status = milp::SolStatus::kFeasible;
    }
  } else if (search.hit_limit) {
    result.status = MipStatus::kLimit;
    result.solution.status = milp::SolStatus::kLimit;
    result.bound = search.bound;
    result.solution.gap = 1.0;
  } else {
    result.status = MipStatus::kInfeasible;
    result.solution.status = milp::SolStatus::kInfeasible;
    result.bound = kInf;
  }
  return result;
}

}  // namespace caesuc::solver
