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

#include "caesuc/linearize.hpp"

#include <algorithm>
#include <cmath>

#include "caesuc/util.hpp"

namespace caesuc::linearize {

using milp::LinExpr;
using milp::MilpModel;
using milp::Sense;
using milp::VarId;
using milp::VarKind;

PiecewiseGrid PiecewiseGrid::over(double lo, double hi, int segments) {
  if (!(segments >= 1)) fail(ErrorKind::kArgument, "piecewise grid needs at least 1 segment");
  if (!(lo < hi)) fail(ErrorKind::kArgument, "piecewise grid needs a proper range");
  PiecewiseGrid g;
  g.points.resize(segments + 1);
  const double h = (hi - lo) / segments;
  for (int i = 0; i <= segments; ++i) {
    g.points[i] = (i == segments) ? hi : lo + h * i;
  }
  g.squares.resize(g.points.size());
  for (size_t i = 0; i < g.points.size(); ++i) g.squares[i] = g.points[i] * g.points[i];
  return g;
}

PiecewiseGrid PiecewiseGrid::over_with_zero(double lo, double hi, int segments) {
  if (!(lo < 0.0 && 0.0 < hi)) return over(lo, hi, segments);
  if (segments < 2) fail(ErrorKind::kArgument, "zero-anchored grid needs at least 2 segments");
  // Split the segment budget across the negative and positive parts, then
  // widen symmetrically in spacing so both parts share one width and 0 sits
  // on a divide point.
  int n_neg = static_cast<int>(std::lround(segments * (-lo) / (hi - lo)));
  n_neg = std::clamp(n_neg, 1, segments - 1);
  const int n_pos = segments - n_neg;
  const double h = std::max(-lo / n_neg, hi / n_pos);
  PiecewiseGrid g;
  g.points.resize(segments + 1);
  for (int i = 0; i <= segments; ++i) {
    g.points[i] = (i - n_neg) * h;  // exact zero at i == n_neg
  }
  g.squares.resize(g.points.size());
  for (size_t i = 0; i < g.points.size(); ++i) g.squares[i] = g.points[i] * g.points[i];
  return g;
}

namespace {

void require_finite(Bounds1D b, const std::string& what) {
  if (!std::isfinite(b.lb) || !std::isfinite(b.ub) || !(b.lb <= b.ub)) {
    fail(ErrorKind::kArgument, what + ": needs finite ordered bounds, got [" +
                                   format_double(b.lb) + ", " + format_double(b.ub) + "]");
  }
}

}  // namespace

VarId mccormick_binary_T(MilpModel& model, VarId alpha, VarId T, Bounds1D bounds,
                         const std::string& name) {
  require_finite(bounds, "mccormick '" + name + "'");
  const double t_min = bounds.lb, t_max = bounds.ub;
  const VarId q = model.add_variable(name, VarKind::kContinuous,
                                     std::min(0.0, t_min), std::max(0.0, t_max));
  // alpha*T_min <= Q <= alpha*T_max
  model.add_constraint(name + "_el", LinExpr().add(alpha, t_min).add(q, -1), Sense::kLe, 0);
  model.add_constraint(name + "_eu", LinExpr().add(q, 1).add(alpha, -t_max), Sense::kLe, 0);
  // T - (1-alpha)*T_max <= Q <= T - (1-alpha)*T_min
  model.add_constraint(name + "_tl", LinExpr().add(q, 1).add(T, -1).add(alpha, -t_max),
                       Sense::kGe, -t_max);
  model.add_constraint(name + "_tu", LinExpr().add(q, 1).add(T, -1).add(alpha, -t_min),
                       Sense::kLe, -t_min);
  return q;
}

VarId mccormick_binary_p(MilpModel& model, VarId beta, VarId p, double p_max,
                         const std::string& name) {
  const milp::Variable& pv = model.variable(p);
  if (pv.lb < 0) {
    fail(ErrorKind::kArgument,
         "mccormick '" + name + "': factor '" + pv.name +
             "' has a negative lower bound; shift it before linearizing");
  }
  if (!std::isfinite(p_max) || !(p_max > 0)) {
    fail(ErrorKind::kArgument, "mccormick '" + name + "': p_max must be finite and positive");
  }
  const VarId s = model.add_variable(name, VarKind::kContinuous, 0, p_max);
  // 0 <= S <= beta*p_max (the lower half restates the variable bound so both
  // printed inequalities are rows).
  model.add_constraint(name + "_el", LinExpr().add(s, -1), Sense::kLe, 0);
  model.add_constraint(name + "_eu", LinExpr().add(s, 1).add(beta, -p_max), Sense::kLe, 0);
  // p - (1-beta)*p_max <= S <= p
  model.add_constraint(name + "_tl", LinExpr().add(s, 1).add(p, -1).add(beta, -p_max),
                       Sense::kGe, -p_max);
  model.add_constraint(name + "_tu", LinExpr().add(s, 1).add(p, -1), Sense::kLe, 0);
  return s;
}

PwChain pw_square(MilpModel& model, VarId z, const PiecewiseGrid& grid,
                  const std::string& name) {
  const milp::Variable& zv = model.variable(z);
  const double pad = 1e-9 * std::max(1.0, std::abs(grid.lo()) + std::abs(grid.hi()));
  if (zv.lb < grid.lo() - pad || zv.ub > grid.hi() + pad) {
    fail(ErrorKind::kArgument,
         "pw_square '" + name + "': variable '" + zv.name + "' bounds [" +
             format_double(zv.lb) + ", " + format_double(zv.ub) +
             "] exceed the grid range [" + format_double(grid.lo()) + ", " +
             format_double(grid.hi()) + "]");
  }
  const int n = grid.segments();
  PwChain chain;
  double sq_lo = std::min(grid.squares.front(), grid.squares.back());
  if (grid.lo() <= 0 && grid.hi() >= 0) sq_lo = 0;
  const double sq_hi = std::max(grid.squares.front(), grid.squares.back());
  chain.square = model.add_variable(name, VarKind::kContinuous, sq_lo, sq_hi);

  chain.fills.reserve(n);
  chain.steps.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    chain.fills.push_back(model.add_variable(name + "_f" + std::to_string(i),
                                             VarKind::kContinuous, 0, 1));
  }
  for (int i = 0; i + 1 < n; ++i) {
    chain.steps.push_back(model.add_variable(name + "_s" + std::to_string(i),
                                             VarKind::kBinary, 0, 1));
  }

  // z = z_1 + sum (z_{i+1}-z_i) phi_i
  LinExpr zdef;
  zdef.add(z, 1);
  for (int i = 0; i < n; ++i) {
    zdef.add(chain.fills[i], -(grid.points[i + 1] - grid.points[i]));
  }
  model.add_constraint(name + "_zd", zdef, Sense::kEq, grid.points.front());

  // square = z_1^2 + sum (z_{i+1}^2 - z_i^2) phi_i
  LinExpr qdef;
  qdef.add(chain.square, 1);
  for (int i = 0; i < n; ++i) {
    qdef.add(chain.fills[i], -(grid.squares[i + 1] - grid.squares[i]));
  }
  model.add_constraint(name + "_qd", qdef, Sense::kEq, grid.squares.front());

  // phi_{i+1} <= zeta_i <= phi_i forces left-to-right filling.
  for (int i = 0; i + 1 < n; ++i) {
    model.add_constraint(name + "_oa" + std::to_string(i),
                         LinExpr().add(chain.fills[i + 1], 1).add(chain.steps[i], -1),
                         Sense::kLe, 0);
    model.add_constraint(name + "_ob" + std::to_string(i),
                         LinExpr().add(chain.steps[i], 1).add(chain.fills[i], -1),
                         Sense::kLe, 0);
  }
  return chain;
}

double ProductLink::error_bound() const {
  return scale_x * scale_y *
         approximation_error_bound(grid_plus.width(), grid_minus.width());
}

ProductLink linearize_product(MilpModel& model, VarId x, VarId y,
                              Bounds1D x_bounds, Bounds1D y_bounds,
                              int segments_plus, int segments_minus,
                              const std::string& name, double scale_x,
                              double scale_y) {
  require_finite(x_bounds, "product '" + name + "' factor x");
  require_finite(y_bounds, "product '" + name + "' factor y");
  ProductLink link;
  link.x = x;
  link.y = y;
  link.scale_x = scale_x > 0 ? scale_x
                             : (x_bounds.ub > x_bounds.lb
                                    ? x_bounds.ub - x_bounds.lb
                                    : std::max(1.0, std::abs(x_bounds.ub)));
  link.scale_y = scale_y > 0 ? scale_y
                             : (y_bounds.ub > y_bounds.lb
                                    ? y_bounds.ub - y_bounds.lb
                                    : std::max(1.0, std::abs(y_bounds.ub)));

  const double xl = x_bounds.lb / link.scale_x, xu = x_bounds.ub / link.scale_x;
  const double yl = y_bounds.lb / link.scale_y, yu = y_bounds.ub / link.scale_y;

  const double zp_lo = (xl + yl) / 2, zp_hi = (xu + yu) / 2;
  const double zm_lo = (xl - yu) / 2, zm_hi = (xu - yl) / 2;
  link.grid_plus = PiecewiseGrid::over_with_zero(zp_lo, zp_hi, segments_plus);
  link.grid_minus = PiecewiseGrid::over_with_zero(zm_lo, zm_hi, segments_minus);

  link.z_plus = model.add_variable(name + "_zp", VarKind::kContinuous,
                                   link.grid_plus.lo(), link.grid_plus.hi());
  link.z_minus = model.add_variable(name + "_zm", VarKind::kContinuous,
                                    link.grid_minus.lo(), link.grid_minus.hi());
  // z+ = (x/sx + y/sy)/2, z- = (x/sx - y/sy)/2
  model.add_constraint(name + "_zpl",
                       LinExpr().add(link.z_plus, 1)
                           .add(x, -0.5 / link.scale_x)
                           .add(y, -0.5 / link.scale_y),
                       Sense::kEq, 0);
  model.add_constraint(name + "_zml",
                       LinExpr().add(link.z_minus, 1)
                           .add(x, -0.5 / link.scale_x)
                           .add(y, 0.5 / link.scale_y),
                       Sense::kEq, 0);

  link.chain_plus = pw_square(model, link.z_plus, link.grid_plus, name + "_qp");
  link.chain_minus = pw_square(model, link.z_minus, link.grid_minus, name + "_qm");

  // Product bounds: scaled corner extremes widened by the one-sided chord
  // over-estimates on either half.
  const double corners[4] = {xl * yl, xl * yu, xu * yl, xu * yu};
  const double margin_plus =
      link.grid_plus.width() * link.grid_plus.width() / 4;
  const double margin_minus =
      link.grid_minus.width() * link.grid_minus.width() / 4;
  const double lo = *std::min_element(corners, corners + 4) - margin_minus;
  const double hi = *std::max_element(corners, corners + 4) + margin_plus;
  link.product = model.add_variable(name, VarKind::kContinuous, lo, hi);
  model.add_constraint(name + "_pd",
                       LinExpr().add(link.product, 1)
                           .add(link.chain_plus.square, -1)
                           .add(link.chain_minus.square, 1),
                       Sense::kEq, 0);
  return link;
}

double approximation_error_bound(double width_plus, double width_minus) {
  return (width_plus * width_plus + width_minus * width_minus) / 4;
}

}  // namespace caesuc::linearize
