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
// MILP building blocks for bilinear terms.
//
// Binary-by-continuous products use McCormick envelopes, which are exact
// (not a relaxation) when one factor is binary. Continuous-by-continuous
// products go through the difference-of-squares identity
//     x*y = ((x+y)/2)^2 - ((x-y)/2)^2
// with each square replaced by an incremental-format piecewise chord. The
// chord over-estimates a square by at most (segment width)^2/4, so the
// product error is bounded by (w+^2 + w-^2)/4.
//
// Factor ranges in this problem differ by orders of magnitude (air mass vs
// temperature), so linearize_product normalizes each factor by a scale
// (bound width by default) and the product variable carries the scaled
// value x*y/(scale_x*scale_y); callers fold the scales into row
// coefficients and error_bound() reports true units.

#ifndef CAESUC_LINEARIZE_HPP_
#define CAESUC_LINEARIZE_HPP_

#include <string>
#include <vector>

#include "caesuc/milp.hpp"

namespace caesuc::linearize {

struct Bounds1D {
  double lb = 0;
  double ub = 0;
};

// Equally spaced divide points with precomputed squares.
struct PiecewiseGrid {
  std::vector<double> points;   // z_1 .. z_{n+1}
  std::vector<double> squares;  // z_i^2

  static PiecewiseGrid over(double lo, double hi, int segments);
  // Covers [lo, hi] (extending minimally) such that 0 is a divide point
  // whenever the range straddles it.
  static PiecewiseGrid over_with_zero(double lo, double hi, int segments);

  int segments() const { return static_cast<int>(points.size()) - 1; }
  double width() const { return points[1] - points[0]; }
  double lo() const { return points.front(); }
  double hi() const { return points.back(); }
};

// Exact product Q = alpha*T for binary alpha and T in [bounds.lb, bounds.ub].
// Adds Q and four envelope rows.
milp::VarId mccormick_binary_T(milp::MilpModel& model, milp::VarId alpha,
                               milp::VarId T, Bounds1D bounds,
                               const std::string& name);

// Zero-anchored variant S = beta*p for p in [0-anchored lb, p_max]; the
// caller must shift p first if its lower bound is negative.
milp::VarId mccormick_binary_p(milp::MilpModel& model, milp::VarId beta,
                               milp::VarId p, double p_max,
                               const std::string& name);

struct PwChain {
  milp::VarId square;
  std::vector<milp::VarId> fills;  // phi, one per segment
  std::vector<milp::VarId> steps;  // zeta binaries, one per interior point
};

// Ties `square` to the left-to-right incremental chord of z^2 over the grid;
// z's bounds must lie within the grid range.
PwChain pw_square(milp::MilpModel& model, milp::VarId z,
                  const PiecewiseGrid& grid, const std::string& name);

struct ProductLink {
  milp::VarId x, y;
  milp::VarId product;  // carries x*y / (scale_x*scale_y)
  double scale_x = 1;
  double scale_y = 1;
  milp::VarId z_plus, z_minus;
  PiecewiseGrid grid_plus, grid_minus;
  PwChain chain_plus, chain_minus;

  double scale() const { return scale_x * scale_y; }
  // Worst-case |scale()*product - x*y| in true units.
  double error_bound() const;
};

// Difference-of-squares linearization of x*y. Zero scales request the
// default (factor bound width). Segment counts are per half.
ProductLink linearize_product(milp::MilpModel& model, milp::VarId x,
                              milp::VarId y, Bounds1D x_bounds,
                              Bounds1D y_bounds, int segments_plus,
                              int segments_minus, const std::string& name,
                              double scale_x = 0, double scale_y = 0);

// (w+^2 + w-^2)/4 for unit-scaled factors.
double approximation_error_bound(double width_plus, double width_minus);

}  // namespace caesuc::linearize

#endif  // CAESUC_LINEARIZE_HPP_
