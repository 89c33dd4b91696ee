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

#include <cmath>

#include "caesuc/util.hpp"
#include "doctest.h"
#include "support/chord.hpp"

using namespace caesuc;
using namespace caesuc::linearize;
using milp::MilpModel;
using milp::VarId;
using milp::VarKind;

namespace {

// Interval for one remaining unknown implied by the model's rows when every
// other variable is pinned; the McCormick envelopes must collapse it to a
// point for binary indicator values.
struct Implied {
  double lo = -1e300;
  double hi = 1e300;
};

Implied implied_interval(const MilpModel& m, VarId unknown,
                         const std::vector<std::pair<VarId, double>>& fixed) {
  Implied out;
  const auto& uv = m.variable(unknown);
  out.lo = uv.lb;
  out.hi = uv.ub;
  for (const auto& con : m.constraints()) {
    double rest = 0;
    double coef = 0;
    bool touches = false;
    bool complete = true;
    for (const auto& t : con.terms) {
      if (t.var == unknown) {
        coef = t.coef;
        touches = true;
        continue;
      }
      bool found = false;
      for (const auto& [v, val] : fixed) {
        if (t.var == v) {
          rest += t.coef * val;
          found = true;
          break;
        }
      }
      if (!found) complete = false;
    }
    if (!touches || !complete || coef == 0) continue;
    const double bound = (con.rhs - rest) / coef;
    const bool upper = (con.sense == milp::Sense::kLe) == (coef > 0);
    if (con.sense == milp::Sense::kEq) {
      out.lo = std::max(out.lo, bound);
      out.hi = std::min(out.hi, bound);
    } else if (upper) {
      out.hi = std::min(out.hi, bound);
    } else {
      out.lo = std::max(out.lo, bound);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("piecewise grid: equal spacing and squares") {
  const PiecewiseGrid g = PiecewiseGrid::over(0, 4, 4);
  CHECK(g.points == std::vector<double>{0, 1, 2, 3, 4});
  CHECK(g.squares == std::vector<double>{0, 1, 4, 9, 16});
  CHECK(g.width() == 1.0);
  for (int i = 0; i + 1 < static_cast<int>(g.points.size()); ++i) {
    CHECK(g.points[i + 1] - g.points[i] == doctest::Approx(g.width()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(PiecewiseGrid::over(1, 1, 4), Error);
  CHECK_THROWS_AS(PiecewiseGrid::over(0, 1, 0), Error);
}

TEST_CASE("piecewise grid: zero snapping covers the range") {
  const PiecewiseGrid g = PiecewiseGrid::over_with_zero(-0.7, 1.1, 8);
  CHECK(g.lo() <= -0.7);
  CHECK(g.hi() >= 1.1);
  bool has_zero = false;
  for (double p : g.points) {
    if (p == 0.0) has_zero = true;
  }
  CHECK(has_zero);
  for (int i = 0; i + 1 < static_cast<int>(g.points.size()); ++i) {
    CHECK(g.points[i + 1] - g.points[i] == doctest::Approx(g.width()).epsilon(1e-12));
  }
  // Extension stays below one segment width on each side.
  CHECK(g.lo() >= -0.7 - g.width());
  CHECK(g.hi() <= 1.1 + g.width());

  // A non-straddling range needs no snapping.
  const PiecewiseGrid pos = PiecewiseGrid::over_with_zero(2, 3, 4);
  CHECK(pos.lo() == 2.0);
  CHECK(pos.hi() == 3.0);
}

TEST_CASE("chord oracle matches the divide points exactly") {
  const PiecewiseGrid g = PiecewiseGrid::over(-3, 5, 16);
  for (size_t i = 0; i < g.points.size(); ++i) {
    CHECK(std::abs(testing::chord_square(g, g.points[i]) - g.squares[i]) <= 1e-12);
  }
}

TEST_CASE("chord oracle: spec points") {
  const PiecewiseGrid g = PiecewiseGrid::over(0, 4, 4);
  // z = 0.5 sits on the [0,1] chord: value 0.5, true square 0.25.
  CHECK(testing::chord_square(g, 0.5) == doctest::Approx(0.5).epsilon(1e-15));

  const PiecewiseGrid one = PiecewiseGrid::over(1, 3, 1);
  CHECK(testing::chord_square(one, 2.0) == doctest::Approx((1.0 + 9.0) / 2).epsilon(1e-15));
}

TEST_CASE("chord over-estimates by at most w^2/4") {
  const PiecewiseGrid g = PiecewiseGrid::over(-2, 6, 16);
  const double cap = g.width() * g.width() / 4;
  for (int k = 0; k <= 4000; ++k) {
    const double z = -2 + 8.0 * k / 4000;
    const double gap = testing::chord_square(g, z) - z * z;
    CHECK(gap >= -1e-12);
    CHECK(gap <= cap + 1e-12);
  }
}

TEST_CASE("mccormick_binary_T collapses to alpha*T") {
  MilpModel m;
  const VarId alpha = m.add_variable("al", VarKind::kBinary, 0, 1);
  const VarId T = m.add_variable("T", VarKind::kContinuous, 290, 330);
  const VarId q = mccormick_binary_T(m, alpha, T, {290, 330}, "Q");

  for (double a : {0.0, 1.0}) {
    for (double t : {290.0, 310.0, 330.0}) {
      const Implied iv = implied_interval(m, q, {{alpha, a}, {T, t}});
      CHECK(iv.lo == doctest::Approx(a * t).epsilon(1e-12));
      CHECK(iv.hi == doctest::Approx(a * t).epsilon(1e-12));
    }
  }
  // Fractional alpha leaves slack (it is only exact for binaries).
  const Implied iv = implied_interval(m, q, {{alpha, 0.5}, {T, 310.0}});
  CHECK(iv.hi - iv.lo > 1.0);
}

TEST_CASE("mccormick_binary_T rejects unbounded factors") {
  MilpModel m;
  const VarId alpha = m.add_variable("al", VarKind::kBinary, 0, 1);
  const VarId T = m.add_variable("T", VarKind::kContinuous, 0, 1);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(mccormick_binary_T(m, alpha, T, {0, inf}, "Q"), Error);
}

TEST_CASE("mccormick_binary_p collapses to beta*p and needs a zero anchor") {
  MilpModel m;
  const VarId beta = m.add_variable("be", VarKind::kBinary, 0, 1);
  const VarId p = m.add_variable("p", VarKind::kContinuous, 0, 67);
  const VarId s = mccormick_binary_p(m, beta, p, 67, "S");

  for (double b : {0.0, 1.0}) {
    for (double pv : {0.0, 55.0, 67.0}) {
      const Implied iv = implied_interval(m, s, {{beta, b}, {p, pv}});
      CHECK(iv.lo == doctest::Approx(b * pv).epsilon(1e-12));
      CHECK(iv.hi == doctest::Approx(b * pv).epsilon(1e-12));
    }
  }

  const VarId neg = m.add_variable("pneg", VarKind::kContinuous, -1, 5);
  CHECK_THROWS_AS(mccormick_binary_p(m, beta, neg, 5, "S2"), Error);
}

TEST_CASE("pw_square builds the incremental chain") {
  MilpModel m;
  const PiecewiseGrid g = PiecewiseGrid::over(0, 4, 4);
  const VarId z = m.add_variable("z", VarKind::kContinuous, 0, 4);
  const PwChain chain = pw_square(m, z, g, "q");

  CHECK(chain.fills.size() == 4);
  CHECK(chain.steps.size() == 3);
  // 2 definition rows + 2 ordering rows per interior point.
  CHECK(m.num_constraints() == 2 + 2 * 3);

  // Pinning every fill pins z and the square to the chord encoding.
  std::vector<std::pair<VarId, double>> fixed;
  fixed.reserve(5);
  for (const VarId f : chain.fills) fixed.push_back({f, 0.0});
  fixed[0].second = 0.5;  // proper pattern for z = 0.5
  const Implied zi = implied_interval(m, z, fixed);
  CHECK(zi.lo == doctest::Approx(0.5).epsilon(1e-12));
  const Implied qi = implied_interval(m, chain.square, fixed);
  CHECK(qi.lo == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(qi.hi == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pw_square rejects variables outside the grid") {
  MilpModel m;
  const PiecewiseGrid g = PiecewiseGrid::over(0, 4, 4);
  const VarId z = m.add_variable("z", VarKind::kContinuous, -1, 4);
  CHECK_THROWS_AS(pw_square(m, z, g, "q"), Error);
}

TEST_CASE("linearize_product: scaling and structure") {
  MilpModel m;
  const VarId x = m.add_variable("mass", VarKind::kContinuous, 6.8e6, 1.12e7);
  const VarId y = m.add_variable("temp", VarKind::kContinuous, 290, 330);
  const ProductLink link =
      linearize_product(m, x, y, {6.8e6, 1.12e7}, {290, 330}, 16, 16, "x_mT");

  CHECK(link.scale_x == doctest::Approx(1.12e7 - 6.8e6).epsilon(1e-15));
  CHECK(link.scale_y == doctest::Approx(40.0).epsilon(1e-15));
  // Scaled factor ranges have width one, so each z range has width one and
  // w = 1/16; the true-unit error bound follows.
  CHECK(link.grid_plus.width() == doctest::Approx(1.0 / 16).epsilon(1e-9));
  const double expected_bound =
      link.scale() * approximation_error_bound(link.grid_plus.width(),
                                               link.grid_minus.width());
  CHECK(link.error_bound() == doctest::Approx(expected_bound).epsilon(1e-12));
  CHECK(link.error_bound() <=
        link.scale() * (2.0 / (16 * 16)) / 4 * 1.2601 + 1e-9);

  // Scaled product variable covers the corner range.
  const auto& pv = m.variable(link.product);
  const double xl = 6.8e6 / link.scale_x, xu = 1.12e7 / link.scale_x;
  const double yl = 290 / link.scale_y, yu = 330 / link.scale_y;
  CHECK(pv.lb <= xl * yl);
  CHECK(pv.ub >= xu * yu);
}

TEST_CASE("linearize_product: equal factors make the minus half exactly zero") {
  MilpModel m;
  const VarId x = m.add_variable("m", VarKind::kContinuous, 2, 6);
  const ProductLink link = linearize_product(m, x, x, {2, 6}, {2, 6}, 8, 8, "x_mm");
  // z- is pinned to zero by its definition row (terms cancel), and zero is a
  // divide point of the symmetric grid.
  const auto& zm = m.variable(link.z_minus);
  CHECK(zm.lb <= 0);
  CHECK(zm.ub >= 0);
  bool has_zero = false;
  for (double p : link.grid_minus.points) {
    if (p == 0.0) has_zero = true;
  }
  CHECK(has_zero);
  const Implied zi = implied_interval(m, link.z_minus, {{x, 4.0}});
  CHECK(zi.lo == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zi.hi == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("approximation_error_bound arithmetic") {
  CHECK(approximation_error_bound(0, 0) == 0);
  CHECK(approximation_error_bound(2, 2) == 2);
  // Halving both widths quarters the bound.
  CHECK(approximation_error_bound(1, 1) == 4 * approximation_error_bound(0.5, 0.5));
}
