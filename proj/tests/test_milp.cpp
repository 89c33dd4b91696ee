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

#include "caesuc/milp.hpp"

#include "caesuc/util.hpp"
#include "doctest.h"

using namespace caesuc;
using namespace caesuc::milp;

namespace {

MilpModel tiny_model() {
  MilpModel m("tiny");
  const VarId x = m.add_variable("x", VarKind::kBinary, 0, 1);
  const VarId y = m.add_variable("y", VarKind::kContinuous, 0, 10);
  m.add_objective_term(x, 2);
  m.add_objective_term(y, 3);
  m.add_objective_constant(7);
  m.add_constraint("c1", LinExpr().add(x, 1).add(y, 1), Sense::kLe, 1);
  return m;
}

}  // namespace

TEST_CASE("add_variable") {
  MilpModel m;
  const VarId u = m.add_variable("u_t1_i2", VarKind::kBinary, 0, 1);
  CHECK(m.variable(u).lb == 0);
  CHECK(m.variable(u).ub == 1);

  const VarId fixed = m.add_variable("fx", VarKind::kContinuous, 5, 5);
  CHECK(m.variable(fixed).lb == m.variable(fixed).ub);

  CHECK_THROWS_AS(m.add_variable("bad", VarKind::kContinuous, 3, 1), Error);
  CHECK_THROWS_AS(m.add_variable("u_t1_i2", VarKind::kBinary, 0, 1), Error);
  CHECK_THROWS_AS(m.add_variable("b2", VarKind::kBinary, -1, 1), Error);
  CHECK_THROWS_AS(m.add_variable("sp ace", VarKind::kContinuous, 0, 1), Error);
}

TEST_CASE("add_constraint") {
  MilpModel m;
  const VarId x = m.add_variable("x", VarKind::kContinuous, 0, 1);
  const VarId y = m.add_variable("y", VarKind::kContinuous, 0, 1);

  const ConId c = m.add_constraint("c1", LinExpr().add(x, 1).add(y, 1), Sense::kLe, 1);
  CHECK(m.constraint(c).terms.size() == 2);

  // Merged duplicates, then dropped: 1e-13 * x is below the drop tolerance.
  CHECK_THROWS_AS(m.add_constraint("c2", LinExpr().add(x, 1e-13), Sense::kEq, 0), Error);
  CHECK_THROWS_AS(m.add_constraint("c3", LinExpr().add(x, 0.5).add(x, -0.5), Sense::kEq, 0), Error);
  CHECK_THROWS_AS(m.add_constraint("c1", LinExpr().add(x, 1), Sense::kLe, 2), Error);
  CHECK_THROWS_AS(m.add_constraint("c4", LinExpr().add(VarId{99}, 1), Sense::kLe, 2), Error);

  // Merge keeps the sum when it is material.
  const ConId c5 = m.add_constraint("c5", LinExpr().add(x, 0.5).add(x, 0.25), Sense::kGe, 0);
  CHECK(m.constraint(c5).terms.size() == 1);
  CHECK(m.constraint(c5).terms[0].coef == 0.75);
}

TEST_CASE("freeze forbids mutation") {
  MilpModel m = tiny_model();
  m.freeze();
  CHECK_THROWS_AS(m.add_variable("z", VarKind::kContinuous, 0, 1), Error);
  CHECK_THROWS_AS(m.add_objective_constant(1), Error);
}

TEST_CASE("emit_lp golden fixture") {
  const std::string expected =
      "\\ Problem: tiny\n"
      "Minimize\n"
      " obj: 2 x + 3 y + 7\n"
      "Subject To\n"
      " c1: 1 x + 1 y <= 1\n"
      "Bounds\n"
      " 0 <= x <= 1\n"
      " 0 <= y <= 10\n"
      "Binaries\n"
      " x\n"
      "End\n";
  CHECK(emit_lp(tiny_model()) == expected);
}

TEST_CASE("emit_lp: empty objective emits literal zero") {
  MilpModel m("empty");
  m.add_variable("x", VarKind::kContinuous, 0, 2);
  m.add_constraint("c", LinExpr().add(m.find_variable("x"), 1), Sense::kGe, 1);
  const std::string lp = emit_lp(m);
  CHECK(lp.find("Minimize\n obj: 0\n") != std::string::npos);
  CHECK(lp.find("Binaries") == std::string::npos);
}

TEST_CASE("emit_lp is deterministic") {
  CHECK(emit_lp(tiny_model()) == emit_lp(tiny_model()));
}

TEST_CASE("lp round trip preserves every coefficient") {
  MilpModel m("roundtrip");
  const VarId a = m.add_variable("a", VarKind::kContinuous, -1.0 / 3.0, 1e7);
  const VarId b = m.add_variable("b", VarKind::kBinary, 0, 1);
  const VarId c = m.add_variable("c", VarKind::kContinuous, 0.1, 0.1);
  m.add_objective_term(a, 1.0 / 3.0);
  m.add_objective_term(c, -1.2345678901234567e-7);
  m.add_objective_constant(3.25);
  m.add_constraint("r1", LinExpr().add(a, 0.30000000000000004).add(b, -17.125), Sense::kEq, 1e-9);
  m.add_constraint("r2", LinExpr().add(b, 123456.78901234567).add(c, 1), Sense::kGe, -2.5);

  const std::string text = emit_lp(m);
  const MilpModel parsed = parse_lp(text, "roundtrip");
  CHECK(emit_lp(parsed) == text);

  CHECK(parsed.num_variables() == 3);
  CHECK(parsed.variables()[0].lb == -1.0 / 3.0);
  CHECK(parsed.objective()[0] == 1.0 / 3.0);
  CHECK(parsed.objective()[2] == -1.2345678901234567e-7);
  CHECK(parsed.objective_constant() == 3.25);
  CHECK(parsed.constraints()[0].terms[0].coef == 0.30000000000000004);
  CHECK(parsed.constraints()[0].rhs == 1e-9);
  CHECK(parsed.constraints()[1].terms[0].coef == 123456.78901234567);
  CHECK(parsed.variables()[1].kind == VarKind::kBinary);
}

TEST_CASE("emit_mps golden fixture") {
  const std::string expected =
      "NAME          tiny\n"
      "ROWS\n"
      " N  OBJ\n"
      " L  c0000000\n"
      "COLUMNS\n"
      "    M0        'MARKER'  'INTORG'\n"
      "    x0000000  OBJ       2\n"
      "    x0000000  c0000000  1\n"
      "    M1        'MARKER'  'INTEND'\n"
      "    x0000001  OBJ       3\n"
      "    x0000001  c0000000  1\n"
      "RHS\n"
      "    RHS       OBJ       -7\n"
      "    RHS       c0000000  1\n"
      "BOUNDS\n"
      " BV BND       x0000000\n"
      " LO BND       x0000001  0\n"
      " UP BND       x0000001  10\n"
      "ENDATA\n";
  CHECK(emit_mps(tiny_model()) == expected);
}

TEST_CASE("stats are exact") {
  const MilpModel m = tiny_model();
  const ModelStats s = m.stats();
  CHECK(s.variables == 2);
  CHECK(s.binaries == 1);
  CHECK(s.constraints == 1);
  CHECK(s.nonzeros == 2);
}

TEST_CASE("read_solution") {
  MilpModel m = tiny_model();

  SUBCASE("defaults missing variables to zero with warnings") {
    const SolutionVector s = read_solution("status feasible\n", m);
    CHECK(s.values == std::vector<double>{0, 0});
    CHECK(s.status == SolStatus::kFeasible);
    CHECK(s.warnings.size() == 2);
  }

  SUBCASE("out-of-bounds binary is an error") {
    CHECK_THROWS_AS(read_solution("x 2\n", m), Error);
  }
  SUBCASE("fractional binary is an error") {
    CHECK_THROWS_AS(read_solution("x 0.5\n", m), Error);
  }
  SUBCASE("unknown variable is an error") {
    CHECK_THROWS_AS(read_solution("zz 1\n", m), Error);
  }
  SUBCASE("unparseable line is an error") {
    CHECK_THROWS_AS(read_solution("x\n", m), Error);
    CHECK_THROWS_AS(read_solution("x one\n", m), Error);
  }

  SUBCASE("write/read round trip") {
    SolutionVector s;
    s.values = {1.0, 0.25};
    s.objective = m.objective_value(s.values);
    s.gap = 0.0005;
    s.status = SolStatus::kOptimal;
    const SolutionVector back = read_solution(write_solution(s, m), m);
    CHECK(back.values == s.values);
    CHECK(back.objective == s.objective);
    CHECK(back.gap == s.gap);
    CHECK(back.status == s.status);
    CHECK(back.warnings.empty());
  }
}

TEST_CASE("objective_value includes the constant") {
  const MilpModel m = tiny_model();
  CHECK(m.objective_value({1.0, 2.0}) == 2 * 1 + 3 * 2 + 7);
}
