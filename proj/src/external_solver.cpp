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

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "caesuc/solver.hpp"
#include "caesuc/util.hpp"

namespace caesuc::solver {

namespace {

std::string substitute(const std::string& tmpl, const std::string& key,
                       const std::string& value) {
  std::string out = tmpl;
  size_t pos = 0;
  while ((pos = out.find(key, pos)) != std::string::npos) {
    out.replace(pos, key.size(), value);
    pos += value.size();
  }
  return out;
}

}  // namespace

MipResult solve_external(const milp::MilpModel& model,
                         const std::string& command_template,
                         const std::string& workdir) {
  namespace fs = std::filesystem;
  if (command_template.find("{lp}") == std::string::npos ||
      command_template.find("{sol}") == std::string::npos) {
    fail(ErrorKind::kArgument,
         "external solver command must contain {lp} and {sol} placeholders");
  }
  std::error_code ec;
  fs::create_directories(workdir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create workdir '" + workdir + "': " + ec.message());

  const fs::path lp_path = fs::path(workdir) / (model.name() + ".lp");
  const fs::path sol_path = fs::path(workdir) / (model.name() + ".sol");
  {
    std::ofstream lp(lp_path);
    if (!lp) fail(ErrorKind::kIo, "cannot write " + lp_path.string());
    lp << milp::emit_lp(model);
  }
  fs::remove(sol_path, ec);

  std::string command = substitute(command_template, "{lp}", lp_path.string());
  command = substitute(command, "{sol}", sol_path.string());

  const auto t0 = std::chrono::steady_clock::now();
  const int rc = std::system(command.c_str());
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (rc != 0) {
    fail(ErrorKind::kSolver, "external solver exited with status " +
                                 std::to_string(rc) + ": " + command);
  }
  std::ifstream sol(sol_path);
  if (!sol) {
    fail(ErrorKind::kSolver,
         "external solver produced no solution file at " + sol_path.string());
  }
  std::ostringstream ss;
  ss << sol.rdbuf();

  MipResult result;
  result.solution = milp::read_solution(ss.str(), model);  // throws kIo on bad text
  result.wall_seconds = wall;
  switch (result.solution.status) {
    case milp::SolStatus::kOptimal: result.status = MipStatus::kOptimal; break;
    case milp::SolStatus::kFeasible: result.status = MipStatus::kFeasible; break;
    case milp::SolStatus::kLimit: result.status = MipStatus::kLimit; break;
    case milp::SolStatus::kInfeasible:
    case milp::SolStatus::kUnbounded: result.status = MipStatus::kInfeasible; break;
  }
  if (result.solution.status == milp::SolStatus::kOptimal ||
      result.solution.status == milp::SolStatus::kFeasible) {
    result.solution.objective = model.objective_value(result.solution.values);
    result.bound = result.solution.objective -
                   result.solution.gap * std::max(1.0, std::abs(result.solution.objective));
  }
  return result;
}

}  // namespace caesuc::solver
