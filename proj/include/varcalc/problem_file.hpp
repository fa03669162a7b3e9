// SPDX-License-Identifier: Apache-2.0
//
// Sectioned plain-text problem files. Example:
//
//   [vars]
//   x = x
//   y = y
//   [lower]
//   objective = y
//   constraint = (- (- x) y)
//   [upper]
//   objective = (+ (* x x) (* y y))
//   [candidates]
//   origin = 0 0
//   [grid]
//   box = -2 2
//
// Values after '=' run to the end of the line; '#' starts a comment.
#pragma once

#include "varcalc/expr.hpp"
#include "varcalc/sampling.hpp"
#include "varcalc/setspec.hpp"
#include "varcalc/valuefn.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace varcalc::cli {

/// An objective with inequality constraints.
struct Block {
  std::optional<expr::FunctionDef> objective;
  std::vector<expr::FunctionDef> constraints;
};

struct ExtremalSpec {
  std::vector<std::string> sets;
  std::vector<Vec> shifts;
  std::vector<int> schedule;
};

struct ProblemFile {
  std::vector<std::string> x_names, y_names;
  /// x names followed by y names.
  expr::VarSpace joint;
  expr::VarSpace x_space;
  /// Lower functions and the upper objective use `joint`.
  Block lower;
  /// Upper constraints use `x_space`.
  Block upper;
  /// Single-level program over `joint`.
  Block program;
  std::map<std::string, expr::FunctionDef> functions;
  std::map<std::string, sets::SetSpec> sets;
  std::vector<std::pair<std::string, Vec>> candidates;
  std::optional<valuefn::GridSpec> grid;
  SampleParams params;
  std::vector<double> kappa_grid;
  std::optional<ExtremalSpec> extremal;
  /// File contents as read.
  std::string source;

  int x_dim() const { return static_cast<int>(x_names.size()); }
  int y_dim() const { return static_cast<int>(y_names.size()); }
  /// Throws InputError naming the valid candidates.
  const Vec& candidate(const std::string& name) const;
  /// Resolves lower.objective, lower.constraint.N, upper.objective,
  /// upper.constraint.N, program.objective, program.constraint.N,
  /// functions.NAME or a bare function name.
  const expr::FunctionDef& function(const std::string& path) const;
  /// Resolves lower (graph of the lower feasible map), upper, program, or
  /// sets.NAME / a bare set name.
  sets::SetSpec set(const std::string& path) const;
};

/// Throws InputError with the offending line number.
ProblemFile parse_problem(const std::string& text);
ProblemFile load_problem(const std::string& path);

}  // namespace varcalc::cli
