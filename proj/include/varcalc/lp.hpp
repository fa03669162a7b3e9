// SPDX-License-Identifier: Apache-2.0
//
// Small dense linear programs: feasibility by phase-1 simplex, plus an
// optional phase-2 objective used to pick canonical certificates.
#pragma once

#include "varcalc/common.hpp"

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace varcalc::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kMaxVariables = 512;

enum class Sense { LessEq, GreaterEq, Equal };

struct Row {
  std::vector<std::pair<int, double>> terms;
  Sense sense = Sense::Equal;
  double rhs = 0.0;
};

class LPProblem {
public:
  /// Adds a variable with bounds and returns its index.
  int add_variable(double lower = 0.0, double upper = kInf);
  void add_row(std::vector<std::pair<int, double>> terms, Sense sense, double rhs);
  /// Minimization objective; unset means pure feasibility.
  void set_objective(std::vector<std::pair<int, double>> terms);

  std::size_t num_variables() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::optional<std::vector<std::pair<int, double>>>& objective() const { return objective_; }

private:
  std::vector<double> lower_, upper_;
  std::vector<Row> rows_;
  std::optional<std::vector<std::pair<int, double>>> objective_;
};

enum class Status { Feasible, Infeasible, Unbounded, Breakdown };

const char* to_string(Status s);

struct Result {
  Status status = Status::Breakdown;
  std::vector<double> x;
  /// Phase-1 optimum: total constraint violation that could not be removed.
  double infeasibility = 0.0;
  double objective = 0.0;
  int iterations = 0;
  std::string message;

  bool feasible() const { return status == Status::Feasible; }
};

/// Two-phase simplex with Bland's rule. When the problem has an objective and
/// is feasible, `x` minimizes it. Numerical trouble is reported as Breakdown,
/// never as Infeasible.
Result solve(const LPProblem& problem);

/// Largest violation of any row or bound by `x`.
double max_violation(const LPProblem& problem, const std::vector<double>& x);

}  // namespace varcalc::lp
