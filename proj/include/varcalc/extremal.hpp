// SPDX-License-Identifier: Apache-2.0
//
// Constructive extremal principle: for shifted set systems, minimize
//   phi_k(x) = sqrt(sum_i dist(x + a_ik, set_i)^2) + |x - xbar|^2
// and read off unit-normalized normals at the nearest points.
#pragma once

#include "varcalc/setspec.hpp"

#include <functional>
#include <string>
#include <vector>

namespace varcalc::extremal {

struct ExtremalStep {
  int k = 0;
  Vec x;
  /// Root of the summed squared distances at the minimizer.
  double gamma = 0.0;
  std::vector<Vec> nearest;
  std::vector<Vec> normals;
  /// Sum of squared normal norms.
  double normalization = 0.0;
  /// |sum_i v_i|.
  double euler_residual = 0.0;
  /// |sum_i v_i + 2 (x - xbar)|, the stationarity defect of phi_k.
  double fermat_residual = 0.0;
  double objective = 0.0;
};

struct ExtremalTrace {
  std::vector<ExtremalStep> steps;
  /// Some gamma vanished: the shifted sets still meet.
  bool gamma_zero = false;
  int gamma_zero_at = -1;
  std::string diagnostic;
};

using ShiftFn = std::function<std::vector<Vec>(int k)>;

/// Shifts a_ik = base_i / k.
ShiftFn harmonic_shifts(std::vector<Vec> base);

std::vector<int> default_schedule();

/// Stops at the first k with vanishing gamma.
ExtremalTrace extremal_principle_solve(const std::vector<sets::SetSpec>& sets, const Vec& xbar,
                                       const ShiftFn& shifts, const std::vector<int>& ks = default_schedule());

}  // namespace varcalc::extremal
