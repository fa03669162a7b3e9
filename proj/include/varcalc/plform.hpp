// SPDX-License-Identifier: Apache-2.0
//
// First-order local model of a piecewise-smooth function: the directional
// derivative d -> f'(x; d) written as a min over pieces of a max over linear
// functionals. The regular subdifferential is the intersection of the piece
// hulls.
#pragma once

#include "varcalc/expr.hpp"
#include "varcalc/geometry.hpp"

#include <optional>
#include <vector>

namespace varcalc::plform {

struct DirectionalForm {
  int dim = 0;
  /// d -> min_j max_{a in pieces[j]} <a, d>
  std::vector<std::vector<Vec>> pieces;

  double operator()(const Vec& d) const;
};

/// Builds the form at `x`, resolving every reachable piecewise node with the
/// selections in `pattern` (nodes absent from it use activity at `x`).
DirectionalForm directional_form(const expr::FunctionDef& f, const Vec& x, const expr::ActivePattern& pattern);

/// Keeps only the selections of nodes reachable through selected arguments.
expr::ActivePattern reachable(const expr::FunctionDef& f, const expr::ActivePattern& pattern);

/// Intersection of piece hulls; nullopt when empty.
std::optional<geom::Polytope> regular_set(const DirectionalForm& form);

}  // namespace varcalc::plform
