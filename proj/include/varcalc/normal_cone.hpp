// SPDX-License-Identifier: Apache-2.0
//
// Limiting normal cones of constraint-defined sets, coderivatives of
// set-valued maps through their graphs, and the coderivative criterion for
// the Lipschitz-like property.
#pragma once

#include "varcalc/geometry.hpp"
#include "varcalc/sampling.hpp"
#include "varcalc/setspec.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varcalc::normal {

inline constexpr std::size_t kMaxBranchCombinations = 4096;

/// Subgradient pieces an active constraint may contribute.
struct ConstraintBranches {
  int constraint = -1;
  /// Smooth equality: its gradient spans a line in every cone.
  bool linear_span = false;
  Vec gradient;
  std::vector<geom::Polytope> options;
};

struct NormalConeResult {
  bool qualified = true;
  std::vector<int> active;
  std::vector<ConstraintBranches> branches;
  /// Union of cones; one per surviving branch combination.
  std::vector<geom::ConeSpec> cones;
  /// Multipliers over `active` (largest entry 1) when qualification fails.
  std::vector<double> witness;
  std::string diagnostic;
  std::size_t combinations = 0;

  /// Throws RefusalError with the diagnostic unless qualified.
  const std::vector<geom::ConeSpec>& require() const;
};

/// Throws InputError when x is not in the set (tolerance tol_geom).
NormalConeResult normal_cone(const sets::SetSpec& set, const Vec& x, const SampleParams& params = {});

/// {v : (v, -w) in N((x,y); gph F)} as conv(points) + cone per branch.
/// Empty union means the coderivative is empty at w.
geom::PolyhedronUnion coderivative(const sets::SetSpec& graph, const Vec& point, const Vec& w,
                                   const SampleParams& params = {});
geom::PolyhedronUnion coderivative(const sets::SetSpec& graph, const NormalConeResult& cone, const Vec& w);

/// Union over (v, w) in `pairs` of v + D*F(w), one convex piece per cone.
geom::PolyhedronUnion coderivative_image(const sets::SetSpec& graph, const NormalConeResult& cone,
                                         const geom::Polytope& pairs);

struct LipschitzLikeVerdict {
  bool lipschitz_like = false;
  /// D*F(x,y)(0), one cone per branch.
  std::vector<geom::ConeSpec> at_zero;
};

LipschitzLikeVerdict lipschitz_like_check(const sets::SetSpec& graph, const Vec& point,
                                          const SampleParams& params = {});

/// Nonnegative gamma over `vertices` and free mu over `lines` with
/// sum gamma v + sum mu l = 0 and sum gamma = 1; returns gamma.
std::optional<std::vector<double>> zero_combination(const std::vector<Vec>& vertices, const std::vector<Vec>& lines,
                                                    int dim);

bool cone_union_contains(const std::vector<geom::ConeSpec>& cones, const Vec& v);
std::string describe(const std::vector<geom::ConeSpec>& cones);

}  // namespace varcalc::normal
