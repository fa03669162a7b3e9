// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "varcalc/expr.hpp"
#include "varcalc/geometry.hpp"
#include "varcalc/sampling.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varcalc::subdiff {

/// One active pattern met while probing the neighbourhood of a point.
struct PatternRecord {
  expr::ActivePattern pattern;
  int hits = 0;
  /// Smallest probe radius at which the pattern appeared; 0 for the point itself.
  double smallest_radius = 0.0;
  /// False when some selection is inactive at the base point.
  bool consistent = true;
  /// Regular subdifferential contributed by this pattern, if nonempty.
  std::optional<geom::Polytope> contribution;
};

struct SubdiffResult {
  std::optional<geom::Polytope> regular;
  geom::PolytopeUnion basic;
  geom::ConeSpec singular;
  std::string method = "symbolic";
  std::vector<PatternRecord> census;
};

std::optional<geom::Polytope> regular_subdifferential(const expr::FunctionDef& f, const Vec& x);

geom::PolytopeUnion basic_subdifferential(const expr::FunctionDef& f, const Vec& x, const SampleParams& params,
                                          std::vector<PatternRecord>* census = nullptr);

/// Always {0}: every expression is locally Lipschitz.
geom::ConeSpec singular_subdifferential(const expr::FunctionDef& f, const Vec& x);

SubdiffResult compute(const expr::FunctionDef& f, const Vec& x, const SampleParams& params);

std::string describe(const expr::ActivePattern& pattern);

}  // namespace varcalc::subdiff
