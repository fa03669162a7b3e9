// SPDX-License-Identifier: Apache-2.0
//
// Verifiers for the sum, intersection and difference rules, and for the
// agreement between direct subdifferentials and coderivatives of epigraphs.
#pragma once

#include "varcalc/expr.hpp"
#include "varcalc/geometry.hpp"
#include "varcalc/sampling.hpp"
#include "varcalc/setspec.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varcalc::calculus {

/// Outcome of testing inner ⊆ outer for unions of polyhedra.
struct Inclusion {
  bool holds = true;
  /// Worst reassembly residual over the membership witnesses found.
  double residual = 0.0;
  /// First point of the inner set found outside, when the test fails.
  std::optional<Vec> counterexample;
};

Inclusion check_inclusion(const geom::PolyhedronUnion& inner, const geom::PolyhedronUnion& outer);

geom::PolyhedronUnion as_polyhedra(const geom::PolytopeUnion& u);

struct SumRuleReport {
  /// Subdifferential of the sum and the sum of subdifferentials.
  geom::PolyhedronUnion lhs, rhs;
  geom::PolyhedronUnion singular_lhs, singular_rhs;
  Inclusion inclusion, reverse, singular_inclusion;
  bool equality = false;
  double hausdorff = 0.0;
  std::size_t combinations = 0;

  bool holds() const { return inclusion.holds && singular_inclusion.holds; }
};

/// Terms are finite functions on one space.
SumRuleReport verify_sum_rule(const std::vector<expr::FunctionDef>& terms, const Vec& x,
                              const SampleParams& params = {});
/// First term is the indicator of `set`; `rest` live on the set's space.
SumRuleReport verify_sum_rule(const sets::SetSpec& set, const std::vector<expr::FunctionDef>& rest, const Vec& x,
                              const SampleParams& params = {});

struct IntersectionReport {
  bool qualified = true;
  /// Per-set multipliers (largest 1) of a vanishing normal combination.
  std::vector<double> witness;
  std::string diagnostic;
  std::vector<geom::ConeSpec> lhs;
  std::vector<std::vector<geom::ConeSpec>> terms;
  Inclusion inclusion;
  std::size_t combinations = 0;

  bool holds() const { return qualified && inclusion.holds; }
};

/// Sets must share one variable space.
IntersectionReport verify_intersection_rule(const std::vector<sets::SetSpec>& sets, const Vec& x,
                                            const SampleParams& params = {});

struct DifferenceReport {
  std::optional<geom::Polytope> lhs, first, second;
  /// Regular subdifferential of the subtracted term is empty.
  bool vacuous = false;
  Inclusion inclusion;
  bool minimizer_flag = false;
  /// Second regular set inside the first; meaningful when `second` is nonempty.
  bool minimizer_condition = true;

  bool holds() const { return inclusion.holds && (!minimizer_flag || minimizer_condition); }
};

DifferenceReport verify_difference_rule(const expr::FunctionDef& f1, const expr::FunctionDef& f2, const Vec& x,
                                        bool local_minimizer = false);

struct EpigraphReport {
  geom::PolytopeUnion direct;
  geom::ConeSpec singular_direct;
  geom::PolyhedronUnion via_epigraph, singular_via_epigraph;
  double discrepancy = 0.0;
  double singular_discrepancy = 0.0;

  bool consistent(double tol = 1e-6) const { return discrepancy <= tol && singular_discrepancy <= tol; }
};

EpigraphReport epigraph_consistency_check(const expr::FunctionDef& f, const Vec& x, const SampleParams& params = {});

}  // namespace varcalc::calculus
