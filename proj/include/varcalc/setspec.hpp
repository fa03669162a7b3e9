// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "varcalc/expr.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varcalc::sets {

enum class SetKind { Sublevel, Graph, Epigraph, Singleton, Product };

/// fn(z) <= 0, or fn(z) == 0 when `equality`, over the ambient space.
struct Constraint {
  expr::FunctionDef fn;
  bool equality = false;
};

/// A closed set given by finitely many constraints. Graphs split the ambient
/// coordinates as (x, y) with the first `x_dim` belonging to x; epigraphs add
/// a trailing coordinate t with f(x) - t <= 0.
class SetSpec {
public:
  static SetSpec sublevel(std::vector<expr::FunctionDef> inequalities,
                          std::vector<expr::FunctionDef> equalities = {});
  static SetSpec graph(int x_dim, std::vector<expr::FunctionDef> inequalities,
                       std::vector<expr::FunctionDef> equalities = {});
  static SetSpec epigraph(const expr::FunctionDef& f);
  static SetSpec singleton(const Vec& point);
  static SetSpec product(const std::vector<SetSpec>& factors);

  SetKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(space_.dim()); }
  int x_dim() const { return x_dim_; }
  const expr::VarSpace& space() const { return space_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<SetSpec>& factors() const { return factors_; }

  /// Largest constraint violation at z (0 inside).
  double violation(const Vec& z) const;
  bool contains(const Vec& z, double tol = tol::geom) const { return violation(z) <= tol; }

  /// Every constraint is affine.
  bool polyhedral() const;

  std::string describe() const;

private:
  SetKind kind_ = SetKind::Sublevel;
  expr::VarSpace space_;
  int x_dim_ = 0;
  std::vector<Constraint> constraints_;
  std::vector<SetSpec> factors_;
};

/// Euclidean projection, exact for polyhedral sets by active-set
/// enumeration. Nullopt for other sets or when the set is empty.
std::optional<Vec> exact_projection(const SetSpec& set, const Vec& z);

}  // namespace varcalc::sets
