// SPDX-License-Identifier: Apache-2.0
//
// Small-dimension convex geometry in vertex representation. Subdifferentials,
// normal cones and coderivative values are all carried by these types.
#pragma once

#include "varcalc/common.hpp"
#include "varcalc/lp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varcalc::geom {

inline constexpr int kMaxHullDim = 4;

/// Convex hull of a nonempty finite vertex list.
class Polytope {
public:
  Polytope() = default;
  /// Stores `vertices` as given; use `convex_hull` for canonical form.
  Polytope(int dim, std::vector<Vec> vertices);
  static Polytope point(const Vec& p) { return Polytope(static_cast<int>(p.size()), {p}); }

  int dim() const { return dim_; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  bool is_point() const { return vertices_.size() == 1; }

  /// Same vertices, possibly reordered; true if lists match within `tol`.
  bool approx_equal(const Polytope& other, double tol = tol::geom) const;

private:
  int dim_ = 0;
  std::vector<Vec> vertices_;
};

/// Finite union of polytopes of equal dimension.
class PolytopeUnion {
public:
  PolytopeUnion() = default;
  PolytopeUnion(int dim, std::vector<Polytope> parts);

  int dim() const { return dim_; }
  const std::vector<Polytope>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  std::vector<Vec> all_vertices() const;

  /// Hulls every part, drops parts contained in another part, sorts.
  PolytopeUnion canonical() const;

private:
  int dim_ = 0;
  std::vector<Polytope> parts_;
};

/// {sum_g c_g g + l : c_g >= 0, l in span(lineality)}.
class ConeSpec {
public:
  ConeSpec() = default;
  ConeSpec(int dim, std::vector<Vec> generators = {}, std::vector<Vec> lineality = {});
  static ConeSpec zero(int dim) { return ConeSpec(dim); }
  static ConeSpec full(int dim);

  int dim() const { return dim_; }
  const std::vector<Vec>& generators() const { return generators_; }
  const std::vector<Vec>& lineality() const { return lineality_; }
  bool is_zero() const;

  /// Normalizes generators, drops zero and duplicate rays, sorts.
  ConeSpec canonical() const;

private:
  int dim_ = 0;
  std::vector<Vec> generators_;
  std::vector<Vec> lineality_;
};

/// conv(points) + cone; the x-block values of coderivatives.
struct Polyhedron {
  Polytope points;
  ConeSpec cone;

  int dim() const { return points.dim(); }
  bool bounded() const { return cone.is_zero(); }
};

using PolyhedronUnion = std::vector<Polyhedron>;

// ---------------------------------------------------------------------------
// Hulls and membership

/// Extreme points of `points` (any dimension), deduplicated and sorted.
std::vector<Vec> extreme_points(const std::vector<Vec>& points, double tol = tol::geom);

/// Canonical hull; rejects empty input and dimension above 4.
Polytope convex_hull(const std::vector<Vec>& points);

/// Convex weights expressing `target` over `points`, if any.
std::optional<std::vector<double>> convex_weights(const Vec& target, const std::vector<Vec>& points,
                                                  double tol = tol::geom);

bool contains(const Polytope& outer, const Vec& p, double tol = tol::geom);
bool contains(const Polytope& outer, const Polytope& inner, double tol = tol::geom);

/// Outcome of a linear feasibility question.
struct Feasibility {
  lp::Status status = lp::Status::Breakdown;
  std::vector<double> assignment;
  double infeasibility = 0.0;

  bool feasible() const { return status == lp::Status::Feasible; }
};

Feasibility lp_feasible(const lp::LPProblem& problem);

struct Membership {
  bool member = false;
  lp::Status status = lp::Status::Breakdown;
  std::vector<double> base_weights;
  /// Vertex weights per scaled term; its scale is the weight sum.
  std::vector<std::vector<double>> scaled_weights;
  std::vector<double> scales;
  std::vector<std::vector<double>> fixed_weights;
  /// Generator coefficients, then lineality coefficients, per cone.
  std::vector<std::vector<double>> cone_coefficients;
  bool hit_cone_cap = false;
  double infeasibility = 0.0;
  double residual = 0.0;
};

struct FixedTerm {
  double factor = 1.0;
  Polytope set;
};

/// Decides target in base + sum_i lambda_i P_i (lambda_i >= 0 free) +
/// sum_j c_j Q_j (c_j fixed) + sum_k K_k with a single LP.
Membership minkowski_membership(const Vec& target, const Polytope& base,
                                const std::vector<Polytope>& scaled_terms,
                                const std::vector<FixedTerm>& fixed_terms,
                                const std::vector<ConeSpec>& cones);

bool contains(const Polyhedron& outer, const Vec& p);
bool contains(const Polyhedron& outer, const Polyhedron& inner);
/// True if every point of `inner` lies in the union (checked per piece, then
/// on a sample of `inner` when no single piece holds it).
bool contains(const PolyhedronUnion& outer, const Polyhedron& inner);

/// Rays of `cone` lie in `outer`'s recession cone.
bool cone_contains(const ConeSpec& outer, const Vec& ray);

// ---------------------------------------------------------------------------
// H-representation

struct HRep {
  Mat A;  // A v <= b
  Vec b;
  Mat E;  // E v == e
  Vec e;
};

HRep to_hrep(const Polytope& p);

/// Vertices of the bounded set {A v <= b, E v = e}; empty when infeasible.
std::vector<Vec> enumerate_vertices(const HRep& h, double tol = 1e-9);

std::optional<Polytope> intersect(const std::vector<Polytope>& parts);

Polytope minkowski_sum(const Polytope& a, const Polytope& b);
Polytope scaled(double factor, const Polytope& p);
Polytope translated(const Polytope& p, const Vec& shift);

// ---------------------------------------------------------------------------
// Distances

/// Closest point of conv(vertices) to `p`.
Vec project(const Vec& p, const Polytope& set);
double distance(const Vec& p, const Polytope& set);
double distance(const Vec& p, const PolytopeUnion& set);

/// Symmetric distance between unions: support-function gaps over `n_dirs`
/// directions for single convex parts, plus point-to-set distances from
/// vertices and sampled interior points of each part.
double hausdorff_distance(const PolytopeUnion& a, const PolytopeUnion& b, int n_dirs = 64);

std::string describe(const Polytope& p);
std::string describe(const PolytopeUnion& u);
std::string describe(const ConeSpec& c);

}  // namespace varcalc::geom
