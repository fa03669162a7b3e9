// SPDX-License-Identifier: Apache-2.0
//
// Brute-force oracles built only from function evaluations. They serve as
// independent cross-checks of the symbolic engine.
#pragma once

#include "varcalc/expr.hpp"
#include "varcalc/geometry.hpp"
#include "varcalc/sampling.hpp"
#include "varcalc/setspec.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace varcalc::oracle {

using ScalarFn = std::function<double(const Vec&)>;

/// {v : <v,d> <= (f(x + rho d) - f(x)) / rho + eps} over all given radii and
/// directions. Nullopt when no vector passes every test.
std::optional<geom::Polytope> quotient_polytope(const ScalarFn& f, const Vec& x, const std::vector<double>& rhos,
                                                double eps, const std::vector<Vec>& dirs);

struct SubdiffOracle {
  /// Accepted gradient candidates at every radius.
  std::vector<Vec> cloud;
  /// Extrapolated limits of the candidates, one per direction.
  std::vector<Vec> limits;
  /// Relaxed regular subdifferentials at the point and at tie points.
  std::vector<geom::Polytope> fills;
  std::vector<Vec> cluster_centers;
  geom::PolytopeUnion hull;
  int candidates = 0;
  int accepted = 0;
};

SubdiffOracle sampled_subdiff(const expr::FunctionDef& f, const Vec& x, const SampleParams& params);

struct NormalOracle {
  std::vector<Vec> directions;
  int samples = 0;
  int outside = 0;
};

/// Throws InputError("grid too coarse ...") when a projection grid holds no
/// feasible point.
NormalOracle sampled_normal_cone(const sets::SetSpec& set, const Vec& x, const SampleParams& params);

/// Nearest point of the set found on a lattice over the cube of the given
/// half-width around z, refined near the boundary. Nullopt when the lattice
/// holds no feasible point.
std::optional<Vec> grid_projection(const sets::SetSpec& set, const Vec& z, double half_width,
                                   double max_points = 2e5);

/// Angle between unit `u` and the closest point of the cone.
double angle_to_cone(const Vec& u, const geom::ConeSpec& cone);
/// Largest angle from an oracle direction to the union of cones.
double max_angle_to_union(const std::vector<Vec>& dirs, const std::vector<geom::ConeSpec>& cones);
/// Largest angle from a sampled unit vector of the cones to the nearest oracle direction.
double coverage_gap(const std::vector<geom::ConeSpec>& cones, const std::vector<Vec>& dirs);

struct LipschitzSample {
  bool bounded = false;
  double worst_ratio = 0.0;
  Vec worst_x, worst_u;
};

/// Direct test of F(x) cap V inside F(u) + ell |x - u| B near the point.
LipschitzSample sampled_lipschitz_like(const sets::SetSpec& graph, const Vec& point, const SampleParams& params,
                                       double ell = 1e3);

}  // namespace varcalc::oracle
