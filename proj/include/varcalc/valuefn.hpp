// SPDX-License-Identifier: Apache-2.0
//
// Optimal value functions theta(x) = inf { cost(x, y) : constraints(x, y) <= 0 }
// by exhaustive grid search over a box of y values, with argmin sets, an
// inner semicontinuity probe for the argmin map, and coderivative-based
// upper estimates of the subdifferentials of theta.
#pragma once

#include "varcalc/expr.hpp"
#include "varcalc/geometry.hpp"
#include "varcalc/normal_cone.hpp"
#include "varcalc/sampling.hpp"
#include "varcalc/setspec.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace varcalc::valuefn {

/// Cost and inequality constraints over the joint space (x, y); the first
/// `x_dim` coordinates are parameters.
struct ParametricProblem {
  expr::FunctionDef cost;
  std::vector<expr::FunctionDef> constraints;
  int x_dim = 0;

  int y_dim() const { return static_cast<int>(cost.dim()) - x_dim; }
  /// Throws InputError on inconsistent spaces or empty blocks.
  void validate() const;
  /// The graph of the feasible-set map.
  sets::SetSpec graph() const;
};

struct GridSpec {
  std::vector<std::pair<double, double>> y_box;
  int resolution = 401;
  double x_stencil_radius = 1e-3;
  int x_stencil_count = 8;

  void validate(int y_dim) const;
  /// Spacing of the coarse grid along the widest axis.
  double step() const;
};

struct ValueSample {
  Vec x;
  double theta = 0.0;
  std::vector<Vec> argmins;
  /// Spacing of the finest zoom level.
  double final_step = 0.0;
  std::size_t evaluations = 0;
};

/// No grid point of F(x) was found.
class InfeasibleError : public InputError {
public:
  InfeasibleError(const std::string& message, bool certified, double margin)
      : InputError(message), certified_(certified), margin_(margin) {}
  /// True when the smallest constraint value exceeds what the grid spacing
  /// can hide, so F(x) misses the box.
  bool certified_empty() const { return certified_; }
  double margin() const { return margin_; }

private:
  bool certified_;
  double margin_;
};

inline constexpr int kZoomLevels = 5;
inline constexpr int kZoomCenters = 8;

ValueSample evaluate_value(const ParametricProblem& prob, const Vec& x, const GridSpec& grid);
/// Nullopt when the feasible set at x is certified empty on the box.
std::optional<ValueSample> sample_in_domain(const ParametricProblem& prob, const Vec& x, const GridSpec& grid);

struct IscProbe {
  bool passes = false;
  Vec worst_x;
  double worst_distance = 0.0;
  double threshold = 0.0;
  /// Largest distance per probe radius.
  std::vector<std::pair<double, double>> by_radius;
  /// Probe parameters where the feasible set is certified empty.
  int outside_domain = 0;
};

/// Throws InputError unless ybar is a grid argmin at xbar.
IscProbe inner_semicontinuity_probe(const ParametricProblem& prob, const Vec& xbar, const Vec& ybar,
                                    const GridSpec& grid, const SampleParams& params = {});

struct ValueEstimate {
  geom::PolyhedronUnion basic;
  geom::PolyhedronUnion singular;
  IscProbe isc;
  bool isc_overridden = false;
  normal::NormalConeResult graph_cone;
};

/// Throws RefusalError when the probe fails and no override is given.
ValueEstimate value_subdiff_estimate(const ParametricProblem& prob, const Vec& xbar, const Vec& ybar,
                                     const GridSpec& grid, const SampleParams& params = {},
                                     bool override_isc = false);

struct LipschitzVerdict {
  bool lipschitz = false;
  std::vector<geom::ConeSpec> at_zero;
  /// Largest sampled |theta(x) - theta(x')| / |x - x'| over the stencil.
  double modulus = 0.0;
  IscProbe isc;
  bool isc_overridden = false;
};

LipschitzVerdict lipschitz_verdict(const ParametricProblem& prob, const Vec& xbar, const Vec& ybar,
                                   const GridSpec& grid, const SampleParams& params = {},
                                   bool override_isc = false);

/// Stencil of parameters around xbar: xbar itself, then the given radius
/// and its halves along `count` directions.
std::vector<Vec> x_stencil(const Vec& xbar, double radius, int count, std::uint64_t seed);

}  // namespace varcalc::valuefn
