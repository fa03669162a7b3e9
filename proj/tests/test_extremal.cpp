// SPDX-License-Identifier: Apache-2.0
#include "varcalc/extremal.hpp"

#include <doctest.h>

#include <cmath>

using namespace varcalc;
using expr::parse_function;

namespace {

const expr::VarSpace X({"x"});
const expr::VarSpace XY({"x", "y"});

std::vector<sets::SetSpec> half_planes() {
  return {sets::SetSpec::sublevel({parse_function("y", XY)}), sets::SetSpec::sublevel({parse_function("(- y)", XY)})};
}

/// phi_k for the half-plane pair with shifts (0, 1/k) and 0, from the
/// closed-form distances to {y <= 0} and {y >= 0}.
double half_plane_objective(const Vec& x, int k) {
  const double d1 = std::max(x[1] + 1.0 / k, 0.0);
  const double d2 = std::max(-x[1], 0.0);
  return std::sqrt(d1 * d1 + d2 * d2) + x.squaredNorm();
}

}  // namespace

TEST_CASE("half-plane pair: normals, normalization and residuals") {
  const auto trace = extremal::extremal_principle_solve(
      half_planes(), make_vec({0, 0}), extremal::harmonic_shifts({make_vec({0, 1}), make_vec({0, 0})}));
  REQUIRE_FALSE(trace.gamma_zero);
  REQUIRE(trace.steps.size() == extremal::default_schedule().size());
  for (const auto& s : trace.steps) {
    CAPTURE(s.k);
    CHECK(std::abs(s.normalization - 1.0) <= 1e-9);
    CHECK(s.gamma > 0);
    REQUIRE(s.normals.size() == 2);
    // Closed form: the minimizer sits at (0, t) with t in [-1/k, 0].
    double lo = -1.0 / s.k, hi = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
      if (half_plane_objective(make_vec({0, a}), s.k) <= half_plane_objective(make_vec({0, b}), s.k)) hi = b;
      else lo = a;
    }
    const double t = (lo + hi) / 2, d1 = t + 1.0 / s.k, d2 = -t, g = std::hypot(d1, d2);
    CHECK(s.x[1] == doctest::Approx(t).epsilon(1e-6));
    CHECK(s.normals[0][1] == doctest::Approx(d1 / g).epsilon(1e-6));
    CHECK(s.normals[1][1] == doctest::Approx(-d2 / g).epsilon(1e-6));
    CHECK(std::abs(s.normals[0][0]) <= 1e-9);
    CHECK(s.fermat_residual <= 1e-6);
  }
  const auto& last = trace.steps.back();
  CHECK(last.k == 1000);
  CHECK(last.euler_residual <= 1e-3);
  for (std::size_t i = 1; i < trace.steps.size(); ++i)
    CHECK(trace.steps[i].euler_residual <= trace.steps[i - 1].euler_residual + 1e-12);
}

TEST_CASE("iterates minimize the penalized distance function") {
  const auto trace = extremal::extremal_principle_solve(
      half_planes(), make_vec({0, 0}), extremal::harmonic_shifts({make_vec({0, 1}), make_vec({0, 0})}), {1, 4, 16});
  for (const auto& s : trace.steps) {
    CAPTURE(s.k);
    CHECK(s.objective == doctest::Approx(half_plane_objective(s.x, s.k)).epsilon(1e-9));
    double brute = 1e300;
    for (int i = -200; i <= 200; ++i)
      for (int j = -200; j <= 200; ++j)
        brute = std::min(brute, half_plane_objective(make_vec({i * 2.5e-3, j * 2.5e-3}), s.k));
    CHECK(s.objective <= brute + 1e-9);
    CHECK(s.objective >= brute - 1e-4);
  }
}

TEST_CASE("sets that keep meeting give the vanishing-gamma diagnostic") {
  const auto whole = sets::SetSpec::sublevel({expr::FunctionDef(XY, expr::constant(-1))});
  const auto trace = extremal::extremal_principle_solve(
      {whole, whole}, make_vec({0, 0}), extremal::harmonic_shifts({make_vec({1, 0}), make_vec({0, 1})}));
  CHECK(trace.gamma_zero);
  CHECK(trace.gamma_zero_at == 1);
  CHECK_FALSE(trace.diagnostic.empty());
}

TEST_CASE("half-line against a point") {
  const auto trace = extremal::extremal_principle_solve(
      {sets::SetSpec::sublevel({parse_function("x", X)}), sets::SetSpec::singleton(make_vec({0}))}, make_vec({0}),
      extremal::harmonic_shifts({make_vec({1}), make_vec({0})}), {10, 100});
  REQUIRE_FALSE(trace.gamma_zero);
  const auto& s = trace.steps.back();
  CHECK(s.normals[0][0] > 0);
  CHECK(s.normals[1][0] < 0);
  CHECK(std::abs(s.normals[0][0] - M_SQRT1_2) <= 0.01);
  CHECK(std::abs(s.normalization - 1.0) <= 1e-9);
}

TEST_CASE("harmonic shifts and the default schedule") {
  const auto shifts = extremal::harmonic_shifts({make_vec({2, 0}), make_vec({0, -4})});
  const auto at4 = shifts(4);
  CHECK(at4[0].isApprox(make_vec({0.5, 0})));
  CHECK(at4[1].isApprox(make_vec({0, -1})));
  const auto ks = extremal::default_schedule();
  CHECK(ks.front() == 1);
  CHECK(ks.back() == 1000);
  CHECK(std::is_sorted(ks.begin(), ks.end()));
}
