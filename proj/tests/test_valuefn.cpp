// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include "varcalc/valuefn.hpp"

#include <doctest.h>

#include <cmath>

using namespace varcalc;
using expr::parse_function;

namespace {

const expr::VarSpace XY({"x", "y"});

valuefn::ParametricProblem problem(const char* cost, std::initializer_list<const char*> constraints) {
  std::vector<expr::FunctionDef> cs;
  for (const char* c : constraints) cs.push_back(parse_function(c, XY));
  return {parse_function(cost, XY), cs, 1};
}

valuefn::GridSpec box(double lo, double hi) {
  valuefn::GridSpec g;
  g.y_box = {{lo, hi}};
  return g;
}

bool contains_value(const geom::PolyhedronUnion& u, double v) {
  for (const auto& p : u)
    if (geom::contains(p, make_vec({v}))) return true;
  return false;
}

}  // namespace

TEST_CASE("parabola: theta(x) = x^2 on [-1, 1]") {
  const auto p = problem("y", {"(- (* x x) y)"});
  const auto g = box(-2, 2);
  const oracles::Fn cost = [](const Vec& q) { return q[1]; };
  const oracles::Fn con = [](const Vec& q) { return q[0] * q[0] - q[1]; };
  for (int i = 0; i <= 20; ++i) {
    const double x = -1 + 0.1 * i;
    const auto s = valuefn::evaluate_value(p, make_vec({x}), g);
    CHECK(std::abs(s.theta - x * x) <= 1e-4);
    CHECK(std::abs(s.theta - oracles::grid_value(cost, {con}, x, -2, 2, 8000)) <= 1e-3);
    REQUIRE_FALSE(s.argmins.empty());
    CHECK(std::abs(s.argmins.front()[0] - x * x) <= 1e-4);
    CHECK(s.final_step < g.step());
  }
}

TEST_CASE("bilinear cost: theta(x) = -|x| and two argmins at zero") {
  const auto p = problem("(* x y)", {"(- (abs y) 1)"});
  const auto g = box(-2, 2);
  for (int i = 0; i <= 20; ++i) {
    const double x = -1 + 0.1 * i;
    CHECK(std::abs(valuefn::evaluate_value(p, make_vec({x}), g).theta + std::abs(x)) <= 1e-4);
  }
  const auto at0 = valuefn::evaluate_value(p, make_vec({0}), g);
  CHECK(at0.theta == doctest::Approx(0));
  bool has_top = false, has_bottom = false;
  for (const auto& y : at0.argmins) {
    has_top = has_top || std::abs(y[0] - 1) <= 1e-3;
    has_bottom = has_bottom || std::abs(y[0] + 1) <= 1e-3;
  }
  CHECK(has_top);
  CHECK(has_bottom);
}

TEST_CASE("empty feasible sets are certified") {
  const auto p = problem("y", {"(+ y 1)"});
  try {
    valuefn::evaluate_value(p, make_vec({0}), box(0, 2));
    FAIL("expected an infeasibility error");
  } catch (const valuefn::InfeasibleError& e) {
    CHECK(e.certified_empty());
    CHECK(e.margin() > 0);
  }
  CHECK_FALSE(valuefn::sample_in_domain(p, make_vec({0}), box(0, 2)));
  CHECK(valuefn::sample_in_domain(p, make_vec({0}), box(-2, 2)));

  // Just outside the domain of sqrt-like maps the emptiness is still certified.
  const auto q = problem("y", {"(- (* y y) x)"});
  CHECK_FALSE(valuefn::sample_in_domain(q, make_vec({-1e-4}), box(-2, 2)));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(problem("y", {"(- x y)"}).graph().dim() == 2 ? throw InputError("ok") : 0, InputError);
  valuefn::ParametricProblem bad{parse_function("y", XY), {}, 2};
  CHECK_THROWS_AS(bad.validate(), InputError);
  valuefn::GridSpec g;
  CHECK_THROWS_AS(g.validate(1), InputError);
  g.y_box = {{1, -1}};
  CHECK_THROWS_AS(g.validate(1), InputError);
  g.y_box = {{-1, 1}};
  g.resolution = 1;
  CHECK_THROWS_AS(g.validate(1), InputError);
}

TEST_CASE("inner semicontinuity probe") {
  const auto g = box(-2, 2);
  const auto smooth = valuefn::inner_semicontinuity_probe(problem("y", {"(- (* x x) y)"}), make_vec({0}),
                                                          make_vec({0}), g);
  CHECK(smooth.passes);
  CHECK(smooth.worst_distance < smooth.threshold);

  const auto jump = valuefn::inner_semicontinuity_probe(problem("(* x y)", {"(- (abs y) 1)"}), make_vec({0}),
                                                        make_vec({1}), g);
  CHECK_FALSE(jump.passes);
  CHECK(jump.worst_distance == doctest::Approx(2).epsilon(1e-3));
  CHECK(jump.worst_x[0] > 0);

  CHECK_THROWS_AS(valuefn::inner_semicontinuity_probe(problem("y", {"(- (* x x) y)"}), make_vec({0}),
                                                      make_vec({1}), g),
                  InputError);
}

TEST_CASE("subdifferential estimates") {
  const auto g = box(-2, 2);
  const auto para = problem("y", {"(- (* x x) y)"});
  const auto est = valuefn::value_subdiff_estimate(para, make_vec({0}), make_vec({0}), g);
  REQUIRE_FALSE(est.basic.empty());
  CHECK(contains_value(est.basic, 0));
  CHECK_FALSE(contains_value(est.basic, 0.1));
  // Difference quotients from an independent grid evaluation land in the estimate.
  const oracles::Fn cost = [](const Vec& q) { return q[1]; };
  const oracles::Fn con = [](const Vec& q) { return q[0] * q[0] - q[1]; };
  for (double h : {1e-2, 1e-3}) {
    const double slope =
        (oracles::grid_value(cost, {con}, h, -2, 2, 40000) - oracles::grid_value(cost, {con}, -h, -2, 2, 40000)) /
        (2 * h);
    CHECK(std::abs(slope) <= 1e-3);
  }
  for (const auto& piece : est.singular) CHECK(piece.points.vertices().front().norm() <= 1e-12);

  const auto bil = problem("(* x y)", {"(- (abs y) 1)"});
  CHECK_THROWS_AS(valuefn::value_subdiff_estimate(bil, make_vec({0}), make_vec({1}), g), RefusalError);
  const auto forced = valuefn::value_subdiff_estimate(bil, make_vec({0}), make_vec({1}), g, {}, true);
  CHECK(forced.isc_overridden);
  CHECK(contains_value(forced.basic, 1));

  // theta(x) = -x for the worked lower level, so the estimate is {-1}.
  const auto line = problem("y", {"(- (- x) y)"});
  const auto le = valuefn::value_subdiff_estimate(line, make_vec({0}), make_vec({0}), box(-3, 3));
  CHECK(contains_value(le.basic, -1));
  CHECK_FALSE(contains_value(le.basic, 0));
}

TEST_CASE("Lipschitz verdicts") {
  const auto g = box(-2, 2);
  const auto a = valuefn::lipschitz_verdict(problem("y", {"(- (* x x) y)"}), make_vec({0}), make_vec({0}), g);
  CHECK(a.lipschitz);
  CHECK(a.modulus < 0.01);

  const auto b = valuefn::lipschitz_verdict(problem("(* x y)", {"(- (abs y) 1)"}), make_vec({0}), make_vec({1}),
                                            g, {}, true);
  CHECK(b.lipschitz);
  CHECK(b.modulus == doctest::Approx(1).epsilon(1e-3));

  // theta(x) = -sqrt(x) on x >= 0: not Lipschitz at 0.
  const auto c = valuefn::lipschitz_verdict(problem("y", {"(- (* y y) x)"}), make_vec({0}), make_vec({0}), g, {},
                                            true);
  CHECK_FALSE(c.lipschitz);
  CHECK(c.modulus > 10);
}

TEST_CASE("parameter stencils") {
  const auto pts = valuefn::x_stencil(make_vec({1, 2}), 1e-3, 8, 3);
  REQUIRE(pts.size() > 8);
  CHECK(pts.front().isApprox(make_vec({1, 2})));
  for (const auto& p : pts) CHECK((p - make_vec({1, 2})).norm() <= 1e-3 + 1e-15);
  const auto again = valuefn::x_stencil(make_vec({1, 2}), 1e-3, 8, 3);
  CHECK(again.back().isApprox(pts.back()));
}
