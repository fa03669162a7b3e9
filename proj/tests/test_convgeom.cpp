// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include "varcalc/geometry.hpp"
#include "varcalc/lp.hpp"
#include "varcalc/sampling.hpp"

#include <doctest.h>

#include <random>

using namespace varcalc;
using geom::Polytope;

namespace {

std::vector<Vec> random_points(std::mt19937_64& rng, int n, int dim, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) {
    Vec v(dim);
    for (int k = 0; k < dim; ++k) v[k] = u(rng);
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("lp: feasibility, infeasibility and objectives") {
  lp::LPProblem p;
  const int a = p.add_variable(), b = p.add_variable();
  p.add_row({{a, 1}, {b, 1}}, lp::Sense::Equal, 1);
  p.add_row({{a, 1}, {b, -1}}, lp::Sense::GreaterEq, 0.5);
  p.set_objective({{a, 1}});
  const auto r = lp::solve(p);
  REQUIRE(r.feasible());
  CHECK(r.x[0] == doctest::Approx(0.75));
  CHECK(r.x[1] == doctest::Approx(0.25));
  CHECK(lp::max_violation(p, r.x) <= 1e-12);

  lp::LPProblem q;
  const int c = q.add_variable(0, 1);
  q.add_row({{c, 1}}, lp::Sense::GreaterEq, 2);
  const auto s = lp::solve(q);
  CHECK(s.status == lp::Status::Infeasible);
  CHECK(s.infeasibility == doctest::Approx(1));

  lp::LPProblem u;
  const int d = u.add_variable(-lp::kInf, lp::kInf);
  u.add_row({{d, 1}}, lp::Sense::LessEq, 3);
  u.set_objective({{d, 1}});
  CHECK(lp::solve(u).status == lp::Status::Unbounded);
}

TEST_CASE("property: lp solutions of random feasible systems") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 5, m = 1 + trial % 4;
    std::vector<double> x0;
    lp::LPProblem p;
    for (int j = 0; j < n; ++j) {
      p.add_variable(0, 5);
      x0.push_back(2.5 + 2 * u(rng));
    }
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> terms;
      double lhs = 0;
      for (int j = 0; j < n; ++j) {
        const double c = u(rng);
        terms.emplace_back(j, c);
        lhs += c * x0[static_cast<std::size_t>(j)];
      }
      const auto sense = static_cast<lp::Sense>(i % 3);
      p.add_row(terms, sense, sense == lp::Sense::Equal ? lhs : lhs + (sense == lp::Sense::LessEq ? 0.1 : -0.1));
    }
    std::vector<std::pair<int, double>> obj;
    double obj0 = 0;
    for (int j = 0; j < n; ++j) {
      const double c = u(rng);
      obj.emplace_back(j, c);
      obj0 += c * x0[static_cast<std::size_t>(j)];
    }
    p.set_objective(obj);
    const auto r = lp::solve(p);
    REQUIRE(r.feasible());
    CHECK(lp::max_violation(p, r.x) <= 1e-9);
    CHECK(r.objective <= obj0 + 1e-9);
  }
}

TEST_CASE("convex hulls") {
  const auto h = geom::convex_hull({make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1}), make_vec({0.2, 0.2}),
                                    make_vec({1, 0})});
  CHECK(h.vertices().size() == 3);
  CHECK(geom::contains(h, make_vec({0.3, 0.3})));
  CHECK_FALSE(geom::contains(h, make_vec({0.6, 0.6})));
  CHECK(geom::convex_hull({make_vec({2}), make_vec({-1}), make_vec({0.5})}).vertices().size() == 2);
  CHECK_THROWS_AS(geom::convex_hull({}), std::exception);
  CHECK_THROWS_AS(geom::convex_hull({Vec::Zero(5)}), InputError);
}

TEST_CASE("property: hull vertices are input points and the hull covers the input") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const int dim = 1 + trial % 3;
    const auto pts = random_points(rng, 4 + trial % 9, dim);
    const auto h = geom::convex_hull(pts);
    for (const auto& v : h.vertices()) {
      bool found = false;
      for (const auto& p : pts) found = found || (p - v).norm() <= 1e-12;
      REQUIRE(found);
    }
    for (const auto& p : pts) REQUIRE(geom::contains(h, p));
    if (dim == 2) {
      const Vec t = random_points(rng, 1, 2, 1.3).front();
      const bool inside = geom::contains(h, t);
      // Every planar hull point lies in some vertex triangle.
      const auto& vs = h.vertices();
      double d = 1e300;
      for (std::size_t a = 0; a < vs.size(); ++a)
        for (std::size_t b = a + 1; b < vs.size(); ++b)
          for (std::size_t c = b + 1; c < vs.size(); ++c)
            d = std::min(d, oracles::lattice_distance(t, {vs[a], vs[b], vs[c]}, 60));
      if (vs.size() < 3) d = oracles::lattice_distance(t, vs, 60);
      if (inside) CHECK(d <= 0.1);
      if (!inside) CHECK(oracles::separation_margin({h.vertices(), {}, {}, {}}, t) > -1e-9);
    }
  }
}

TEST_CASE("minkowski membership") {
  const auto square = geom::convex_hull({make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1}), make_vec({1, 1})});
  const auto seg = geom::convex_hull({make_vec({0, 0}), make_vec({1, 0})});
  auto m = geom::minkowski_membership(make_vec({3, 0.5}), square, {seg}, {}, {});
  CHECK(m.member);
  REQUIRE(m.scales.size() == 1);
  CHECK(m.scales[0] >= 2 - 1e-9);
  CHECK(m.residual <= 1e-9);
  CHECK_FALSE(geom::minkowski_membership(make_vec({3, 1.5}), square, {seg}, {}, {}).member);
  CHECK(geom::minkowski_membership(make_vec({2, 0}), square, {}, {{1.0, seg}}, {}).member);
  CHECK_FALSE(geom::minkowski_membership(make_vec({2.1, 0}), square, {}, {{1.0, seg}}, {}).member);
  const geom::ConeSpec up(2, {make_vec({0, 1})});
  CHECK(geom::minkowski_membership(make_vec({0.5, 40}), square, {}, {}, {up}).member);
  CHECK_FALSE(geom::minkowski_membership(make_vec({0.5, -1}), square, {}, {}, {up}).member);
}

TEST_CASE("property: minkowski membership agrees with brute force") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  int agreed = 0, members = 0, decided = 0;
  while (decided < 120) {
    const int dim = 1 + static_cast<int>(rng() % 2);
    oracles::MinkowskiInstance in;
    in.base = random_points(rng, 2 + static_cast<int>(rng() % 2), dim);
    if (rng() % 2) in.fixed.push_back({0.5 + u(rng), random_points(rng, 2, dim)});
    if (rng() % 3 == 0) in.scaled.push_back(random_points(rng, 2, dim));
    if (rng() % 3 == 0) in.cone.push_back(random_points(rng, 1, dim).front());

    Vec t;
    if (rng() % 2) {
      const int n = 10;
      std::vector<double> w;
      oracles::for_each_weight(static_cast<int>(in.base.size()), n, [&](const std::vector<double>& ww) {
        if (w.empty() || rng() % 7 == 0) w = ww;
      });
      t = oracles::combine(in.base, w);
      for (const auto& [c, q] : in.fixed) t += c * q[0];
      for (const auto& p : in.scaled) t += 0.7 * p[1];
      for (const auto& g : in.cone) t += 1.3 * g;
    } else {
      t = random_points(rng, 1, dim, 2.5).front();
    }
    const double margin = oracles::separation_margin(in, t);
    const bool brute_member = margin <= 1e-9;
    if (!brute_member && margin < 1e-3) continue;

    std::vector<Polytope> scaled;
    for (const auto& p : in.scaled) scaled.push_back(geom::convex_hull(p));
    std::vector<geom::FixedTerm> fixed;
    for (const auto& [c, q] : in.fixed) fixed.push_back({c, geom::convex_hull(q)});
    std::vector<geom::ConeSpec> cones;
    if (!in.cone.empty()) cones.emplace_back(dim, in.cone);
    const auto m = geom::minkowski_membership(t, geom::convex_hull(in.base), scaled, fixed, cones);
    ++decided;
    members += brute_member;
    agreed += m.member == brute_member;
    if (m.member) CHECK(m.residual <= 1e-6);
  }
  CHECK(agreed == decided);
  CHECK(members > 20);
}

TEST_CASE("h-representation and intersections") {
  const auto tri = geom::convex_hull({make_vec({0, 0}), make_vec({2, 0}), make_vec({0, 2})});
  const auto h = geom::to_hrep(tri);
  CHECK(h.A.rows() == 3);
  CHECK(h.E.rows() == 0);
  const auto verts = geom::enumerate_vertices(h);
  CHECK(verts.size() == 3);

  const auto box = geom::convex_hull({make_vec({1, 1}), make_vec({3, 1}), make_vec({1, 3}), make_vec({3, 3})});
  const auto cut = geom::intersect({tri, box});
  REQUIRE(cut);
  CHECK(cut->vertices().size() == 1);
  CHECK(cut->vertices()[0].isApprox(make_vec({1, 1})));

  const auto a = geom::convex_hull({make_vec({-1, 1}), make_vec({1, -1})});
  const auto b = geom::convex_hull({make_vec({-1, -1}), make_vec({1, 1})});
  const auto cross = geom::intersect({a, b});
  REQUIRE(cross);
  CHECK(cross->vertices()[0].norm() <= 1e-12);
  CHECK_FALSE(geom::intersect({a, geom::Polytope::point(make_vec({5, 5}))}));
}

TEST_CASE("minkowski sums, scaling and translation") {
  const auto seg = geom::convex_hull({make_vec({0, 0}), make_vec({1, 0})});
  const auto up = geom::convex_hull({make_vec({0, 0}), make_vec({0, 1})});
  CHECK(geom::minkowski_sum(seg, up).vertices().size() == 4);
  CHECK(geom::scaled(2, seg).vertices().back().isApprox(make_vec({2, 0})));
  CHECK(geom::translated(seg, make_vec({0, 1})).vertices().front().isApprox(make_vec({0, 1})));
}

TEST_CASE("distances") {
  const auto seg = geom::convex_hull({make_vec({-1, 0}), make_vec({1, 0})});
  CHECK(geom::distance(make_vec({0, 2}), seg) == doctest::Approx(2));
  CHECK(geom::distance(make_vec({3, 0}), seg) == doctest::Approx(2));
  CHECK(geom::project(make_vec({0.5, -4}), seg).isApprox(make_vec({0.5, 0})));
  const geom::PolytopeUnion a(2, {seg});
  const geom::PolytopeUnion b(2, {geom::translated(seg, make_vec({0, 0.25}))});
  CHECK(geom::hausdorff_distance(a, a) <= 1e-12);
  CHECK(geom::hausdorff_distance(a, b) == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(geom::hausdorff_distance(b, a) == doctest::Approx(0.25).epsilon(1e-6));
  const geom::PolytopeUnion two(2, {geom::Polytope::point(make_vec({-1, 0})), geom::Polytope::point(make_vec({1, 0}))});
  CHECK(geom::hausdorff_distance(two, a) == doctest::Approx(1).epsilon(1e-3));
}

TEST_CASE("canonical unions and cones") {
  const auto big = geom::convex_hull({make_vec({-1}), make_vec({1})});
  const geom::PolytopeUnion u(1, {geom::Polytope::point(make_vec({0.5})), big});
  CHECK(u.canonical().parts().size() == 1);
  const geom::ConeSpec c(2, {make_vec({2, 0}), make_vec({1, 0}), Vec::Zero(2)});
  const auto cc = c.canonical();
  CHECK(cc.generators().size() == 1);
  CHECK(cc.generators()[0].isApprox(make_vec({1, 0})));
  CHECK(geom::ConeSpec::zero(2).is_zero());
  CHECK_FALSE(geom::ConeSpec::full(2).is_zero());
  CHECK(geom::cone_contains(geom::ConeSpec::full(2), make_vec({-3, 7})));
}

TEST_CASE("sampling directions") {
  const auto d1 = sampling::directions(1, 256, 0);
  CHECK(d1.size() == 2);
  const auto d2 = sampling::directions(2, 64, 0);
  CHECK(d2.size() == 64);
  CHECK(d2[0].isApprox(make_vec({1, 0})));
  const auto d3 = sampling::directions(3, 40, 7);
  CHECK(d3.size() == 40);
  for (const auto& d : d3) CHECK(d.norm() == doctest::Approx(1));
  CHECK(sampling::directions(3, 40, 7).back().isApprox(d3.back()));
  SampleParams bad;
  bad.radii = {1e-3, 1e-2};
  CHECK_THROWS_AS(bad.validate(), InputError);
}
