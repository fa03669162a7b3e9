// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include "varcalc/corpus.hpp"
#include "varcalc/oracle.hpp"
#include "varcalc/subdiff.hpp"

#include <doctest.h>

#include <random>

using namespace varcalc;
using expr::parse_function;

namespace {

const expr::VarSpace X({"x"});
const expr::VarSpace XY({"x", "y"});

geom::PolytopeUnion points_union(int dim, std::initializer_list<std::initializer_list<double>> pts) {
  std::vector<geom::Polytope> parts;
  for (const auto& p : pts) parts.push_back(geom::Polytope::point(make_vec(p)));
  return geom::PolytopeUnion(dim, parts).canonical();
}

geom::Polytope segment(std::initializer_list<double> a, std::initializer_list<double> b) {
  return geom::convex_hull({make_vec(a), make_vec(b)});
}

bool same_union(const geom::PolytopeUnion& a, const geom::PolytopeUnion& b) {
  const auto ca = a.canonical(), cb = b.canonical();
  if (ca.parts().size() != cb.parts().size()) return false;
  for (std::size_t i = 0; i < ca.parts().size(); ++i)
    if (!ca.parts()[i].approx_equal(cb.parts()[i])) return false;
  return true;
}

oracles::Fn as_fn(const expr::FunctionDef& f) {
  return [f](const Vec& p) { return f(p); };
}

}  // namespace

TEST_CASE("absolute value at the kink") {
  const auto r = subdiff::compute(parse_function("(abs x)", X), make_vec({0}), {});
  REQUIRE(r.regular);
  CHECK(r.regular->approx_equal(segment({-1}, {1})));
  REQUIRE(r.basic.parts().size() == 1);
  CHECK(r.basic.parts()[0].approx_equal(segment({-1}, {1})));
  CHECK(r.singular.is_zero());
  CHECK(r.method == "symbolic");
}

TEST_CASE("negated absolute value has an empty regular subdifferential") {
  const auto r = subdiff::compute(parse_function("(- (abs x))", X), make_vec({0}), {});
  CHECK_FALSE(r.regular);
  CHECK(same_union(r.basic, points_union(1, {{-1}, {1}})));
}

TEST_CASE("min(0, x) and max(x, 2x)") {
  const auto m = subdiff::compute(parse_function("(min 0 x)", X), make_vec({0}), {});
  CHECK_FALSE(m.regular);
  CHECK(same_union(m.basic, points_union(1, {{0}, {1}})));

  const auto s = subdiff::compute(parse_function("(max x (* 2 x))", X), make_vec({0}), {});
  REQUIRE(s.regular);
  CHECK(s.regular->approx_equal(segment({1}, {2})));
  CHECK(same_union(s.basic, geom::PolytopeUnion(1, {segment({1}, {2})})));
}

TEST_CASE("two-variable kinks") {
  const auto mx = subdiff::compute(parse_function("(max x y)", XY), make_vec({0, 0}), {});
  REQUIRE(mx.regular);
  CHECK(mx.regular->approx_equal(segment({1, 0}, {0, 1})));

  const auto mn = subdiff::compute(parse_function("(min x y)", XY), make_vec({0, 0}), {});
  CHECK_FALSE(mn.regular);
  CHECK(same_union(mn.basic, points_union(2, {{1, 0}, {0, 1}})));

  const auto saddle = subdiff::compute(parse_function("(- (abs x) (abs y))", XY), make_vec({0, 0}), {});
  CHECK_FALSE(saddle.regular);
  CHECK(same_union(saddle.basic, geom::PolytopeUnion(2, {segment({-1, 1}, {1, 1}), segment({-1, -1}, {1, -1})})));
}

TEST_CASE("smooth points give the gradient") {
  const auto f = parse_function("(+ (* x y) (pow x 3))", XY);
  const auto r = subdiff::compute(f, make_vec({1, 2}), {});
  REQUIRE(r.regular);
  CHECK(r.regular->is_point());
  CHECK(r.regular->vertices()[0].isApprox(make_vec({2 + 3, 1})));
  CHECK(same_union(r.basic, points_union(2, {{5, 1}})));
}

TEST_CASE("dimension mismatch is an input error") {
  CHECK_THROWS_AS(subdiff::compute(parse_function("(abs x)", X), make_vec({0, 0}), {}), InputError);
}

TEST_CASE("pattern census records what the probes met") {
  const auto r = subdiff::compute(parse_function("(abs x)", X), make_vec({0}), {});
  REQUIRE(r.census.size() >= 3);
  int fresh_branches = 0;
  for (const auto& rec : r.census) {
    CHECK(rec.hits > 0);
    if (rec.smallest_radius > 0) ++fresh_branches;
  }
  CHECK(fresh_branches == 2);
}

TEST_CASE("property: regular subgradients pass the difference-quotient test") {
  std::mt19937_64 rng(17);
  int tested = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const auto f = parse_function(oracles::random_sexpr(rng, {"x", "y"}, 3), XY);
    const Vec x = Vec::Zero(2);
    std::optional<geom::Polytope> reg;
    try {
      reg = subdiff::regular_subdifferential(f, x);
    } catch (const std::length_error&) {
      continue;
    }
    if (!reg) continue;
    ++tested;
    for (const auto& v : reg->vertices()) REQUIRE(oracles::regular_defect(as_fn(f), x, v, 1e-7, 360) >= -1e-5);
  }
  CHECK(tested > 50);
}

TEST_CASE("property: regular lies in the hull of basic, and basic matches nearby gradients") {
  std::mt19937_64 rng(23);
  int tested = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto f = parse_function(oracles::random_sexpr(rng, {"x", "y"}, 2), XY);
    const Vec x = Vec::Zero(2);
    subdiff::SubdiffResult r;
    try {
      r = subdiff::compute(f, x, {});
    } catch (const std::length_error&) {
      continue;
    }
    ++tested;
    const auto hull = geom::convex_hull(r.basic.all_vertices());
    if (r.regular)
      for (const auto& v : r.regular->vertices()) REQUIRE(geom::distance(v, hull) <= 1e-9);
    // Piecewise-linear pieces keep their gradients constant on cones, so
    // nearby gradients are limiting subgradients.
    for (const auto& g : oracles::nearby_gradients(as_fn(f), x, 1e-3, 40, 1 + trial))
      REQUIRE(geom::distance(g, r.basic) <= 1e-2);
  }
  CHECK(tested > 80);
}

TEST_CASE("property: convex corpus entries have equal regular and basic sets") {
  for (const auto& e : corpus::builtin()) {
    if (!e.convex) continue;
    CAPTURE(e.name);
    const auto r = subdiff::compute(e.fn, e.point, {});
    REQUIRE(r.regular);
    REQUIRE(r.basic.parts().size() == 1);
    CHECK(r.regular->approx_equal(r.basic.parts()[0]));
  }
}

TEST_CASE("sampled oracle agrees with the symbolic engine on the corpus") {
  const auto entries = corpus::builtin();
  CHECK(entries.size() == 20);
  for (const auto& e : entries) {
    CAPTURE(e.name);
    const auto r = subdiff::compute(e.fn, e.point, {});
    const auto o = oracle::sampled_subdiff(e.fn, e.point, {});
    CHECK(geom::hausdorff_distance(r.basic, o.hull) <= 0.05);
    CHECK(o.accepted > 0);
  }
}

TEST_CASE("oracle output is reproducible for a fixed seed") {
  SampleParams p;
  p.seed = 7;
  const auto f = parse_function("(min (abs x) (abs y))", XY);
  const auto a = oracle::sampled_subdiff(f, make_vec({0, 0}), p);
  const auto b = oracle::sampled_subdiff(f, make_vec({0, 0}), p);
  REQUIRE(a.hull.parts().size() == b.hull.parts().size());
  for (std::size_t i = 0; i < a.hull.parts().size(); ++i) {
    const auto& va = a.hull.parts()[i].vertices();
    const auto& vb = b.hull.parts()[i].vertices();
    REQUIRE(va.size() == vb.size());
    for (std::size_t k = 0; k < va.size(); ++k) CHECK((va[k] - vb[k]).norm() == 0.0);
  }
  CHECK(a.candidates == b.candidates);
}

TEST_CASE("quotient polytope of |x|") {
  const auto f = parse_function("(abs x)", X);
  const auto q = oracle::quotient_polytope([&](const Vec& p) { return f(p); }, make_vec({0}), {1e-3}, 0.0,
                                           sampling::directions(1, 2, 0));
  REQUIRE(q);
  CHECK(q->approx_equal(segment({-1}, {1}), 1e-9));
  const auto g = parse_function("(- (abs x))", X);
  CHECK_FALSE(oracle::quotient_polytope([&](const Vec& p) { return g(p); }, make_vec({0}), {1e-3}, 0.0,
                                        sampling::directions(1, 2, 0)));
}
