// SPDX-License-Identifier: Apache-2.0
#include "varcalc/calculus.hpp"

#include "varcalc/normal_cone.hpp"
#include "varcalc/subdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace varcalc::calculus {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Calls `visit` with one index per list for every combination, in odometer
// order with the first list varying fastest.
template <class Visit>
std::size_t for_each_combination(const std::vector<std::size_t>& sizes, Visit visit) {
  std::size_t total = 1;
  for (auto s : sizes) {
    if (s == 0) return 0;
    total *= s;
    if (total > normal::kMaxBranchCombinations)
      throw std::length_error("rule check needs more than 4096 branch combinations");
  }
  std::vector<std::size_t> pick(sizes.size(), 0);
  for (;;) {
    visit(pick);
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == sizes[i]) pick[i++] = 0;
    if (i == pick.size()) break;
  }
  return total;
}

geom::Polyhedron zero_polyhedron(int dim, geom::ConeSpec cone) {
  return {geom::Polytope::point(Vec::Zero(dim)), std::move(cone)};
}

double membership_residual(const geom::Polyhedron& outer, const Vec& p) {
  const auto m = geom::minkowski_membership(p, outer.points, {}, {}, {outer.cone});
  return m.member ? m.residual : kInf;
}

}  // namespace

geom::PolyhedronUnion as_polyhedra(const geom::PolytopeUnion& u) {
  geom::PolyhedronUnion out;
  for (const auto& p : u.parts()) out.push_back({p, geom::ConeSpec::zero(u.dim())});
  return out;
}

Inclusion check_inclusion(const geom::PolyhedronUnion& inner, const geom::PolyhedronUnion& outer) {
  Inclusion inc;
  for (const auto& piece : inner) {
    if (outer.empty()) {
      inc.holds = false;
      inc.counterexample = piece.points.vertices().front();
      return inc;
    }
    if (!geom::contains(outer, piece)) {
      inc.holds = false;
      inc.counterexample = piece.points.vertices().front();
      for (const auto& v : piece.points.vertices()) {
        double best = kInf;
        for (const auto& o : outer) best = std::min(best, membership_residual(o, v));
        if (!std::isfinite(best)) {
          inc.counterexample = v;
          break;
        }
      }
      return inc;
    }
    for (const auto& v : piece.points.vertices()) {
      double best = kInf;
      for (const auto& o : outer) best = std::min(best, membership_residual(o, v));
      if (std::isfinite(best)) inc.residual = std::max(inc.residual, best);
    }
  }
  return inc;
}

namespace {

void finish_sum_report(SumRuleReport& r) {
  r.inclusion = check_inclusion(r.lhs, r.rhs);
  r.reverse = check_inclusion(r.rhs, r.lhs);
  r.singular_inclusion = check_inclusion(r.singular_lhs, r.singular_rhs);
  r.equality = r.inclusion.holds && r.reverse.holds;
  auto bounded = [](const geom::PolyhedronUnion& u) {
    return std::all_of(u.begin(), u.end(), [](const auto& p) { return p.bounded(); });
  };
  if (!r.lhs.empty() && !r.rhs.empty() && bounded(r.lhs) && bounded(r.rhs)) {
    std::vector<geom::Polytope> a, b;
    for (const auto& p : r.lhs) a.push_back(p.points);
    for (const auto& p : r.rhs) b.push_back(p.points);
    const int dim = r.lhs.front().dim();
    r.hausdorff = geom::hausdorff_distance(geom::PolytopeUnion(dim, a), geom::PolytopeUnion(dim, b));
  } else {
    r.hausdorff = r.equality ? 0.0 : kInf;
  }
}

}  // namespace

SumRuleReport verify_sum_rule(const std::vector<expr::FunctionDef>& terms, const Vec& x, const SampleParams& params) {
  if (terms.empty()) throw InputError("sum rule needs at least one term");
  const int dim = static_cast<int>(terms.front().dim());
  SumRuleReport r;
  r.lhs = as_polyhedra(subdiff::basic_subdifferential(expr::sum(terms), x, params));
  std::vector<geom::PolytopeUnion> parts;
  std::vector<std::size_t> sizes;
  for (const auto& t : terms) {
    parts.push_back(subdiff::basic_subdifferential(t, x, params));
    sizes.push_back(parts.back().parts().size());
  }
  r.combinations = for_each_combination(sizes, [&](const std::vector<std::size_t>& pick) {
    geom::Polytope acc = parts[0].parts()[pick[0]];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = geom::minkowski_sum(acc, parts[i].parts()[pick[i]]);
    r.rhs.push_back({acc, geom::ConeSpec::zero(dim)});
  });
  r.singular_lhs = {zero_polyhedron(dim, geom::ConeSpec::zero(dim))};
  r.singular_rhs = r.singular_lhs;
  finish_sum_report(r);
  return r;
}

SumRuleReport verify_sum_rule(const sets::SetSpec& set, const std::vector<expr::FunctionDef>& rest, const Vec& x,
                              const SampleParams& params) {
  if (rest.empty()) throw InputError("sum rule needs a finite term besides the indicator");
  const int dim = set.dim();
  for (const auto& f : rest)
    if (!(f.space() == set.space())) throw InputError("sum rule terms must use the set's variables");
  const auto smooth = expr::sum(rest);

  // Epigraph of indicator + sum, as a graph over the original variables.
  auto names = set.space().names();
  std::string t = "t";
  while (set.space().index_of(t) >= 0) t += "_";
  names.push_back(t);
  const expr::VarSpace big(names);
  std::vector<expr::FunctionDef> ineq, eq;
  for (const auto& c : set.constraints()) (c.equality ? eq : ineq).push_back(c.fn.embed(big, 0));
  ineq.push_back(expr::FunctionDef(big, expr::make(expr::Op::Sub, {smooth.embed(big, 0).root(), expr::variable(dim)})));
  const auto epi = sets::SetSpec::graph(dim, ineq, eq);
  Vec point(dim + 1);
  point << x, smooth(x);
  const auto nc = normal::normal_cone(epi, point, params);

  SumRuleReport r;
  r.lhs = normal::coderivative(epi, nc, make_vec({1.0}));
  r.singular_lhs = normal::coderivative(epi, nc, make_vec({0.0}));

  const auto cones = normal::normal_cone(set, x, params).require();
  std::vector<geom::PolytopeUnion> parts;
  std::vector<std::size_t> sizes{cones.size()};
  for (const auto& f : rest) {
    parts.push_back(subdiff::basic_subdifferential(f, x, params));
    sizes.push_back(parts.back().parts().size());
  }
  r.combinations = for_each_combination(sizes, [&](const std::vector<std::size_t>& pick) {
    geom::Polytope acc = parts[0].parts()[pick[1]];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = geom::minkowski_sum(acc, parts[i].parts()[pick[i + 1]]);
    r.rhs.push_back({acc, cones[pick[0]]});
  });
  for (const auto& k : cones) r.singular_rhs.push_back(zero_polyhedron(dim, k));
  finish_sum_report(r);
  return r;
}

IntersectionReport verify_intersection_rule(const std::vector<sets::SetSpec>& sets, const Vec& x,
                                            const SampleParams& params) {
  if (sets.empty()) throw InputError("intersection rule needs at least one set");
  const int dim = sets.front().dim();
  IntersectionReport r;
  for (const auto& s : sets) {
    if (!(s.space() == sets.front().space())) throw InputError("intersected sets must share one variable space");
    const auto nc = normal::normal_cone(s, x, params);
    if (!nc.qualified) {
      r.qualified = false;
      r.diagnostic = "normal cone of a constituent set unavailable: " + nc.diagnostic;
      return r;
    }
    r.terms.push_back(nc.cones);
  }

  std::vector<std::size_t> sizes;
  for (const auto& t : r.terms) sizes.push_back(t.size());
  std::vector<geom::Polyhedron> sums;
  r.combinations = for_each_combination(sizes, [&](const std::vector<std::size_t>& pick) {
    if (!r.qualified) return;
    std::vector<Vec> gens, lines;
    std::vector<std::size_t> owner;
    std::vector<Mat> bases;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const auto& k = r.terms[i][pick[i]];
      for (const auto& g : k.generators()) {
        gens.push_back(g.normalized());
        owner.push_back(i);
      }
      for (const auto& l : k.lineality()) lines.push_back(l);
      Mat B(dim, static_cast<Eigen::Index>(k.lineality().size()));
      for (std::size_t j = 0; j < k.lineality().size(); ++j) B.col(static_cast<Eigen::Index>(j)) = k.lineality()[j];
      if (B.cols() > 0) {
        Eigen::ColPivHouseholderQR<Mat> qr(B);
        qr.setThreshold(1e-10);
        B = Mat(qr.householderQ()).leftCols(qr.rank());
      }
      bases.push_back(B);
    }
    if (sets.size() > 1) {
      if (auto w = normal::zero_combination(gens, lines, dim)) {
        r.qualified = false;
        r.witness.assign(sets.size(), 0.0);
        for (std::size_t j = 0; j < owner.size(); ++j) r.witness[owner[j]] += (*w)[j];
      } else {
        Eigen::Index cols = 0;
        for (const auto& B : bases) cols += B.cols();
        if (cols > 0) {
          Mat L(dim, cols);
          Eigen::Index c = 0;
          for (const auto& B : bases) {
            if (B.cols() > 0) L.middleCols(c, B.cols()) = B;
            c += B.cols();
          }
          Eigen::FullPivLU<Mat> lu(L);
          lu.setThreshold(1e-10);
          if (lu.rank() < cols) {
            const Vec k = lu.kernel().col(0);
            r.qualified = false;
            r.witness.assign(sets.size(), 0.0);
            c = 0;
            for (std::size_t i = 0; i < bases.size(); ++i) {
              r.witness[i] = k.segment(c, bases[i].cols()).norm();
              c += bases[i].cols();
            }
          }
        }
      }
      if (!r.qualified) {
        const double top = *std::max_element(r.witness.begin(), r.witness.end());
        for (auto& v : r.witness) v /= top;
        r.diagnostic = "qualification violated: nonzero normals from the sets sum to zero";
        return;
      }
    }
    sums.push_back(zero_polyhedron(dim, geom::ConeSpec(dim, gens, lines).canonical()));
  });
  if (!r.qualified) return r;

  std::vector<expr::FunctionDef> ineq, eq;
  for (const auto& s : sets)
    for (const auto& c : s.constraints()) (c.equality ? eq : ineq).push_back(c.fn);
  const auto whole = sets::SetSpec::sublevel(ineq, eq);
  r.lhs = normal::normal_cone(whole, x, params).require();
  geom::PolyhedronUnion inner;
  for (const auto& k : r.lhs) inner.push_back(zero_polyhedron(dim, k));
  r.inclusion = check_inclusion(inner, sums);
  return r;
}

DifferenceReport verify_difference_rule(const expr::FunctionDef& f1, const expr::FunctionDef& f2, const Vec& x,
                                        bool local_minimizer) {
  DifferenceReport r;
  r.minimizer_flag = local_minimizer;
  r.lhs = subdiff::regular_subdifferential(expr::difference(f1, f2), x);
  r.first = subdiff::regular_subdifferential(f1, x);
  r.second = subdiff::regular_subdifferential(f2, x);
  r.vacuous = !r.second.has_value();
  if (r.vacuous) return r;

  auto in_first = [&](const Vec& p, double& residual) {
    if (!r.first) return false;
    const auto m = geom::minkowski_membership(p, *r.first, {}, {}, {});
    if (m.member) residual = std::max(residual, m.residual);
    return m.member;
  };
  if (r.lhs) {
    for (const auto& a : r.lhs->vertices())
      for (const auto& v : r.second->vertices())
        if (!in_first(a + v, r.inclusion.residual) && r.inclusion.holds) {
          r.inclusion.holds = false;
          r.inclusion.counterexample = a;
        }
  }
  double unused = 0.0;
  for (const auto& v : r.second->vertices())
    if (!in_first(v, unused)) r.minimizer_condition = false;
  return r;
}

EpigraphReport epigraph_consistency_check(const expr::FunctionDef& f, const Vec& x, const SampleParams& params) {
  EpigraphReport r;
  const int n = static_cast<int>(f.dim());
  r.direct = subdiff::basic_subdifferential(f, x, params);
  r.singular_direct = subdiff::singular_subdifferential(f, x);

  const auto epi = sets::SetSpec::epigraph(f);
  Vec point(n + 1);
  point << x, f(x);
  const auto nc = normal::normal_cone(epi, point, params);
  r.via_epigraph = normal::coderivative(epi, nc, make_vec({1.0}));
  r.singular_via_epigraph = normal::coderivative(epi, nc, make_vec({0.0}));

  std::vector<geom::Polytope> via;
  bool bounded = !r.via_epigraph.empty();
  for (const auto& p : r.via_epigraph) {
    bounded = bounded && p.bounded();
    via.push_back(p.points);
  }
  r.discrepancy = bounded ? geom::hausdorff_distance(r.direct, geom::PolytopeUnion(n, via)) : kInf;

  r.singular_discrepancy = r.singular_via_epigraph.empty() ? kInf : 0.0;
  for (const auto& p : r.singular_via_epigraph) {
    if (!p.bounded()) r.singular_discrepancy = kInf;
    for (const auto& v : p.points.vertices()) r.singular_discrepancy = std::max(r.singular_discrepancy, v.norm());
  }
  return r;
}

}  // namespace varcalc::calculus
