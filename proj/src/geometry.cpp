// SPDX-License-Identifier: Apache-2.0
#include "varcalc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace varcalc::geom {

namespace {

bool same_points(const std::vector<Vec>& a, const std::vector<Vec>& b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& p : a) {
    bool hit = false;
    for (std::size_t j = 0; j < b.size(); ++j)
      if (!used[j] && (p - b[j]).cwiseAbs().maxCoeff() <= tol) {
        used[j] = hit = true;
        break;
      }
    if (!hit) return false;
  }
  return true;
}

bool vertex_list_less(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (lex_less(a[i], b[i])) return true;
    if (lex_less(b[i], a[i])) return false;
  }
  return a.size() < b.size();
}

void check_dim(int a, int b) {
  if (a != b) throw InputError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

// Orthonormal basis of span(vs).
std::vector<Vec> span_basis(const std::vector<Vec>& vs, int dim) {
  if (vs.empty()) return {};
  Mat M(dim, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = vs[i];
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU);
  std::vector<Vec> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-9) out.push_back(svd.matrixU().col(i));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Polytope::Polytope(int dim, std::vector<Vec> vertices) : dim_(dim), vertices_(std::move(vertices)) {
  for (const auto& v : vertices_) {
    if (v.size() != dim_) throw InputError("polytope vertex has wrong dimension");
    if (!v.allFinite()) throw InputError("polytope vertex is not finite");
  }
}

bool Polytope::approx_equal(const Polytope& other, double tol) const {
  return dim_ == other.dim_ && same_points(vertices_, other.vertices_, tol);
}

PolytopeUnion::PolytopeUnion(int dim, std::vector<Polytope> parts) : dim_(dim), parts_(std::move(parts)) {
  for (const auto& p : parts_) check_dim(p.dim(), dim_);
}

std::vector<Vec> PolytopeUnion::all_vertices() const {
  std::vector<Vec> out;
  for (const auto& p : parts_)
    for (const auto& v : p.vertices()) out.push_back(v);
  return out;
}

PolytopeUnion PolytopeUnion::canonical() const {
  std::vector<Polytope> hulls;
  for (const auto& p : parts_) {
    if (p.vertices().empty()) continue;
    hulls.emplace_back(dim_, dim_ <= kMaxHullDim ? convex_hull(p.vertices()).vertices() : extreme_points(p.vertices()));
  }
  std::sort(hulls.begin(), hulls.end(),
            [](const Polytope& a, const Polytope& b) { return vertex_list_less(a.vertices(), b.vertices()); });
  std::vector<bool> drop(hulls.size(), false);
  for (std::size_t i = 0; i < hulls.size(); ++i)
    for (std::size_t j = 0; j < hulls.size() && !drop[i]; ++j) {
      if (i == j || drop[j]) continue;
      if (!contains(hulls[j], hulls[i])) continue;
      // Mutual containment keeps the earlier part.
      if (contains(hulls[i], hulls[j]) && i < j) continue;
      drop[i] = true;
    }
  std::vector<Polytope> kept;
  for (std::size_t i = 0; i < hulls.size(); ++i)
    if (!drop[i]) kept.push_back(hulls[i]);
  return PolytopeUnion(dim_, std::move(kept));
}

ConeSpec::ConeSpec(int dim, std::vector<Vec> generators, std::vector<Vec> lineality)
    : dim_(dim), generators_(std::move(generators)), lineality_(std::move(lineality)) {
  for (const auto& g : generators_)
    if (g.size() != dim_ || !g.allFinite()) throw InputError("bad cone generator");
  for (const auto& g : lineality_)
    if (g.size() != dim_ || !g.allFinite()) throw InputError("bad cone lineality vector");
}

ConeSpec ConeSpec::full(int dim) {
  std::vector<Vec> basis;
  for (int i = 0; i < dim; ++i) basis.push_back(Vec::Unit(dim, i));
  return ConeSpec(dim, {}, std::move(basis));
}

bool ConeSpec::is_zero() const {
  for (const auto& g : generators_)
    if (g.norm() > tol::geom) return false;
  for (const auto& g : lineality_)
    if (g.norm() > tol::geom) return false;
  return true;
}

ConeSpec ConeSpec::canonical() const {
  auto lin = span_basis(lineality_, dim_);
  std::vector<Vec> gens;
  for (Vec g : generators_) {
    for (const auto& l : lin) g -= g.dot(l) * l;
    if (g.norm() <= tol::geom) continue;
    gens.push_back(g.normalized());
  }
  // A generator whose negation is also generated spans a line.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < gens.size() && !changed; ++i) {
      ConeSpec rest(dim_, gens, lin);
      if (cone_contains(rest, -gens[i])) {
        lin.push_back(gens[i]);
        lin = span_basis(lin, dim_);
        std::vector<Vec> next;
        for (Vec g : gens) {
          for (const auto& l : lin) g -= g.dot(l) * l;
          if (g.norm() > tol::geom) next.push_back(g.normalized());
        }
        gens = std::move(next);
        changed = true;
      }
    }
  }
  if (static_cast<int>(lin.size()) == dim_) return full(dim_);
  std::sort(gens.begin(), gens.end(), lex_less);
  std::vector<Vec> uniq;
  for (auto& g : gens)
    if (uniq.empty() || (g - uniq.back()).norm() > tol::geom) uniq.push_back(g);
  std::vector<bool> drop(uniq.size(), false);
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    std::vector<Vec> others;
    for (std::size_t j = 0; j < uniq.size(); ++j)
      if (j != i && !drop[j]) others.push_back(uniq[j]);
    if (cone_contains(ConeSpec(dim_, others, lin), uniq[i])) drop[i] = true;
  }
  std::vector<Vec> kept;
  for (std::size_t i = 0; i < uniq.size(); ++i)
    if (!drop[i]) kept.push_back(uniq[i]);
  if (static_cast<int>(lin.size()) == dim_) {
    lin.clear();
    for (int i = 0; i < dim_; ++i) lin.push_back(Vec::Unit(dim_, i));
  }
  return ConeSpec(dim_, std::move(kept), std::move(lin));
}

// ---------------------------------------------------------------------------

Feasibility lp_feasible(const lp::LPProblem& problem) {
  const auto r = lp::solve(problem);
  Feasibility f;
  f.status = r.status;
  f.infeasibility = r.infeasibility;
  if (r.feasible()) f.assignment = r.x;
  return f;
}

std::optional<std::vector<double>> convex_weights(const Vec& target, const std::vector<Vec>& points, double tol) {
  if (points.empty()) return std::nullopt;
  lp::LPProblem prob;
  std::vector<int> w;
  for (std::size_t i = 0; i < points.size(); ++i) w.push_back(prob.add_variable());
  std::vector<std::pair<int, double>> sum;
  for (int j : w) sum.emplace_back(j, 1.0);
  prob.add_row(sum, lp::Sense::Equal, 1.0);
  for (Eigen::Index c = 0; c < target.size(); ++c) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (points[i][c] != 0.0) row.emplace_back(w[i], points[i][c]);
    // Two-sided slack of `tol` so that points on a face within rounding count.
    prob.add_row(row, lp::Sense::LessEq, target[c] + tol);
    prob.add_row(std::move(row), lp::Sense::GreaterEq, target[c] - tol);
  }
  const auto r = lp::solve(prob);
  if (!r.feasible()) return std::nullopt;
  return r.x;
}

bool contains(const Polytope& outer, const Vec& p, double tol) {
  check_dim(outer.dim(), static_cast<int>(p.size()));
  return convex_weights(p, outer.vertices(), tol).has_value();
}

bool contains(const Polytope& outer, const Polytope& inner, double tol) {
  check_dim(outer.dim(), inner.dim());
  for (const auto& v : inner.vertices())
    if (!contains(outer, v, tol)) return false;
  return true;
}

Membership minkowski_membership(const Vec& target, const Polytope& base, const std::vector<Polytope>& scaled_terms,
                                const std::vector<FixedTerm>& fixed_terms, const std::vector<ConeSpec>& cones) {
  const int n = static_cast<int>(target.size());
  check_dim(base.dim(), n);
  for (const auto& s : scaled_terms) check_dim(s.dim(), n);
  for (const auto& f : fixed_terms) check_dim(f.set.dim(), n);
  for (const auto& c : cones) check_dim(c.dim(), n);
  if (base.vertices().empty()) throw InputError("membership base polytope has no vertices");

  lp::LPProblem prob;
  std::vector<std::vector<std::pair<int, double>>> coord(static_cast<std::size_t>(n));
  auto add_block = [&](const std::vector<Vec>& vs, double factor, bool convex) {
    std::vector<int> ids;
    std::vector<std::pair<int, double>> sum;
    for (const auto& v : vs) {
      const int j = prob.add_variable();
      ids.push_back(j);
      sum.emplace_back(j, 1.0);
      for (int c = 0; c < n; ++c)
        if (v[c] != 0.0) coord[static_cast<std::size_t>(c)].emplace_back(j, factor * v[c]);
    }
    if (convex) prob.add_row(std::move(sum), lp::Sense::Equal, 1.0);
    return ids;
  };

  const auto base_ids = add_block(base.vertices(), 1.0, true);
  std::vector<std::vector<int>> scaled_ids, fixed_ids;
  for (const auto& s : scaled_terms) scaled_ids.push_back(add_block(s.vertices(), 1.0, false));
  for (const auto& f : fixed_terms) fixed_ids.push_back(add_block(f.set.vertices(), f.factor, true));
  std::vector<std::vector<int>> cone_ids;
  std::vector<std::vector<double>> cone_norms;
  for (const auto& c : cones) {
    std::vector<int> ids;
    std::vector<double> norms;
    for (const auto& g : c.generators()) {
      const double nrm = g.norm();
      if (nrm <= 0) {
        ids.push_back(-1);
        norms.push_back(0);
        continue;
      }
      const int j = prob.add_variable(0.0, tol::cone_radius);
      ids.push_back(j);
      norms.push_back(nrm);
      for (int k = 0; k < n; ++k)
        if (g[k] != 0.0) coord[static_cast<std::size_t>(k)].emplace_back(j, g[k] / nrm);
    }
    for (const auto& l : c.lineality()) {
      const double nrm = l.norm();
      if (nrm <= 0) {
        ids.push_back(-1);
        norms.push_back(0);
        continue;
      }
      const int j = prob.add_variable(-tol::cone_radius, tol::cone_radius);
      ids.push_back(j);
      norms.push_back(nrm);
      for (int k = 0; k < n; ++k)
        if (l[k] != 0.0) coord[static_cast<std::size_t>(k)].emplace_back(j, l[k] / nrm);
    }
    cone_ids.push_back(std::move(ids));
    cone_norms.push_back(std::move(norms));
  }
  for (int c = 0; c < n; ++c) prob.add_row(coord[static_cast<std::size_t>(c)], lp::Sense::Equal, target[c]);

  const auto r = lp::solve(prob);
  Membership m;
  m.status = r.status;
  m.infeasibility = r.infeasibility;
  if (!r.feasible()) return m;
  m.member = true;
  auto pick = [&](const std::vector<int>& ids) {
    std::vector<double> out;
    for (int j : ids) out.push_back(j >= 0 ? r.x[static_cast<std::size_t>(j)] : 0.0);
    return out;
  };
  m.base_weights = pick(base_ids);
  for (const auto& ids : scaled_ids) {
    m.scaled_weights.push_back(pick(ids));
    double s = 0;
    for (double w : m.scaled_weights.back()) s += w;
    m.scales.push_back(s);
  }
  for (const auto& ids : fixed_ids) m.fixed_weights.push_back(pick(ids));
  for (std::size_t c = 0; c < cone_ids.size(); ++c) {
    auto coeffs = pick(cone_ids[c]);
    for (std::size_t g = 0; g < coeffs.size(); ++g) {
      if (std::abs(coeffs[g]) >= tol::cone_radius * (1 - 1e-9)) m.hit_cone_cap = true;
      if (cone_norms[c][g] > 0) coeffs[g] /= cone_norms[c][g];
    }
    m.cone_coefficients.push_back(std::move(coeffs));
  }
  // Residual of the reassembled sum.
  Vec sum = Vec::Zero(n);
  for (std::size_t i = 0; i < base.vertices().size(); ++i) sum += m.base_weights[i] * base.vertices()[i];
  for (std::size_t t = 0; t < scaled_terms.size(); ++t)
    for (std::size_t i = 0; i < scaled_terms[t].vertices().size(); ++i)
      sum += m.scaled_weights[t][i] * scaled_terms[t].vertices()[i];
  for (std::size_t t = 0; t < fixed_terms.size(); ++t)
    for (std::size_t i = 0; i < fixed_terms[t].set.vertices().size(); ++i)
      sum += fixed_terms[t].factor * m.fixed_weights[t][i] * fixed_terms[t].set.vertices()[i];
  for (std::size_t c = 0; c < cones.size(); ++c) {
    std::size_t g = 0;
    for (const auto& v : cones[c].generators()) sum += m.cone_coefficients[c][g++] * v;
    for (const auto& v : cones[c].lineality()) sum += m.cone_coefficients[c][g++] * v;
  }
  m.residual = (sum - target).cwiseAbs().maxCoeff();
  return m;
}

bool cone_contains(const ConeSpec& outer, const Vec& ray) {
  check_dim(outer.dim(), static_cast<int>(ray.size()));
  const double nrm = ray.norm();
  if (nrm <= tol::geom) return true;
  const auto m = minkowski_membership(ray / nrm, Polytope::point(Vec::Zero(outer.dim())), {}, {}, {outer});
  return m.member;
}

bool contains(const Polyhedron& outer, const Vec& p) {
  return minkowski_membership(p, outer.points, {}, {}, {outer.cone}).member;
}

bool contains(const Polyhedron& outer, const Polyhedron& inner) {
  for (const auto& v : inner.points.vertices())
    if (!contains(outer, v)) return false;
  for (const auto& g : inner.cone.generators())
    if (!cone_contains(outer.cone, g)) return false;
  for (const auto& l : inner.cone.lineality())
    if (!cone_contains(outer.cone, l) || !cone_contains(outer.cone, -l)) return false;
  return true;
}

namespace {

// Deterministic points of conv(vertices): vertices, edge subdivisions and
// Dirichlet-weighted interior points.
std::vector<Vec> sample_polytope(const Polytope& p, int edge_steps = 16, int interior = 32) {
  const auto& vs = p.vertices();
  std::vector<Vec> out(vs.begin(), vs.end());
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j)
      for (int s = 1; s < edge_steps; ++s) {
        const double t = static_cast<double>(s) / edge_steps;
        out.push_back((1 - t) * vs[i] + t * vs[j]);
      }
  if (vs.size() > 2) {
    std::mt19937_64 rng(0x5eed);
    std::exponential_distribution<double> ex(1.0);
    Vec c = Vec::Zero(p.dim());
    for (const auto& v : vs) c += v;
    out.push_back(c / static_cast<double>(vs.size()));
    for (int k = 0; k < interior; ++k) {
      std::vector<double> w(vs.size());
      double s = 0;
      for (auto& x : w) s += (x = ex(rng));
      Vec q = Vec::Zero(p.dim());
      for (std::size_t i = 0; i < vs.size(); ++i) q += (w[i] / s) * vs[i];
      out.push_back(q);
    }
  }
  return out;
}

}  // namespace

bool contains(const PolyhedronUnion& outer, const Polyhedron& inner) {
  for (const auto& o : outer)
    if (contains(o, inner)) return true;
  std::vector<Vec> pts = sample_polytope(inner.points);
  std::vector<Vec> rays = inner.cone.generators();
  for (const auto& l : inner.cone.lineality()) {
    rays.push_back(l);
    rays.push_back(-l);
  }
  const std::size_t base = pts.size();
  for (const auto& r : rays)
    for (std::size_t i = 0; i < base; ++i)
      for (double t : {1.0, 10.0, 100.0}) pts.push_back(pts[i] + t * r.normalized());
  for (const auto& p : pts) {
    bool hit = false;
    for (const auto& o : outer)
      if (contains(o, p)) {
        hit = true;
        break;
      }
    if (!hit) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Polytope minkowski_sum(const Polytope& a, const Polytope& b) {
  check_dim(a.dim(), b.dim());
  std::vector<Vec> pts;
  for (const auto& u : a.vertices())
    for (const auto& v : b.vertices()) pts.push_back(u + v);
  return Polytope(a.dim(), extreme_points(pts));
}

Polytope scaled(double factor, const Polytope& p) {
  std::vector<Vec> vs;
  for (const auto& v : p.vertices()) vs.push_back(factor * v);
  return Polytope(p.dim(), std::move(vs));
}

Polytope translated(const Polytope& p, const Vec& shift) {
  std::vector<Vec> vs;
  for (const auto& v : p.vertices()) vs.push_back(v + shift);
  return Polytope(p.dim(), std::move(vs));
}

// ---------------------------------------------------------------------------

Vec project(const Vec& p, const Polytope& set) {
  check_dim(set.dim(), static_cast<int>(p.size()));
  const auto& raw = set.vertices();
  if (raw.empty()) throw InputError("projection onto an empty polytope");
  std::vector<Vec> P;
  for (const auto& v : raw) P.push_back(v - p);
  if (P.size() == 1) return raw.front();

  // Wolfe's minimum-norm-point algorithm on conv(P).
  double scale = 0;
  for (const auto& q : P) scale = std::max(scale, q.squaredNorm());
  const double eps = 1e-12 * std::max(scale, 1.0);

  std::size_t start = 0;
  for (std::size_t i = 1; i < P.size(); ++i)
    if (P[i].squaredNorm() < P[start].squaredNorm()) start = i;
  std::vector<std::size_t> S{start};
  std::vector<double> lam{1.0};
  Vec x = P[start];

  for (int major = 0; major < 1000; ++major) {
    std::size_t j = 0;
    double best = x.dot(P[0]);
    for (std::size_t i = 1; i < P.size(); ++i)
      if (x.dot(P[i]) < best) {
        best = x.dot(P[i]);
        j = i;
      }
    if (best >= x.squaredNorm() - eps) break;
    if (std::find(S.begin(), S.end(), j) != S.end()) break;
    S.push_back(j);
    lam.push_back(0.0);

    for (int minor = 0; minor < 1000; ++minor) {
      const auto k = static_cast<Eigen::Index>(S.size());
      Mat K = Mat::Zero(k + 1, k + 1);
      for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) K(a, b) = P[S[static_cast<std::size_t>(a)]].dot(P[S[static_cast<std::size_t>(b)]]);
        K(a, k) = K(k, a) = 1.0;
      }
      Vec rhs = Vec::Zero(k + 1);
      rhs[k] = 1.0;
      const Vec sol = K.completeOrthogonalDecomposition().solve(rhs);
      const Vec alpha = sol.head(k);
      if ((alpha.array() > 1e-14).all()) {
        for (Eigen::Index a = 0; a < k; ++a) lam[static_cast<std::size_t>(a)] = alpha[a];
        break;
      }
      double theta = 1.0;
      for (Eigen::Index a = 0; a < k; ++a) {
        const double la = lam[static_cast<std::size_t>(a)];
        if (alpha[a] <= 1e-14 && la - alpha[a] > 0) theta = std::min(theta, la / (la - alpha[a]));
      }
      std::vector<std::size_t> S2;
      std::vector<double> lam2;
      for (Eigen::Index a = 0; a < k; ++a) {
        const double nl = theta * alpha[a] + (1 - theta) * lam[static_cast<std::size_t>(a)];
        if (nl > 1e-14) {
          S2.push_back(S[static_cast<std::size_t>(a)]);
          lam2.push_back(nl);
        }
      }
      if (S2.empty()) {
        S2.push_back(S.back());
        lam2.push_back(1.0);
      }
      S = std::move(S2);
      lam = std::move(lam2);
    }
    double total = 0;
    for (double l : lam) total += l;
    x = Vec::Zero(p.size());
    for (std::size_t a = 0; a < S.size(); ++a) x += (lam[a] / total) * P[S[a]];
  }
  return x + p;
}

double distance(const Vec& p, const Polytope& set) { return (project(p, set) - p).norm(); }

double distance(const Vec& p, const PolytopeUnion& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& part : set.parts()) best = std::min(best, distance(p, part));
  return best;
}

namespace {

double directed(const PolytopeUnion& a, const PolytopeUnion& b) {
  double worst = 0;
  for (const auto& part : a.parts())
    for (const auto& q : sample_polytope(part)) worst = std::max(worst, distance(q, b));
  return worst;
}

double support(const Polytope& p, const Vec& d) {
  double s = -std::numeric_limits<double>::infinity();
  for (const auto& v : p.vertices()) s = std::max(s, v.dot(d));
  return s;
}

}  // namespace

double hausdorff_distance(const PolytopeUnion& a, const PolytopeUnion& b, int n_dirs) {
  check_dim(a.dim(), b.dim());
  if (a.empty() || b.empty()) throw InputError("Hausdorff distance of an empty union");
  double h = std::max(directed(a, b), directed(b, a));
  if (a.parts().size() == 1 && b.parts().size() == 1) {
    std::vector<Vec> dirs;
    const int dim = a.dim();
    if (dim == 1) {
      dirs = {make_vec({1.0}), make_vec({-1.0})};
    } else {
      std::mt19937_64 rng(0xd1e5);
      std::normal_distribution<double> nd;
      for (int i = 0; i < dim; ++i) {
        dirs.push_back(Vec::Unit(dim, i));
        dirs.push_back(-Vec::Unit(dim, i));
      }
      if (dim == 2) {
        for (int k = 0; k < n_dirs; ++k) {
          const double t = 2 * M_PI * k / n_dirs;
          dirs.push_back(make_vec({std::cos(t), std::sin(t)}));
        }
      } else {
        while (static_cast<int>(dirs.size()) < n_dirs + 2 * dim) {
          Vec d(dim);
          for (int i = 0; i < dim; ++i) d[i] = nd(rng);
          if (d.norm() > 1e-6) dirs.push_back(d.normalized());
        }
      }
    }
    for (const auto& d : dirs) {
      const double gap = std::abs(support(a.parts()[0], d) - support(b.parts()[0], d));
      h = std::max(h, gap);
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

std::string describe(const Polytope& p) {
  if (p.vertices().empty()) return "empty";
  if (p.is_point()) return "{" + format_vec(p.vertices()[0]) + "}";
  std::string s = "conv{";
  for (std::size_t i = 0; i < p.vertices().size(); ++i) {
    if (i) s += ", ";
    s += format_vec(p.vertices()[i]);
  }
  return s + "}";
}

std::string describe(const PolytopeUnion& u) {
  if (u.empty()) return "empty";
  std::string s;
  for (std::size_t i = 0; i < u.parts().size(); ++i) {
    if (i) s += " U ";
    s += describe(u.parts()[i]);
  }
  return s;
}

std::string describe(const ConeSpec& c) {
  if (c.is_zero()) return "{0}";
  std::string s;
  if (!c.generators().empty()) {
    s += "cone{";
    for (std::size_t i = 0; i < c.generators().size(); ++i) {
      if (i) s += ", ";
      s += format_vec(c.generators()[i]);
    }
    s += "}";
  }
  if (!c.lineality().empty()) {
    if (!s.empty()) s += " + ";
    s += "span{";
    for (std::size_t i = 0; i < c.lineality().size(); ++i) {
      if (i) s += ", ";
      s += format_vec(c.lineality()[i]);
    }
    s += "}";
  }
  return s;
}

}  // namespace varcalc::geom
