// SPDX-License-Identifier: Apache-2.0
#include "varcalc/normal_cone.hpp"

#include "varcalc/subdiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace varcalc::normal {

const std::vector<geom::ConeSpec>& NormalConeResult::require() const {
  if (!qualified) throw RefusalError(diagnostic);
  return cones;
}

namespace {

bool cone_in(const geom::ConeSpec& inner, const geom::ConeSpec& outer) {
  for (const auto& g : inner.generators())
    if (!geom::cone_contains(outer, g)) return false;
  for (const auto& l : inner.lineality())
    if (!geom::cone_contains(outer, l) || !geom::cone_contains(outer, -l)) return false;
  return true;
}

std::vector<geom::ConeSpec> prune(std::vector<geom::ConeSpec> cones) {
  std::vector<bool> drop(cones.size(), false);
  for (std::size_t i = 0; i < cones.size(); ++i)
    for (std::size_t j = 0; j < cones.size() && !drop[i]; ++j) {
      if (i == j || drop[j] || !cone_in(cones[i], cones[j])) continue;
      if (j > i && cone_in(cones[j], cones[i])) continue;
      drop[i] = true;
    }
  std::vector<geom::ConeSpec> out;
  for (std::size_t i = 0; i < cones.size(); ++i)
    if (!drop[i]) out.push_back(std::move(cones[i]));
  return out;
}

// Basic feasible solutions of {z >= 0 : A z = b}.
std::vector<Vec> basic_solutions(const Mat& A, const Vec& b) {
  const auto ncols = A.cols();
  std::vector<Vec> out;
  const double scale = 1.0 + (b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
  auto accept = [&](const Vec& z) {
    if ((z.array() < -1e-10 * scale).any()) return;
    if (A.rows() > 0 && (A * z - b).cwiseAbs().maxCoeff() > 1e-9 * scale) return;
    Vec c = z.cwiseMax(0.0);
    for (const auto& o : out)
      if ((o - c).cwiseAbs().maxCoeff() <= 1e-10 * scale) return;
    out.push_back(c);
  };
  Eigen::Index r = 0;
  if (A.rows() > 0 && ncols > 0) {
    Eigen::FullPivLU<Mat> lu(A);
    lu.setThreshold(1e-10);
    r = lu.rank();
  }
  if (r == 0) {
    accept(Vec::Zero(ncols));
    return out;
  }
  // Independent rows.
  Eigen::ColPivHouseholderQR<Mat> qr(A.transpose());
  qr.setThreshold(1e-10);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < r; ++i) rows.push_back(qr.colsPermutation().indices()[i]);
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(r));
  std::function<void(Eigen::Index, Eigen::Index)> rec = [&](Eigen::Index start, Eigen::Index depth) {
    if (depth == r) {
      Mat M(r, r);
      Vec rhs(r);
      for (Eigen::Index i = 0; i < r; ++i) {
        rhs[i] = b[rows[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < r; ++j) M(i, j) = A(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
      }
      Eigen::FullPivLU<Mat> sub(M);
      sub.setThreshold(1e-10);
      if (sub.rank() < r) return;
      const Vec zs = sub.solve(rhs);
      Vec z = Vec::Zero(ncols);
      for (Eigen::Index j = 0; j < r; ++j) z[cols[static_cast<std::size_t>(j)]] = zs[j];
      accept(z);
      return;
    }
    for (Eigen::Index c = start; c < ncols; ++c) {
      cols[static_cast<std::size_t>(depth)] = c;
      rec(c + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

}  // namespace

std::optional<std::vector<double>> zero_combination(const std::vector<Vec>& vertices, const std::vector<Vec>& lines,
                                                    int dim) {
  if (vertices.empty()) return std::nullopt;
  lp::LPProblem prob;
  std::vector<int> g, m;
  for (std::size_t i = 0; i < vertices.size(); ++i) g.push_back(prob.add_variable());
  for (std::size_t i = 0; i < lines.size(); ++i) m.push_back(prob.add_variable(-tol::cone_radius, tol::cone_radius));
  for (int c = 0; c < dim; ++c) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t i = 0; i < vertices.size(); ++i) row.emplace_back(g[i], vertices[i][c]);
    for (std::size_t i = 0; i < lines.size(); ++i) row.emplace_back(m[i], lines[i][c]);
    prob.add_row(std::move(row), lp::Sense::Equal, 0.0);
  }
  std::vector<std::pair<int, double>> sum;
  for (int j : g) sum.emplace_back(j, 1.0);
  prob.add_row(std::move(sum), lp::Sense::Equal, 1.0);
  const auto r = lp::solve(prob);
  if (r.status == lp::Status::Breakdown) throw std::runtime_error("LP breakdown in qualification check");
  if (!r.feasible()) return std::nullopt;
  return std::vector<double>(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(vertices.size()));
}

bool cone_union_contains(const std::vector<geom::ConeSpec>& cones, const Vec& v) {
  for (const auto& c : cones)
    if (geom::cone_contains(c, v)) return true;
  return false;
}

std::string describe(const std::vector<geom::ConeSpec>& cones) {
  if (cones.empty()) return "empty";
  std::string s;
  for (std::size_t i = 0; i < cones.size(); ++i) {
    if (i) s += " U ";
    s += geom::describe(cones[i]);
  }
  return s;
}

NormalConeResult normal_cone(const sets::SetSpec& set, const Vec& x, const SampleParams& params) {
  if (x.size() != set.dim()) throw InputError("point dimension does not match set");
  const double viol = set.violation(x);
  if (viol > tol::geom)
    throw InputError("point is not in the set (violation " + format_number(viol) + ")");
  const int dim = set.dim();

  NormalConeResult res;
  std::size_t total = 1;
  for (std::size_t i = 0; i < set.constraints().size(); ++i) {
    const auto& c = set.constraints()[i];
    const double g = c.fn(x);
    if (!c.equality && g < -tol::geom) continue;
    ConstraintBranches br;
    br.constraint = static_cast<int>(i);
    const auto d = subdiff::basic_subdifferential(c.fn, x, params);
    if (c.equality) {
      if (d.parts().size() == 1 && d.parts()[0].is_point()) {
        br.linear_span = true;
        br.gradient = d.parts()[0].vertices()[0];
      } else {
        br.options = d.parts();
        const auto neg = subdiff::basic_subdifferential(expr::negate(c.fn), x, params);
        for (const auto& p : neg.parts()) br.options.push_back(p);
      }
    } else {
      br.options = d.parts();
    }
    res.active.push_back(br.constraint);
    if (!br.linear_span) {
      total *= br.options.size();
      if (total > kMaxBranchCombinations)
        throw std::length_error("normal cone needs more than 4096 branch combinations");
    }
    res.branches.push_back(std::move(br));
  }
  res.combinations = total;

  std::vector<Vec> lines;
  for (const auto& br : res.branches)
    if (br.linear_span) lines.push_back(br.gradient);
  if (!lines.empty()) {
    Mat L(dim, static_cast<Eigen::Index>(lines.size()));
    for (std::size_t i = 0; i < lines.size(); ++i) L.col(static_cast<Eigen::Index>(i)) = lines[i];
    Eigen::FullPivLU<Mat> lu(L);
    lu.setThreshold(1e-10);
    if (lu.rank() < static_cast<Eigen::Index>(lines.size())) {
      res.qualified = false;
      res.diagnostic = "qualification violated: gradients of smooth equality constraints are linearly dependent";
      const Mat ker = lu.kernel();
      std::size_t k = 0;
      const double top = ker.col(0).cwiseAbs().maxCoeff();
      for (const auto& br : res.branches)
        res.witness.push_back(br.linear_span ? ker(static_cast<Eigen::Index>(k++), 0) / top : 0.0);
      return res;
    }
  }

  std::vector<std::size_t> pick(res.branches.size(), 0);
  std::vector<geom::ConeSpec> cones;
  for (;;) {
    std::vector<Vec> gens;
    std::vector<std::pair<std::size_t, std::size_t>> owner;  // branch, vertex count
    for (std::size_t b = 0; b < res.branches.size(); ++b) {
      const auto& br = res.branches[b];
      if (br.linear_span) continue;
      const auto& part = br.options[pick[b]];
      owner.emplace_back(b, part.vertices().size());
      for (const auto& v : part.vertices()) gens.push_back(v);
    }
    if (auto w = zero_combination(gens, lines, dim)) {
      res.qualified = false;
      res.witness.assign(res.branches.size(), 0.0);
      std::size_t k = 0;
      for (const auto& [b, cnt] : owner)
        for (std::size_t i = 0; i < cnt; ++i) res.witness[b] += (*w)[k++];
      const double top = *std::max_element(res.witness.begin(), res.witness.end());
      for (auto& v : res.witness) v /= top;
      res.diagnostic = "qualification violated: a nonzero nonnegative combination of active subgradients vanishes";
      return res;
    }
    cones.push_back(geom::ConeSpec(dim, gens, lines).canonical());
    std::size_t b = 0;
    while (b < pick.size() && (res.branches[b].linear_span || ++pick[b] == res.branches[b].options.size())) {
      pick[b] = 0;
      ++b;
    }
    if (b == pick.size()) break;
  }
  if (res.branches.empty()) cones = {geom::ConeSpec::zero(dim)};
  res.cones = prune(std::move(cones));
  return res;
}

geom::PolyhedronUnion coderivative(const sets::SetSpec& graph, const NormalConeResult& nc, const Vec& w) {
  const auto& cones = nc.require();
  const int n = graph.x_dim();
  const int m = graph.dim() - n;
  if (w.size() != m) throw InputError("coderivative direction has dimension " + std::to_string(w.size()) +
                                      ", expected " + std::to_string(m));
  geom::PolyhedronUnion out;
  for (const auto& cone : cones) {
    std::vector<Vec> cols;
    for (const auto& g : cone.generators()) cols.push_back(g);
    for (const auto& l : cone.lineality()) {
      cols.push_back(l);
      cols.push_back(-l);
    }
    const auto k = static_cast<Eigen::Index>(cols.size());
    Mat Gx(n, k), Gy(m, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      Gx.col(j) = cols[static_cast<std::size_t>(j)].head(n);
      Gy.col(j) = cols[static_cast<std::size_t>(j)].tail(m);
    }
    const auto verts = basic_solutions(Gy, -w);
    if (verts.empty()) continue;
    Mat Ar(m + 1, k);
    Ar.topRows(m) = Gy;
    Ar.row(m).setOnes();
    Vec br = Vec::Zero(m + 1);
    br[m] = 1.0;
    const auto rays = k > 0 ? basic_solutions(Ar, br) : std::vector<Vec>{};
    std::vector<Vec> pts, dirs;
    for (const auto& z : verts) pts.push_back(Gx * z);
    for (const auto& z : rays) {
      const Vec d = Gx * z;
      if (d.norm() > tol::geom) dirs.push_back(d);
    }
    geom::Polyhedron p{geom::Polytope(n, geom::extreme_points(pts)), geom::ConeSpec(n, dirs).canonical()};
    bool dup = false;
    for (const auto& q : out)
      if (geom::contains(q, p)) dup = true;
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

geom::PolyhedronUnion coderivative_image(const sets::SetSpec& graph, const NormalConeResult& nc,
                                         const geom::Polytope& pairs) {
  const auto& cones = nc.require();
  const int n = graph.x_dim();
  const int m = graph.dim() - n;
  if (pairs.dim() != n + m) throw InputError("coderivative pairs must live in the graph's space");
  const auto& pv = pairs.vertices();
  const auto np = static_cast<Eigen::Index>(pv.size());
  geom::PolyhedronUnion out;
  for (const auto& cone : cones) {
    std::vector<Vec> cols;
    for (const auto& g : cone.generators()) cols.push_back(g);
    for (const auto& l : cone.lineality()) {
      cols.push_back(l);
      cols.push_back(-l);
    }
    const auto k = static_cast<Eigen::Index>(cols.size());
    // Unknowns: convex weights over the pairs, then cone coefficients.
    Mat A = Mat::Zero(m + 1, np + k);
    for (Eigen::Index j = 0; j < np; ++j) {
      A.block(0, j, m, 1) = pv[static_cast<std::size_t>(j)].tail(m);
      A(m, j) = 1.0;
    }
    Mat Gx(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      A.block(0, np + j, m, 1) = cols[static_cast<std::size_t>(j)].tail(m);
      Gx.col(j) = cols[static_cast<std::size_t>(j)].head(n);
    }
    Vec b = Vec::Zero(m + 1);
    b[m] = 1.0;
    const auto verts = basic_solutions(A, b);
    if (verts.empty()) continue;
    std::vector<Vec> pts, dirs;
    for (const auto& z : verts) {
      Vec p = Gx * z.tail(k);
      for (Eigen::Index j = 0; j < np; ++j) p += z[j] * pv[static_cast<std::size_t>(j)].head(n);
      pts.push_back(p);
    }
    if (k > 0) {
      Mat Ar(m + 1, k);
      Ar.topRows(m) = A.block(0, np, m, k);
      Ar.row(m).setOnes();
      for (const auto& z : basic_solutions(Ar, b)) {
        const Vec d = Gx * z;
        if (d.norm() > tol::geom) dirs.push_back(d);
      }
    }
    geom::Polyhedron p{geom::Polytope(n, geom::extreme_points(pts)), geom::ConeSpec(n, dirs).canonical()};
    bool dup = false;
    for (const auto& q : out)
      if (geom::contains(q, p)) dup = true;
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

geom::PolyhedronUnion coderivative(const sets::SetSpec& graph, const Vec& point, const Vec& w,
                                   const SampleParams& params) {
  if (graph.kind() != sets::SetKind::Graph) throw InputError("coderivative needs a graph set");
  return coderivative(graph, normal_cone(graph, point, params), w);
}

LipschitzLikeVerdict lipschitz_like_check(const sets::SetSpec& graph, const Vec& point, const SampleParams& params) {
  const auto vals = coderivative(graph, point, Vec::Zero(graph.dim() - graph.x_dim()), params);
  LipschitzLikeVerdict v;
  v.lipschitz_like = true;
  for (const auto& p : vals) {
    v.at_zero.push_back(p.cone);
    if (!p.cone.is_zero()) v.lipschitz_like = false;
    for (const auto& q : p.points.vertices())
      if (q.norm() > tol::geom) v.lipschitz_like = false;
  }
  if (v.at_zero.empty()) v.at_zero.push_back(geom::ConeSpec::zero(graph.x_dim()));
  return v;
}

}  // namespace varcalc::normal
