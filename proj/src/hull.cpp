// SPDX-License-Identifier: Apache-2.0
//
// Hulls, facet and vertex enumeration for small dimensions. Everything here is
// brute force over index subsets, which is exact and fast enough for at most
// four dimensions and a few dozen points or halfspaces.
#include "varcalc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace varcalc::geom {

namespace {

double scale_of(const std::vector<Vec>& pts) {
  double s = 1.0;
  for (const auto& p : pts) s = std::max(s, p.cwiseAbs().maxCoeff());
  return s;
}

std::vector<Vec> dedupe(std::vector<Vec> pts, double tol) {
  std::sort(pts.begin(), pts.end(), lex_less);
  std::vector<Vec> out;
  for (auto& p : pts) {
    bool dup = false;
    for (const auto& q : out)
      if ((p - q).cwiseAbs().maxCoeff() <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

// Calls fn on every k-subset of {0..n-1}; stops early if fn returns false.
void for_each_subset(int n, int k, const std::function<bool(const std::vector<int>&)>& fn) {
  if (k > n || k < 0) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    if (!fn(idx)) return;
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

struct AffineHull {
  Vec origin;
  Mat basis;       // n x k, orthonormal columns
  Mat complement;  // n x (n-k)
};

AffineHull affine_hull(const std::vector<Vec>& pts, double tol) {
  const auto n = pts.front().size();
  AffineHull h;
  h.origin = pts.front();
  Mat D(n, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) D.col(static_cast<Eigen::Index>(i)) = pts[i] - h.origin;
  Eigen::JacobiSVD<Mat> svd(D, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++k;
  h.basis = svd.matrixU().leftCols(k);
  h.complement = svd.matrixU().rightCols(n - k);
  return h;
}

}  // namespace

std::vector<Vec> extreme_points(const std::vector<Vec>& points, double tol) {
  if (points.empty()) return {};
  const double s = scale_of(points);
  auto pts = dedupe(points, tol * s);
  if (pts.size() <= 2) return pts;
  std::vector<bool> keep(pts.size(), true);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<Vec> others;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i && keep[j]) others.push_back(pts[j]);
    if (convex_weights(pts[i], others, tol * s)) keep[i] = false;
  }
  std::vector<Vec> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

Polytope convex_hull(const std::vector<Vec>& points) {
  if (points.empty()) throw InputError("convex hull of an empty point set");
  const int dim = static_cast<int>(points.front().size());
  if (dim > kMaxHullDim) throw InputError("convex hull supports dimension at most 4, got " + std::to_string(dim));
  for (const auto& p : points) {
    if (p.size() != dim) throw InputError("convex hull points of mixed dimension");
    if (!p.allFinite()) throw InputError("non-finite point in convex hull input");
  }
  return Polytope(dim, extreme_points(points));
}

HRep to_hrep(const Polytope& poly) {
  const auto verts = poly.vertices();
  const auto n = static_cast<Eigen::Index>(poly.dim());
  const double s = scale_of(verts);
  const double tol = 1e-9 * s;
  const AffineHull ah = affine_hull(verts, tol);
  const auto k = ah.basis.cols();

  HRep h;
  h.E = ah.complement.transpose();
  h.e = h.E * ah.origin;

  std::vector<Vec> local;
  for (const auto& v : verts) local.push_back(ah.basis.transpose() * (v - ah.origin));

  std::vector<std::pair<Vec, double>> facets;
  if (k > 0) {
    for_each_subset(static_cast<int>(local.size()), static_cast<int>(k), [&](const std::vector<int>& idx) {
      const Vec& y0 = local[static_cast<std::size_t>(idx[0])];
      Mat M(k - 1, k);
      for (Eigen::Index r = 1; r < k; ++r) M.row(r - 1) = (local[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])] - y0).transpose();
      Vec a;
      if (k == 1) {
        a = Vec::Ones(1);
      } else {
        Eigen::FullPivLU<Mat> lu(M);
        lu.setThreshold(1e-10);
        const Mat ker = lu.kernel();
        if (ker.cols() != 1) return true;
        a = ker.col(0).normalized();
      }
      const double b = a.dot(y0);
      bool le = true, ge = true;
      for (const auto& y : local) {
        const double d = a.dot(y) - b;
        if (d > tol) le = false;
        if (d < -tol) ge = false;
      }
      if (!le && !ge) return true;
      if (le && ge) return true;  // all points on the hyperplane: not a facet
      if (!le) a = -a;
      const double bb = a.dot(y0);
      for (const auto& [fa, fb] : facets)
        if ((fa - a).norm() < 1e-7 && std::abs(fb - bb) < 1e-7 * s) return true;
      facets.emplace_back(a, bb);
      return true;
    });
  }
  h.A.resize(static_cast<Eigen::Index>(facets.size()), n);
  h.b.resize(static_cast<Eigen::Index>(facets.size()));
  for (std::size_t i = 0; i < facets.size(); ++i) {
    const Vec amb = ah.basis * facets[i].first;
    h.A.row(static_cast<Eigen::Index>(i)) = amb.transpose();
    h.b[static_cast<Eigen::Index>(i)] = facets[i].second + amb.dot(ah.origin);
  }
  return h;
}

std::vector<Vec> enumerate_vertices(const HRep& h, double tol) {
  const auto n = h.A.rows() > 0 ? h.A.cols() : h.E.cols();
  // Parametrize the affine subspace {E v = e} as v = q0 + Z t.
  Vec q0 = Vec::Zero(n);
  Mat Z = Mat::Identity(n, n);
  if (h.E.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(h.E);
    q0 = cod.solve(h.e);
    if ((h.E * q0 - h.e).cwiseAbs().maxCoeff() > 1e-7 * (1.0 + h.e.cwiseAbs().maxCoeff())) return {};
    Eigen::FullPivLU<Mat> lu(h.E);
    lu.setThreshold(1e-10);
    Z = lu.kernel();
    if (lu.rank() == n) Z = Mat::Zero(n, 0);
  }
  const auto d = Z.cols();
  const Mat A = h.A.rows() > 0 ? Mat(h.A * Z) : Mat(0, d);
  const Vec b = h.A.rows() > 0 ? Vec(h.b - h.A * q0) : Vec(0);
  const double s = 1.0 + (b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);

  auto feasible = [&](const Vec& t) {
    if (A.rows() == 0) return true;
    return ((A * t - b).array() <= tol * s).all();
  };

  std::vector<Vec> out;
  if (d == 0) {
    Vec t(0);
    if (feasible(t)) out.push_back(q0);
    return out;
  }
  for_each_subset(static_cast<int>(A.rows()), static_cast<int>(d), [&](const std::vector<int>& idx) {
    Mat M(d, d);
    Vec r(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      M.row(i) = A.row(idx[static_cast<std::size_t>(i)]);
      r[i] = b[idx[static_cast<std::size_t>(i)]];
    }
    Eigen::FullPivLU<Mat> lu(M);
    lu.setThreshold(1e-10);
    if (lu.rank() < d) return true;
    const Vec t = lu.solve(r);
    if (feasible(t)) out.push_back(q0 + Z * t);
    return true;
  });
  return dedupe(std::move(out), 1e-9 * s);
}

std::optional<Polytope> intersect(const std::vector<Polytope>& parts) {
  if (parts.empty()) throw std::invalid_argument("intersection of no polytopes");
  if (parts.size() == 1) return parts.front();
  const auto n = static_cast<Eigen::Index>(parts.front().dim());
  if (n > kMaxHullDim) throw InputError("polytope intersection supports dimension at most 4");
  std::vector<HRep> hs;
  Eigen::Index na = 0, ne = 0;
  for (const auto& p : parts) {
    if (p.dim() != n) throw InputError("intersection of polytopes of different dimension");
    hs.push_back(to_hrep(p));
    na += hs.back().A.rows();
    ne += hs.back().E.rows();
  }
  HRep all;
  all.A.resize(na, n);
  all.b.resize(na);
  all.E.resize(ne, n);
  all.e.resize(ne);
  Eigen::Index ia = 0, ie = 0;
  for (const auto& h : hs) {
    if (h.A.rows() > 0) {
      all.A.middleRows(ia, h.A.rows()) = h.A;
      all.b.segment(ia, h.A.rows()) = h.b;
      ia += h.A.rows();
    }
    if (h.E.rows() > 0) {
      all.E.middleRows(ie, h.E.rows()) = h.E;
      all.e.segment(ie, h.E.rows()) = h.e;
      ie += h.E.rows();
    }
  }
  auto verts = enumerate_vertices(all, 1e-9);
  if (verts.empty() && ne > 0) {
    // Stacked equalities from different parts may be inconsistent only up to
    // rounding; fold them into paired inequalities with a tolerance instead.
    HRep relaxed;
    relaxed.A.resize(na + 2 * ne, n);
    relaxed.b.resize(na + 2 * ne);
    if (na > 0) {
      relaxed.A.topRows(na) = all.A;
      relaxed.b.head(na) = all.b;
    }
    const double slack = 1e-9;
    for (Eigen::Index i = 0; i < ne; ++i) {
      relaxed.A.row(na + 2 * i) = all.E.row(i);
      relaxed.b[na + 2 * i] = all.e[i] + slack;
      relaxed.A.row(na + 2 * i + 1) = -all.E.row(i);
      relaxed.b[na + 2 * i + 1] = -all.e[i] + slack;
    }
    relaxed.E.resize(0, n);
    relaxed.e.resize(0);
    verts = enumerate_vertices(relaxed, 1e-9);
  }
  if (verts.empty()) return std::nullopt;
  return Polytope(static_cast<int>(n), extreme_points(verts));
}

}  // namespace varcalc::geom
