// SPDX-License-Identifier: Apache-2.0
#include "varcalc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace varcalc::oracle {

namespace {

constexpr double kStencilFraction = 0.01;
constexpr int kStencilDirs = 32;

std::vector<Vec> truncate_dirs(const std::vector<Vec>& dirs, int dim) {
  if (dim <= 2 || dirs.size() <= 40) return dirs;
  return {dirs.begin(), dirs.begin() + 40};
}

// Branch at z when no reachable piecewise node has a tie. Tied nodes are left
// out, so branch_gradient rejects them if they lie on the evaluated path.
std::optional<expr::Branch> smooth_branch(const expr::FunctionDef& f, const Vec& z) {
  expr::Branch b;
  for (const auto& [id, sel] : expr::active_pattern(f, z))
    if (sel.size() == 1) b[id] = sel[0];
  try {
    (void)expr::branch_gradient(f, z, b);
  } catch (const InputError&) {
    return std::nullopt;
  }
  return b;
}

bool passes_stencil(const expr::FunctionDef& f, const Vec& z, const Vec& v, double rho, double eps,
                    const std::vector<Vec>& stencil) {
  const double fz = f(z);
  for (const auto& u : stencil)
    if (f(z + rho * u) - fz - rho * v.dot(u) < -eps * rho) return false;
  return true;
}

}  // namespace

std::optional<geom::Polytope> quotient_polytope(const ScalarFn& f, const Vec& x, const std::vector<double>& rhos,
                                                double eps, const std::vector<Vec>& dirs_in) {
  const int dim = static_cast<int>(x.size());
  const auto dirs = truncate_dirs(dirs_in, dim);
  const double fx = f(x);
  std::vector<double> rhs(dirs.size(), std::numeric_limits<double>::infinity());
  for (double rho : rhos)
    for (std::size_t i = 0; i < dirs.size(); ++i)
      rhs[i] = std::min(rhs[i], (f(x + rho * dirs[i]) - fx) / rho + eps);
  if (dim == 1) {
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      if (dirs[i][0] > 0) hi = std::min(hi, rhs[i] / dirs[i][0]);
      else if (dirs[i][0] < 0) lo = std::max(lo, rhs[i] / dirs[i][0]);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw InputError("quotient directions do not bound the set");
    if (lo > hi) return std::nullopt;
    if (hi - lo <= 1e-15) return geom::Polytope::point(make_vec({lo}));
    return geom::Polytope(1, {make_vec({lo}), make_vec({hi})});
  }
  geom::HRep h;
  h.A.resize(static_cast<Eigen::Index>(dirs.size()), dim);
  h.b.resize(static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    h.A.row(static_cast<Eigen::Index>(i)) = dirs[i].transpose();
    h.b[static_cast<Eigen::Index>(i)] = rhs[i];
  }
  h.E.resize(0, dim);
  h.e.resize(0);
  auto verts = geom::enumerate_vertices(h, 1e-12);
  if (verts.empty()) return std::nullopt;
  return geom::Polytope(dim, geom::extreme_points(verts, 1e-12));
}

SubdiffOracle sampled_subdiff(const expr::FunctionDef& f, const Vec& x, const SampleParams& params) {
  params.validate();
  const int dim = static_cast<int>(f.dim());
  if (x.size() != dim) throw InputError("point dimension does not match function");
  const auto dirs = sampling::directions(dim, params.dirs_per_radius, params.seed);
  const auto stencil = sampling::directions(dim, kStencilDirs, params.seed + 1);
  const auto fn = [&f](const Vec& z) { return f(z); };
  const std::size_t K = params.radii.size();

  SubdiffOracle out;
  // Per direction: branch and candidate at each radius.
  std::vector<std::vector<std::optional<std::pair<expr::Branch, Vec>>>> hits(
      dirs.size(), std::vector<std::optional<std::pair<expr::Branch, Vec>>>(K));
  for (std::size_t k = 0; k < K; ++k) {
    const double r = params.radii[k];
    const double eps = params.eps_at(k);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const Vec z = x + r * dirs[i];
      auto b = smooth_branch(f, z);
      if (!b) {
        // Tie at the sample point: relaxed regular subdifferential there.
        if (k + 1 == K) {
          const double rho = r * kStencilFraction;
          if (auto q = quotient_polytope(fn, z, {rho}, eps, dirs)) out.fills.push_back(*q);
        }
        continue;
      }
      ++out.candidates;
      const Vec v = expr::branch_gradient(f, z, *b);
      if (!passes_stencil(f, z, v, r * kStencilFraction, eps, stencil)) continue;
      ++out.accepted;
      out.cloud.push_back(v);
      hits[i][k] = std::make_pair(*b, v);
    }
  }
  // Linear extrapolation to radius zero over the two smallest radii.
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto& last = hits[i][K - 1];
    if (!last) continue;
    if (K >= 2 && hits[i][K - 2] && hits[i][K - 2]->first == last->first) {
      const double r1 = params.radii[K - 2], r2 = params.radii[K - 1];
      const Vec& v1 = hits[i][K - 2]->second;
      const Vec& v2 = last->second;
      out.limits.push_back(v2 + (v2 - v1) * (r2 / (r1 - r2)));
    } else {
      out.limits.push_back(last->second);
    }
  }
  {
    const double r = params.radii.back();
    if (auto q = quotient_polytope(fn, x, {r * kStencilFraction}, params.eps_at(K - 1), dirs))
      out.fills.push_back(*q);
  }

  // Single-linkage clusters over sorted limits.
  auto pts = out.limits;
  std::sort(pts.begin(), pts.end(), lex_less);
  const double link = 10 * tol::geom;
  std::vector<int> label(pts.size(), -1);
  int nlabels = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (label[i] >= 0) continue;
    label[i] = nlabels;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (label[j] < 0 && (pts[a] - pts[j]).norm() <= link) {
          label[j] = nlabels;
          stack.push_back(j);
        }
    }
    ++nlabels;
  }
  std::vector<geom::Polytope> parts;
  for (int c = 0; c < nlabels; ++c) {
    std::vector<Vec> members;
    Vec center = Vec::Zero(dim);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (label[i] == c) {
        members.push_back(pts[i]);
        center += pts[i];
      }
    out.cluster_centers.push_back(center / static_cast<double>(members.size()));
    parts.emplace_back(dim, geom::extreme_points(members));
  }
  for (const auto& q : out.fills) parts.push_back(q);
  out.hull = geom::PolytopeUnion(dim, std::move(parts)).canonical();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Lattice {
  int dim;
  int per_axis;
  Vec lo;
  double step;

  std::size_t size() const {
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(per_axis);
    return n;
  }
  Vec point(std::size_t idx) const {
    Vec p = lo;
    for (int i = 0; i < dim; ++i) {
      p[i] += step * static_cast<double>(idx % static_cast<std::size_t>(per_axis));
      idx /= static_cast<std::size_t>(per_axis);
    }
    return p;
  }
};

// Largest change of any equality per unit step near x, for the feasibility band.
double equality_slope(const sets::SetSpec& set, const Vec& x, double r) {
  double L = 0.0;
  for (const auto& c : set.constraints()) {
    if (!c.equality) continue;
    for (int i = 0; i < set.dim(); ++i)
      for (double s : {1.0, -1.0}) {
        Vec z = x;
        z[i] += s * r;
        L = std::max(L, std::abs(c.fn(z) - c.fn(x)) / r);
      }
  }
  return L;
}

bool in_band(const sets::SetSpec& set, const Vec& z, double band) {
  for (const auto& c : set.constraints()) {
    const double g = c.fn(z);
    if (c.equality ? std::abs(g) > band : g > tol::geom) return false;
  }
  return true;
}


// Point on the segment [a, b] where `inside` flips, by bisection; a inside.
template <class Pred>
Vec bisect(const Vec& a_in, const Vec& b_in, Pred inside) {
  Vec a = a_in, b = b_in;
  for (int i = 0; i < 60; ++i) {
    const Vec m = 0.5 * (a + b);
    (inside(m) ? a : b) = m;
  }
  return a;
}

// Zoomed lattices around the current nearest point w. Lattice edges that
// cross the boundary are bisected, so candidates sit on the boundary to
// rounding precision and only the lateral spacing limits accuracy.
void refine_projection(const sets::SetSpec& set, const Vec& z, Vec& w, double& best, double step) {
  const int dim = set.dim();
  const int per_axis = dim <= 2 ? 25 : 5;
  auto feasible = [&](const Vec& q) { return in_band(set, q, 1e-12); };
  auto consider = [&](const Vec& q) {
    const double dd = (z - q).squaredNorm();
    if (dd < best) {
      best = dd;
      w = q;
    }
  };
  // The coarse nearest point is off the boundary by up to a step, which
  // leaves it ambiguous across a lateral window of about sqrt(2 step gap).
  double half = 2 * step + std::sqrt(2 * step * std::sqrt(best));
  for (int level = 0; level < 3; ++level) {
    Lattice fine{dim, per_axis, w - Vec::Constant(dim, half), 2 * half / (per_axis - 1)};
    for (std::size_t i = 0; i < fine.size(); ++i) {
      const Vec q = fine.point(i);
      const bool fq = feasible(q);
      if (fq) consider(q);
      for (int axis = 0; axis < dim; ++axis) {
        Vec q2 = q;
        q2[axis] += fine.step;
        for (const auto& c : set.constraints()) {
          if (!c.equality) continue;
          const double h1 = c.fn(q), h2 = c.fn(q2);
          if ((h1 <= 0) == (h2 <= 0)) continue;
          const Vec m = bisect(q, q2, [&](const Vec& u) { return (c.fn(u) <= 0) == (h1 <= 0); });
          if (in_band(set, m, 1e-9)) consider(m);
        }
        if (fq != feasible(q2)) consider(fq ? bisect(q, q2, feasible) : bisect(q2, q, feasible));
      }
    }
    half = 2 * fine.step;
  }
}
}  // namespace

NormalOracle sampled_normal_cone(const sets::SetSpec& set, const Vec& x, const SampleParams& params) {
  params.validate();
  const int dim = set.dim();
  if (x.size() != dim) throw InputError("point dimension does not match set");
  if (!set.contains(x)) throw InputError("point is not in the set");
  const auto dirs = sampling::directions(dim, params.dirs_per_radius, params.seed);
  NormalOracle out;
  for (double r : params.radii) {
    int per_axis = 257;
    while (std::pow(static_cast<double>(per_axis), dim) > 2e5) per_axis = (per_axis - 1) / 2 + 1;
    Lattice lat{dim, per_axis, x - Vec::Constant(dim, 2 * r), 4 * r / (per_axis - 1)};
    const double band = 0.5 * lat.step * std::sqrt(static_cast<double>(dim)) * equality_slope(set, x, r);
    std::vector<Vec> feasible;
    for (std::size_t i = 0; i < lat.size(); ++i) {
      Vec z = lat.point(i);
      if (in_band(set, z, band)) feasible.push_back(std::move(z));
    }
    if (feasible.empty())
      throw InputError("grid too coarse: no feasible projection candidates at radius " + format_number(r));
    for (const auto& d : dirs) {
      const Vec z = x + r * d;
      ++out.samples;
      if (set.contains(z)) continue;
      double best = std::numeric_limits<double>::infinity();
      Vec w;
      for (const auto& q : feasible) {
        const double dd = (z - q).squaredNorm();
        if (dd < best) {
          best = dd;
          w = q;
        }
      }
      refine_projection(set, z, w, best, lat.step);
      const double gap = std::sqrt(best);
      // Near-boundary samples carry lattice-sized angular error.
      if (gap < 16 * lat.step) continue;
      ++out.outside;
      out.directions.push_back((z - w) / gap);
    }
  }
  return out;
}

std::optional<Vec> grid_projection(const sets::SetSpec& set, const Vec& z, double half_width, double max_points) {
  const int dim = set.dim();
  if (z.size() != dim) throw InputError("point dimension does not match set");
  if (set.contains(z)) return z;
  int per_axis = 257;
  while (per_axis > 3 && std::pow(static_cast<double>(per_axis), dim) > max_points) per_axis = (per_axis - 1) / 2 + 1;
  Lattice lat{dim, per_axis, z - Vec::Constant(dim, half_width), 2 * half_width / (per_axis - 1)};
  const double band = 0.5 * lat.step * std::sqrt(static_cast<double>(dim)) * equality_slope(set, z, half_width);
  double best = std::numeric_limits<double>::infinity();
  Vec w;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const Vec q = lat.point(i);
    const double dd = (z - q).squaredNorm();
    if (dd < best && in_band(set, q, band)) {
      best = dd;
      w = q;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  refine_projection(set, z, w, best, lat.step);
  return w;
}

double angle_to_cone(const Vec& u_in, const geom::ConeSpec& cone) {
  const Vec u = u_in.normalized();
  const auto& gens = cone.generators();
  const auto& lin = cone.lineality();
  const int n = static_cast<int>(gens.size());
  double best_res = u.norm();
  Vec best_proj = Vec::Zero(u.size());
  // Nonnegative least squares by enumeration of supports.
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<Vec> cols;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) cols.push_back(gens[static_cast<std::size_t>(i)]);
    const int nsel = static_cast<int>(cols.size());
    for (const auto& l : lin) cols.push_back(l);
    if (cols.empty()) continue;
    if (static_cast<int>(cols.size()) > u.size() + 1) continue;
    Mat M(u.size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = cols[i];
    const Vec c = M.completeOrthogonalDecomposition().solve(u);
    if ((c.head(nsel).array() < -1e-12).any()) continue;
    const Vec p = M * c;
    const double res = (u - p).norm();
    if (res < best_res) {
      best_res = res;
      best_proj = p;
    }
  }
  if (best_proj.norm() < 1e-14) return M_PI / 2 + (u.dot(best_proj) < 0 ? M_PI / 2 : 0.0);
  return std::acos(std::clamp(u.dot(best_proj.normalized()), -1.0, 1.0));
}

double max_angle_to_union(const std::vector<Vec>& dirs, const std::vector<geom::ConeSpec>& cones) {
  double worst = 0.0;
  for (const auto& d : dirs) {
    double best = M_PI;
    for (const auto& c : cones) best = std::min(best, angle_to_cone(d, c));
    worst = std::max(worst, best);
  }
  return worst;
}

double coverage_gap(const std::vector<geom::ConeSpec>& cones, const std::vector<Vec>& dirs) {
  std::vector<Vec> probes;
  for (const auto& c : cones) {
    std::vector<Vec> rays = c.generators();
    for (const auto& l : c.lineality()) {
      rays.push_back(l);
      rays.push_back(-l);
    }
    for (std::size_t i = 0; i < rays.size(); ++i) {
      probes.push_back(rays[i].normalized());
      for (std::size_t j = i + 1; j < rays.size(); ++j)
        for (int s = 1; s < 8; ++s) {
          const double t = s / 8.0;
          const Vec p = (1 - t) * rays[i].normalized() + t * rays[j].normalized();
          if (p.norm() > 1e-9) probes.push_back(p.normalized());
        }
    }
  }
  double worst = 0.0;
  for (const auto& p : probes) {
    double best = M_PI;
    for (const auto& d : dirs) best = std::min(best, std::acos(std::clamp(p.dot(d), -1.0, 1.0)));
    worst = std::max(worst, best);
  }
  return worst;
}

// ---------------------------------------------------------------------------

LipschitzSample sampled_lipschitz_like(const sets::SetSpec& graph, const Vec& point, const SampleParams& params,
                                       double ell) {
  if (graph.kind() != sets::SetKind::Graph) throw InputError("Lipschitz-like test needs a graph set");
  const int n = graph.x_dim();
  const int m = graph.dim() - n;
  const Vec xb = point.head(n), yb = point.tail(m);
  const auto xdirs = sampling::directions(n, 16, params.seed);
  LipschitzSample out;
  out.bounded = true;
  const std::size_t levels = std::min<std::size_t>(3, params.radii.size());
  for (std::size_t k = 0; k < levels; ++k) {
    const double delta = params.radii[k];
    const int per_axis = m == 1 ? 121 : 41;
    const double R = 3 * delta;
    Lattice lat{m, per_axis, yb - Vec::Constant(m, R), 2 * R / (per_axis - 1)};
    const double band = 0.5 * lat.step * std::sqrt(static_cast<double>(m)) *
                        equality_slope(graph, point, delta);
    auto slice = [&](const Vec& x, bool inner) {
      std::vector<Vec> ys;
      Vec z(n + m);
      z.head(n) = x;
      for (std::size_t i = 0; i < lat.size(); ++i) {
        const Vec y = lat.point(i);
        if (inner && (y - yb).cwiseAbs().maxCoeff() > delta + 1e-15) continue;
        z.tail(m) = y;
        if (in_band(graph, z, band)) ys.push_back(y);
      }
      return ys;
    };
    std::vector<Vec> xs{xb};
    for (const auto& d : xdirs) xs.push_back(xb + delta * d);
    for (const auto& x : xs) {
      const auto Fx = slice(x, true);
      if (Fx.empty()) continue;
      for (const auto& d : xdirs)
        for (double s : {delta, delta / 10, delta / 100, delta / 1000}) {
          const Vec u = x + s * d;
          const auto Fu = slice(u, false);
          double worst = 0.0;
          for (const auto& y : Fx) {
            double best = R - delta;  // lower bound when F(u) misses the box
            bool found = false;
            for (const auto& q : Fu) {
              const double dd = (y - q).norm();
              if (!found || dd < best) best = dd;
              found = true;
            }
            worst = std::max(worst, found ? std::max(0.0, best - lat.step * std::sqrt(double(m))) : best);
          }
          const double ratio = worst / s;
          if (ratio > out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_x = x;
            out.worst_u = u;
          }
        }
    }
  }
  out.bounded = out.worst_ratio <= ell;
  return out;
}

}  // namespace varcalc::oracle
