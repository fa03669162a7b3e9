// SPDX-License-Identifier: Apache-2.0
#include "varcalc/extremal.hpp"

#include "varcalc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace varcalc::extremal {

namespace {

Vec project(const sets::SetSpec& set, const Vec& z, const Vec& xbar) {
  if (auto w = sets::exact_projection(set, z)) return *w;
  const double reach = (z - xbar).cwiseAbs().maxCoeff();
  if (auto w = oracle::grid_projection(set, z, 2 * std::max(reach, 1e-12), 5e3)) return *w;
  throw InputError("projection grid found no feasible point");
}

struct Objective {
  const std::vector<sets::SetSpec>& sets;
  const Vec& xbar;
  std::vector<Vec> shifts;
  double scale;

  // Evaluated in scaled coordinates x = xbar + scale * u, divided by scale.
  double operator()(const Vec& u) const {
    const Vec x = xbar + scale * u;
    double s = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const Vec z = x + shifts[i];
      s += (z - project(sets[i], z, xbar)).squaredNorm();
    }
    return std::sqrt(s) / scale + scale * u.squaredNorm();
  }
};

Vec gradient(const Objective& f, const Vec& u, double h) {
  Vec g(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    Vec a = u, b = u;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

// BFGS with Armijo backtracking and finite-difference gradients.
Vec minimize(const Objective& f, Vec u) {
  const auto n = u.size();
  Mat H = Mat::Identity(n, n);
  double fu = f(u);
  Vec g = gradient(f, u, 1e-7);
  for (int it = 0; it < 400 && g.norm() > 1e-10; ++it) {
    Vec d = -H * g;
    if (d.dot(g) >= 0) {
      H.setIdentity();
      d = -g;
    }
    double t = 1.0, ft = f(u + d);
    while (ft > fu + 1e-4 * t * g.dot(d) && t > 1e-14) {
      t *= 0.5;
      ft = f(u + t * d);
    }
    if (t <= 1e-14) break;
    const Vec s = t * d;
    u += s;
    const Vec g2 = gradient(f, u, 1e-7);
    const Vec y = g2 - g;
    const double sy = s.dot(y);
    if (sy > 1e-16) {
      const double rho = 1.0 / sy;
      const Mat I = Mat::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const bool stalled = fu - ft <= 1e-13 * (1 + std::abs(fu));
    fu = ft;
    g = g2;
    if (stalled) break;
  }
  return u;
}

}  // namespace

ShiftFn harmonic_shifts(std::vector<Vec> base) {
  return [base = std::move(base)](int k) {
    std::vector<Vec> out;
    for (const auto& b : base) out.push_back(b / static_cast<double>(k));
    return out;
  };
}

std::vector<int> default_schedule() { return {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000}; }

ExtremalTrace extremal_principle_solve(const std::vector<sets::SetSpec>& sets, const Vec& xbar, const ShiftFn& shifts,
                                       const std::vector<int>& ks) {
  if (sets.size() < 2) throw InputError("an extremal system needs at least two sets");
  const int n = static_cast<int>(xbar.size());
  for (const auto& s : sets) {
    if (s.dim() != n) throw InputError("extremal sets must live in the point's space");
    if (!s.contains(xbar)) throw InputError("point is not in every set");
  }
  ExtremalTrace trace;
  for (int k : ks) {
    if (k < 1) throw InputError("iteration indices must be positive");
    Objective f{sets, xbar, shifts(k), 0.0};
    if (f.shifts.size() != sets.size()) throw InputError("need one shift per set");
    for (const auto& a : f.shifts) {
      if (a.size() != n) throw InputError("shift dimension does not match the point");
      f.scale = std::max(f.scale, a.norm());
    }
    if (f.scale == 0.0) f.scale = 1.0;

    // Multi-start over a small lattice in scaled coordinates.
    std::vector<Vec> starts{Vec::Zero(n)};
    for (int i = 0; i < n; ++i)
      for (double s : {-0.5, 0.5}) {
        Vec u = Vec::Zero(n);
        u[i] = s;
        starts.push_back(u);
      }
    Vec best;
    double best_val = std::numeric_limits<double>::infinity();
    for (const auto& u0 : starts) {
      const Vec u = minimize(f, u0);
      const double v = f(u);
      if (v < best_val) {
        best_val = v;
        best = u;
      }
    }

    ExtremalStep step;
    step.k = k;
    step.x = xbar + f.scale * best;
    double s2 = 0.0;
    std::vector<Vec> residuals;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const Vec z = step.x + f.shifts[i];
      step.nearest.push_back(project(sets[i], z, xbar));
      residuals.push_back(z - step.nearest.back());
      s2 += residuals.back().squaredNorm();
    }
    step.gamma = std::sqrt(s2);
    step.objective = step.gamma + (step.x - xbar).squaredNorm();
    if (step.gamma <= 1e-7 * f.scale) {
      trace.gamma_zero = true;
      trace.gamma_zero_at = k;
      trace.diagnostic = "gamma vanished at k = " + std::to_string(k) +
                         ": the shifted sets still intersect, so the shifts do not witness extremality";
      trace.steps.push_back(std::move(step));
      return trace;
    }
    Vec sum = Vec::Zero(n);
    for (const auto& r : residuals) {
      step.normals.push_back(r / step.gamma);
      step.normalization += step.normals.back().squaredNorm();
      sum += step.normals.back();
    }
    step.euler_residual = sum.norm();
    step.fermat_residual = (sum + 2 * (step.x - xbar)).norm();
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

}  // namespace varcalc::extremal
