// SPDX-License-Identifier: Apache-2.0
//
// Reference computations for the test suites. Nothing here calls into the
// library's algorithms; only its value types are shared.
#pragma once

#include "varcalc/common.hpp"

#include <Eigen/Dense>

#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracles {

using varcalc::Vec;
using Fn = std::function<double(const Vec&)>;

// ---------------------------------------------------------------------------
// A second S-expression evaluator, written from the grammar alone.

class SexprEval {
public:
  SexprEval(std::string text, std::vector<std::string> vars) : text_(std::move(text)), vars_(std::move(vars)) {}

  double operator()(const Vec& p) const {
    std::size_t i = 0;
    return eval(i, p);
  }

private:
  std::string text_;
  std::vector<std::string> vars_;

  void skip(std::size_t& i) const {
    while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
  }
  std::string atom(std::size_t& i) const {
    skip(i);
    std::size_t j = i;
    while (j < text_.size() && !std::isspace(static_cast<unsigned char>(text_[j])) && text_[j] != '(' &&
           text_[j] != ')')
      ++j;
    std::string a = text_.substr(i, j - i);
    i = j;
    return a;
  }
  double eval(std::size_t& i, const Vec& p) const {
    skip(i);
    if (text_[i] != '(') {
      const std::string a = atom(i);
      for (std::size_t k = 0; k < vars_.size(); ++k)
        if (vars_[k] == a) return p[static_cast<Eigen::Index>(k)];
      return std::stod(a);
    }
    ++i;
    const std::string op = atom(i);
    std::vector<double> args;
    int exponent = 0;
    for (;;) {
      skip(i);
      if (text_[i] == ')') {
        ++i;
        break;
      }
      if (op == "pow" && args.size() == 1) exponent = std::stoi(atom(i));
      else args.push_back(eval(i, p));
    }
    if (op == "+") {
      double s = 0;
      for (double a : args) s += a;
      return s;
    }
    if (op == "*") {
      double s = 1;
      for (double a : args) s *= a;
      return s;
    }
    if (op == "-") return args.size() == 1 ? -args[0] : args[0] - args[1];
    if (op == "abs") return std::fabs(args[0]);
    if (op == "pow") return std::pow(args[0], exponent);
    if (op == "max") return *std::max_element(args.begin(), args.end());
    if (op == "min") return *std::min_element(args.begin(), args.end());
    throw std::runtime_error("oracle: unknown operator " + op);
  }
};

/// Random S-expression over the given variables with abs/max/min kinks.
inline std::string random_sexpr(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> var(0, static_cast<int>(vars.size()) - 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  if (depth == 0) {
    if (pick(rng) < 7) return vars[static_cast<std::size_t>(var(rng))];
    return std::to_string(coef(rng));
  }
  const auto sub = [&] { return random_sexpr(rng, vars, depth - 1); };
  switch (pick(rng)) {
    case 0:
    case 1: return "(+ " + sub() + " " + sub() + ")";
    case 2: return "(- " + sub() + " " + sub() + ")";
    case 3: return "(* " + std::to_string(coef(rng)) + " " + sub() + ")";
    case 4: return "(abs " + sub() + ")";
    case 5:
    case 6: return "(max " + sub() + " " + sub() + ")";
    case 7: return "(min " + sub() + " " + sub() + ")";
    case 8: return "(* " + sub() + " " + sub() + ")";
    default: return "(- " + sub() + ")";
  }
}

// ---------------------------------------------------------------------------
// Derivatives and subgradients from function values.

inline Vec central_gradient(const Fn& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec e = Vec::Zero(x.size());
    e[i] = h;
    g[i] = (f(x + e) - f(x - e)) / (2 * h);
  }
  return g;
}

/// Gradients at random points of the ball of radius r around x. Near a
/// kink of a piecewise-linear function these are limiting subgradients.
inline std::vector<Vec> nearby_gradients(const Fn& f, const Vec& x, double r, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) {
    Vec d(x.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = n01(rng);
    d *= r / d.norm();
    out.push_back(central_gradient(f, x + d, r * 1e-4));
  }
  return out;
}

/// Smallest value of (f(x + t d) - f(x)) / t - <v, d> over sampled d, t.
/// Nonnegative up to o(1) iff v is a regular subgradient.
inline double regular_defect(const Fn& f, const Vec& x, const Vec& v, double t, int count) {
  double worst = 1e300;
  for (int k = 0; k < count; ++k) {
    Vec d(x.size());
    if (x.size() == 1) {
      d[0] = k % 2 ? 1.0 : -1.0;
    } else {
      const double a = 2 * M_PI * k / count;
      d[0] = std::cos(a);
      d[1] = std::sin(a);
    }
    worst = std::min(worst, (f(x + t * d) - f(x)) / t - v.dot(d));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Convex-set membership by brute force.

/// Convex weights on a lattice of step 1/n over the simplex with m vertices.
inline void for_each_weight(int m, int n, const std::function<void(const std::vector<double>&)>& fn) {
  std::vector<int> c(static_cast<std::size_t>(m), 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == m - 1) {
      c[static_cast<std::size_t>(i)] = left;
      std::vector<double> w;
      for (int k : c) w.push_back(static_cast<double>(k) / n);
      fn(w);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      c[static_cast<std::size_t>(i)] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, n);
}

inline Vec combine(const std::vector<Vec>& pts, const std::vector<double>& w) {
  Vec s = Vec::Zero(pts.front().size());
  for (std::size_t i = 0; i < pts.size(); ++i) s += w[i] * pts[i];
  return s;
}

/// Distance from `t` to conv(pts) over a weight lattice; an upper bound on
/// the true distance.
inline double lattice_distance(const Vec& t, const std::vector<Vec>& pts, int n = 200) {
  double best = 1e300;
  for_each_weight(static_cast<int>(pts.size()), n, [&](const std::vector<double>& w) {
    best = std::min(best, (combine(pts, w) - t).norm());
  });
  return best;
}

/// Support function of conv(pts) in direction a.
inline double support(const std::vector<Vec>& pts, const Vec& a) {
  double s = -1e300;
  for (const auto& p : pts) s = std::max(s, a.dot(p));
  return s;
}

/// Largest separation margin a.t - sup_S a over `dirs` unit directions in
/// the plane (or both signs on the line), where S = conv(base) +
/// sum fixed_i conv(Q_i) + lambda conv(P) (lambda >= 0) + cone(gens).
struct MinkowskiInstance {
  std::vector<Vec> base;
  std::vector<std::pair<double, std::vector<Vec>>> fixed;
  std::vector<std::vector<Vec>> scaled;
  std::vector<Vec> cone;
};

inline double separation_margin(const MinkowskiInstance& in, const Vec& t, int dirs = 20000) {
  const auto dim = t.size();
  double best = -1e300;
  const int count = dim == 1 ? 2 : dirs;
  for (int k = 0; k < count; ++k) {
    Vec a(dim);
    if (dim == 1) {
      a[0] = k == 0 ? 1.0 : -1.0;
    } else {
      const double ang = 2 * M_PI * k / count;
      a[0] = std::cos(ang);
      a[1] = std::sin(ang);
    }
    bool unbounded = false;
    for (const auto& g : in.cone)
      if (a.dot(g) > 1e-12) unbounded = true;
    for (const auto& p : in.scaled)
      if (support(p, a) > 1e-12) unbounded = true;
    if (unbounded) continue;
    double s = support(in.base, a);
    for (const auto& [c, q] : in.fixed) s += c * support(q, a);
    best = std::max(best, a.dot(t) - s);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Value functions by plain enumeration.

/// inf over a uniform grid of y in [lo, hi] of cost(x, y) subject to
/// constraints(x, y) <= tol; +inf when no grid point is feasible.
inline double grid_value(const Fn& cost, const std::vector<Fn>& constraints, double x, double lo, double hi,
                         int n, double tol = 1e-12) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    Vec p(2);
    p << x, lo + (hi - lo) * i / n;
    bool ok = true;
    for (const auto& g : constraints) ok = ok && g(p) <= tol;
    if (ok) best = std::min(best, cost(p));
  }
  return best;
}

/// Nearest point of {z : g(z) <= 0} to `z` within the given radius: the
/// first feasible radius along each of `spokes` rays (scan, then bisection),
/// then a ternary search in angle around the best ray.
inline std::optional<Vec> polar_projection(const std::vector<Fn>& constraints, const Vec& z, double radius,
                                           int steps = 400, int spokes = 720) {
  auto feasible = [&](const Vec& p) {
    for (const auto& g : constraints)
      if (g(p) > 0) return false;
    return true;
  };
  if (feasible(z)) return z;
  auto ray = [&](double ang) {
    const Vec u = (Vec(2) << std::cos(ang), std::sin(ang)).finished();
    for (int k = 1; k <= steps; ++k) {
      double hi = radius * k / steps;
      if (!feasible(z + hi * u)) continue;
      double lo = radius * (k - 1) / steps;
      for (int it = 0; it < 60; ++it) {
        const double mid = (lo + hi) / 2;
        (feasible(z + mid * u) ? hi : lo) = mid;
      }
      return hi;
    }
    return std::numeric_limits<double>::infinity();
  };
  double best_ang = 0, best_r = std::numeric_limits<double>::infinity();
  for (int s = 0; s < spokes; ++s) {
    const double ang = 2 * M_PI * s / spokes;
    const double r = ray(ang);
    if (r < best_r) {
      best_r = r;
      best_ang = ang;
    }
  }
  if (!std::isfinite(best_r)) return std::nullopt;
  double lo = best_ang - 2 * M_PI / spokes, hi = best_ang + 2 * M_PI / spokes;
  for (int it = 0; it < 80; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    if (ray(a) <= ray(b)) hi = b;
    else lo = a;
  }
  const double ang = (lo + hi) / 2;
  const double r = ray(ang);
  if (r > best_r) return z + best_r * (Vec(2) << std::cos(best_ang), std::sin(best_ang)).finished();
  return z + r * (Vec(2) << std::cos(ang), std::sin(ang)).finished();
}

}  // namespace oracles
