// SPDX-License-Identifier: Apache-2.0
#include "varcalc/valuefn.hpp"

#include "varcalc/subdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace varcalc::valuefn {

namespace {

constexpr double kMaxGridPoints = 2e6;
constexpr int kZoomAxis = 41;
// Constraint slack on grid points; square-root boundaries turn it into a
// y error of its square root.
constexpr double kFeasTol = 1e-14;

int effective_resolution(int resolution, int y_dim) {
  int r = resolution;
  while (r > 3 && std::pow(static_cast<double>(r), y_dim) > kMaxGridPoints) r = (r - 1) / 2 + 1;
  return r;
}

// Row-major walk over a per-axis lattice.
template <class Visit>
void for_each_point(const Vec& lo, const Vec& step, int per_axis, Visit visit) {
  const auto m = lo.size();
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  Vec y = lo;
  for (;;) {
    visit(y, idx);
    Eigen::Index a = 0;
    while (a < m) {
      if (++idx[static_cast<std::size_t>(a)] < per_axis) {
        y[a] = lo[a] + step[a] * idx[static_cast<std::size_t>(a)];
        break;
      }
      idx[static_cast<std::size_t>(a)] = 0;
      y[a] = lo[a];
      ++a;
    }
    if (a == m) return;
  }
}

struct Evaluator {
  const ParametricProblem& prob;
  Vec z;

  double violation(const Vec& y) {
    z.tail(y.size()) = y;
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& f : prob.constraints) v = std::max(v, f(z));
    return prob.constraints.empty() ? -1.0 : v;
  }
  double cost(const Vec& y) {
    z.tail(y.size()) = y;
    return prob.cost(z);
  }
};


// Certifies that no feasible point lies in [lo, hi] from a lattice whose
// points each exceed their local slope times the spacing, recursing into
// cells where that margin is too thin.
bool certify_empty(Evaluator& ev, const Vec& lo, const Vec& hi, int depth, long& budget) {
  constexpr int axis = 9;
  const auto m = lo.size();
  const Vec step = (hi - lo) / (axis - 1);
  std::vector<double> viol;
  std::vector<Vec> pts;
  for_each_point(lo, step, axis, [&](const Vec& y, const std::vector<int>&) {
    viol.push_back(ev.violation(y));
    pts.push_back(y);
  });
  budget -= static_cast<long>(viol.size());
  std::size_t stride = 1;
  std::vector<std::size_t> strides;
  for (Eigen::Index a = 0; a < m; ++a) {
    strides.push_back(stride);
    stride *= axis;
  }
  for (std::size_t i = 0; i < viol.size(); ++i) {
    if (viol[i] <= kFeasTol) return false;
    double slope = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      if (step[a] == 0) continue;
      const std::size_t st = strides[static_cast<std::size_t>(a)];
      const auto pos = (i / st) % axis;
      if (pos > 0) slope = std::max(slope, std::abs(viol[i] - viol[i - st]) / step[a]);
      if (pos + 1 < axis) slope = std::max(slope, std::abs(viol[i + st] - viol[i]) / step[a]);
    }
    if (viol[i] > 2 * slope * step.norm()) continue;
    if (depth == 0 || budget <= 0) return false;
    const Vec a = pts[i] - step, b = pts[i] + step;
    if (!certify_empty(ev, a.cwiseMax(lo), b.cwiseMin(hi), depth - 1, budget)) return false;
  }
  return true;
}

}  // namespace

void ParametricProblem::validate() const {
  if (x_dim < 1) throw InputError("parametric problem needs at least one parameter");
  if (y_dim() < 1) throw InputError("parametric problem needs at least one decision variable");
  for (const auto& f : constraints)
    if (!(f.space() == cost.space())) throw InputError("lower-level functions use different variable spaces");
}

sets::SetSpec ParametricProblem::graph() const {
  if (constraints.empty()) return sets::SetSpec::graph(x_dim, {expr::FunctionDef(cost.space(), expr::constant(-1))});
  return sets::SetSpec::graph(x_dim, constraints);
}

void GridSpec::validate(int y_dim) const {
  if (static_cast<int>(y_box.size()) != y_dim)
    throw InputError("grid box has " + std::to_string(y_box.size()) + " intervals, expected " +
                     std::to_string(y_dim));
  for (const auto& [lo, hi] : y_box)
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) throw InputError("grid box bounds must be finite with lower < upper");
  if (resolution < 3) throw InputError("grid resolution must be at least 3");
  if (!(x_stencil_radius > 0) || x_stencil_count < 1) throw InputError("stencil radius and count must be positive");
}

double GridSpec::step() const {
  const int r = effective_resolution(resolution, static_cast<int>(y_box.size()));
  double h = 0.0;
  for (const auto& [lo, hi] : y_box) h = std::max(h, (hi - lo) / (r - 1));
  return h;
}

ValueSample evaluate_value(const ParametricProblem& prob, const Vec& x, const GridSpec& grid) {
  prob.validate();
  const int m = prob.y_dim();
  grid.validate(m);
  if (x.size() != prob.x_dim) throw InputError("parameter has dimension " + std::to_string(x.size()) +
                                               ", expected " + std::to_string(prob.x_dim));
  Evaluator ev{prob, Vec::Zero(prob.x_dim + m)};
  ev.z.head(prob.x_dim) = x;

  const int r = effective_resolution(grid.resolution, m);
  Vec lo(m), hi(m), h(m);
  for (int a = 0; a < m; ++a) {
    lo[a] = grid.y_box[static_cast<std::size_t>(a)].first;
    hi[a] = grid.y_box[static_cast<std::size_t>(a)].second;
    h[a] = (grid.y_box[static_cast<std::size_t>(a)].second - lo[a]) / (r - 1);
  }

  ValueSample out;
  out.x = x;
  struct Hit {
    double value;
    Vec y;
  };
  std::vector<Hit> feasible;
  std::vector<double> viol;
  viol.reserve(static_cast<std::size_t>(std::pow(r, m)));
  for_each_point(lo, h, r, [&](const Vec& y, const std::vector<int>&) {
    const double v = ev.violation(y);
    viol.push_back(v);
    ++out.evaluations;
    if (v <= kFeasTol) feasible.push_back({ev.cost(y), y});
  });

  auto zoom = [&](Vec center, auto on_point) {
    Vec step = h;
    for (int level = 0; level < kZoomLevels; ++level) {
      const Vec fine = step / ((kZoomAxis - 1) / 2);
      Vec best_y = center;
      double best = std::numeric_limits<double>::infinity();
      for_each_point(center - step, fine, kZoomAxis, [&](const Vec& y, const std::vector<int>&) {
        ++out.evaluations;
        const double s = on_point(y);
        if (s < best) {
          best = s;
          best_y = y;
        }
      });
      center = best_y;
      step = fine;
    }
    out.final_step = step.maxCoeff();
  };

  if (feasible.empty()) {
    // Search near the least violated grid points before giving up.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < viol.size(); ++i)
      if (viol[i] < viol[arg]) arg = i;
    Vec y = lo;
    std::size_t rem = arg;
    for (int a = 0; a < m; ++a) {
      y[a] += h[a] * static_cast<double>(rem % static_cast<std::size_t>(r));
      rem /= static_cast<std::size_t>(r);
    }
    zoom(y, [&](const Vec& q) {
      const double v = ev.violation(q);
      if (v <= kFeasTol) feasible.push_back({ev.cost(q), q});
      return v;
    });
    if (feasible.empty()) {
      // Each grid point vouches for its cell when its violation exceeds the
      // local neighbour slope times the cell diagonal.
      bool certified = true;
      long budget = 200000;
      std::size_t stride_of[8] = {1};
      for (int a = 1; a < m; ++a) stride_of[a] = stride_of[a - 1] * static_cast<std::size_t>(r);
      for (std::size_t i = 0; i < viol.size() && certified; ++i) {
        double slope = 0.0;
        for (int a = 0; a < m; ++a) {
          const std::size_t st = stride_of[a];
          const auto pos = (i / st) % static_cast<std::size_t>(r);
          if (pos > 0) slope = std::max(slope, std::abs(viol[i] - viol[i - st]) / h[a]);
          if (pos + 1 < static_cast<std::size_t>(r)) slope = std::max(slope, std::abs(viol[i + st] - viol[i]) / h[a]);
        }
        if (viol[i] > 2 * slope * h.norm()) continue;
        Vec c = lo;
        std::size_t rem = i;
        for (int a = 0; a < m; ++a) {
          c[a] += h[a] * static_cast<double>(rem % static_cast<std::size_t>(r));
          rem /= static_cast<std::size_t>(r);
        }
        const Vec a = c - h, b = c + h;
        if (!certify_empty(ev, a.cwiseMax(lo), b.cwiseMin(hi), 4, budget)) certified = false;
      }
      const double margin = viol[arg];
      throw InfeasibleError(std::string(certified ? "certified empty on box" : "grid too coarse") +
                                ": no feasible y at x = " + format_vec(x) + " (smallest constraint value " +
                                format_number(margin) + ")",
                            certified, margin);
    }
  }

  std::sort(feasible.begin(), feasible.end(), [](const Hit& a, const Hit& b) {
    return a.value < b.value || (a.value == b.value && lex_less(a.y, b.y));
  });
  // Zoom around distinct near-best grid points.
  std::vector<Vec> centers;
  const double theta0 = feasible.front().value;
  double cost_slope = 0.0;
  for (std::size_t i = 1; i < feasible.size() && i < 64; ++i) {
    const double d = (feasible[i].y - feasible.front().y).norm();
    if (d > 0) cost_slope = std::max(cost_slope, std::abs(feasible[i].value - theta0) / d);
  }
  const double slack = std::max(tol::arg, 2 * cost_slope * h.norm());
  for (const auto& f : feasible) {
    if (f.value > theta0 + slack || static_cast<int>(centers.size()) >= kZoomCenters) break;
    bool near = false;
    for (const auto& c : centers)
      if (((c - f.y).cwiseAbs().array() <= 2 * h.array()).all()) near = true;
    if (!near) centers.push_back(f.y);
  }
  std::vector<Hit> zoomed;
  for (const auto& c : centers)
    zoom(c, [&](const Vec& q) {
      if (ev.violation(q) > kFeasTol) return std::numeric_limits<double>::infinity();
      const double v = ev.cost(q);
      zoomed.push_back({v, q});
      return v;
    });
  if (centers.empty()) out.final_step = h.maxCoeff();

  double theta = theta0;
  for (const auto& z : zoomed) theta = std::min(theta, z.value);
  out.theta = theta;
  for (const auto* list : {&feasible, &zoomed})
    for (const auto& f : *list)
      if (f.value <= theta + tol::arg) out.argmins.push_back(f.y);
  std::sort(out.argmins.begin(), out.argmins.end(), lex_less);
  out.argmins.erase(std::unique(out.argmins.begin(), out.argmins.end(),
                                [](const Vec& a, const Vec& b) { return (a - b).cwiseAbs().maxCoeff() == 0.0; }),
                    out.argmins.end());
  return out;
}

std::optional<ValueSample> sample_in_domain(const ParametricProblem& prob, const Vec& x, const GridSpec& grid) {
  try {
    return evaluate_value(prob, x, grid);
  } catch (const InfeasibleError& e) {
    if (e.certified_empty()) return std::nullopt;
    throw;
  }
}

std::vector<Vec> x_stencil(const Vec& xbar, double radius, int count, std::uint64_t seed) {
  std::vector<Vec> out{xbar};
  const auto dirs = sampling::directions(static_cast<int>(xbar.size()), count, seed);
  for (double s : {radius, radius / 2})
    for (const auto& d : dirs) out.push_back(xbar + s * d);
  return out;
}

IscProbe inner_semicontinuity_probe(const ParametricProblem& prob, const Vec& xbar, const Vec& ybar,
                                    const GridSpec& grid, const SampleParams& params) {
  params.validate();
  const auto base = evaluate_value(prob, xbar, grid);
  if (ybar.size() != prob.y_dim()) throw InputError("argmin candidate has the wrong dimension");
  Vec z(xbar.size() + ybar.size());
  z << xbar, ybar;
  for (const auto& f : prob.constraints)
    if (f(z) > tol::geom) throw InputError("candidate y is not feasible at the base parameter");
  if (prob.cost(z) > base.theta + tol::arg)
    throw InputError("candidate y is not a lower-level minimizer (cost " + format_number(prob.cost(z)) +
                     ", optimal value " + format_number(base.theta) + ")");

  IscProbe probe;
  probe.threshold = 10 * grid.step();
  probe.worst_x = xbar;
  const auto dirs = sampling::directions(prob.x_dim, grid.x_stencil_count, params.seed);
  double last = 0.0;
  for (double r : params.radii) {
    double worst = 0.0;
    for (const auto& d : dirs) {
      const Vec x = xbar + r * d;
      const auto s = sample_in_domain(prob, x, grid);
      if (!s) {
        ++probe.outside_domain;
        continue;
      }
      double dist = std::numeric_limits<double>::infinity();
      for (const auto& a : s->argmins) dist = std::min(dist, (a - ybar).norm());
      worst = std::max(worst, dist);
      if (dist > probe.worst_distance) {
        probe.worst_distance = dist;
        probe.worst_x = x;
      }
    }
    probe.by_radius.emplace_back(r, worst);
    last = worst;
  }
  probe.passes = last <= probe.threshold;
  return probe;
}

namespace {

void require_isc(const IscProbe& isc, bool override_isc) {
  if (isc.passes || override_isc) return;
  throw RefusalError("inner semicontinuity probe failed: argmin set at x = " + format_vec(isc.worst_x) +
                     " stays " + format_number(isc.worst_distance) + " away (threshold " +
                     format_number(isc.threshold) + ")");
}

Vec joint(const Vec& x, const Vec& y) {
  Vec z(x.size() + y.size());
  z << x, y;
  return z;
}

}  // namespace

ValueEstimate value_subdiff_estimate(const ParametricProblem& prob, const Vec& xbar, const Vec& ybar,
                                     const GridSpec& grid, const SampleParams& params, bool override_isc) {
  ValueEstimate est;
  est.isc = inner_semicontinuity_probe(prob, xbar, ybar, grid, params);
  est.isc_overridden = !est.isc.passes && override_isc;
  require_isc(est.isc, override_isc);

  const auto graph = prob.graph();
  const Vec point = joint(xbar, ybar);
  est.graph_cone = normal::normal_cone(graph, point, params);
  est.graph_cone.require();
  const auto cost_sub = subdiff::basic_subdifferential(prob.cost, point, params);
  for (const auto& part : cost_sub.parts())
    for (auto& piece : normal::coderivative_image(graph, est.graph_cone, part)) {
      bool dup = false;
      for (const auto& q : est.basic)
        if (geom::contains(q, piece)) dup = true;
      if (!dup) est.basic.push_back(std::move(piece));
    }
  est.singular = normal::coderivative(graph, est.graph_cone, Vec::Zero(prob.y_dim()));
  return est;
}

LipschitzVerdict lipschitz_verdict(const ParametricProblem& prob, const Vec& xbar, const Vec& ybar,
                                   const GridSpec& grid, const SampleParams& params, bool override_isc) {
  LipschitzVerdict v;
  v.isc = inner_semicontinuity_probe(prob, xbar, ybar, grid, params);
  v.isc_overridden = !v.isc.passes && override_isc;
  require_isc(v.isc, override_isc);

  const auto check = normal::lipschitz_like_check(prob.graph(), joint(xbar, ybar), params);
  v.lipschitz = check.lipschitz_like;
  v.at_zero = check.at_zero;

  const auto pts = x_stencil(xbar, grid.x_stencil_radius, grid.x_stencil_count, params.seed);
  std::vector<std::optional<double>> th;
  for (const auto& p : pts) {
    const auto s = sample_in_domain(prob, p, grid);
    th.push_back(s ? std::optional<double>(s->theta) : std::nullopt);
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (!th[i] || !th[j]) continue;
      const double d = (pts[i] - pts[j]).norm();
      if (d > 0) v.modulus = std::max(v.modulus, std::abs(*th[i] - *th[j]) / d);
    }
  return v;
}

}  // namespace varcalc::valuefn
