// SPDX-License-Identifier: Apache-2.0
#include "varcalc/bilevel.hpp"

#include "varcalc/lp.hpp"
#include "varcalc/oracle.hpp"
#include "varcalc/subdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace varcalc::bilevel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuotientSlack = 1e-5;
constexpr std::size_t kMaxViolations = 16;

const char* kCaveat =
    "certificates check necessary conditions at the candidate only; local solutions of the value-function "
    "reformulation match those of the bilevel program only under inner semicontinuity of the solution map";

// Odometer walk; `visit` returns true to stop.
template <class Visit>
std::size_t for_each_combination(const std::vector<std::size_t>& sizes, Visit visit) {
  std::size_t total = 1;
  for (auto s : sizes) {
    if (s == 0) return 0;
    total *= s;
    if (total > kMaxCombinations)
      throw std::length_error("certificate search needs more than 4096 branch combinations");
  }
  std::vector<std::size_t> pick(sizes.size(), 0);
  std::size_t seen = 0;
  for (;;) {
    ++seen;
    if (visit(pick)) return seen;
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == sizes[i]) pick[i++] = 0;
    if (i == pick.size()) return seen;
  }
}

Vec joint(const Vec& x, const Vec& y) {
  Vec z(x.size() + y.size());
  z << x, y;
  return z;
}

bool active(double v) { return std::abs(v) <= tol::geom; }

// Vector equations sum_k terms_k = 0, one LP row per coordinate.
class EquationLp {
public:
  EquationLp(int equations, int dim) : rows_(static_cast<std::size_t>(equations), Rows(static_cast<std::size_t>(dim))) {}

  lp::LPProblem lp;

  struct Hull {
    int eq = 0;
    int first = 0;
    geom::Polytope set;
    int offset = 0;
    double sign = 1.0;
  };

  // Weights over the vertices of `set`, placed at coordinates offset.. of
  // equation `eq`. The weight sum is 1, `fixed`, or the variable `scale`.
  int add_hull(int eq, const geom::Polytope& set, int offset, double sign, std::optional<int> scale,
               double fixed = 1.0) {
    Hull h{eq, static_cast<int>(lp.num_variables()), set, offset, sign};
    std::vector<std::pair<int, double>> sum;
    for (const auto& v : set.vertices()) {
      const int w = lp.add_variable();
      sum.push_back({w, 1.0});
      for (Eigen::Index c = 0; c < v.size(); ++c)
        if (v[c] != 0.0) row(eq, offset + static_cast<int>(c)).push_back({w, sign * v[c]});
    }
    if (scale) {
      sum.push_back({*scale, -1.0});
      lp.add_row(std::move(sum), lp::Sense::Equal, 0.0);
    } else {
      lp.add_row(std::move(sum), lp::Sense::Equal, fixed);
    }
    hulls_.push_back(std::move(h));
    return static_cast<int>(hulls_.size()) - 1;
  }

  void add_term(int eq, int coord, int var, double coef) { row(eq, coord).push_back({var, coef}); }

  void close() {
    for (auto& eq : rows_)
      for (auto& r : eq)
        if (!r.empty()) lp.add_row(std::move(r), lp::Sense::Equal, 0.0);
  }

  // Point of hull `h` picked by the weights, divided by the weight sum.
  Vec point(int h, const std::vector<double>& x) const {
    const auto& hull = hulls_[static_cast<std::size_t>(h)];
    Vec p = Vec::Zero(hull.set.dim());
    double s = 0.0;
    for (std::size_t k = 0; k < hull.set.vertices().size(); ++k) {
      const double w = x[static_cast<std::size_t>(hull.first) + k];
      p += w * hull.set.vertices()[k];
      s += w;
    }
    return s > 0 ? Vec(p / s) : Vec(hull.set.vertices().front());
  }

  // Sum of the weighted hull contributions of `eq`.
  Vec contribution(int eq, int dim, const std::vector<double>& x) const {
    Vec out = Vec::Zero(dim);
    for (const auto& hull : hulls_) {
      if (hull.eq != eq) continue;
      for (std::size_t k = 0; k < hull.set.vertices().size(); ++k)
        out.segment(hull.offset, hull.set.dim()) +=
            hull.sign * x[static_cast<std::size_t>(hull.first) + k] * hull.set.vertices()[k];
    }
    return out;
  }

private:
  using Rows = std::vector<std::vector<std::pair<int, double>>>;
  std::vector<Rows> rows_;
  std::vector<Hull> hulls_;

  std::vector<std::pair<int, double>>& row(int eq, int coord) {
    return rows_[static_cast<std::size_t>(eq)][static_cast<std::size_t>(coord)];
  }
};

geom::Polytope hull_of(const geom::PolytopeUnion& u) { return geom::Polytope(u.dim(), u.all_vertices()); }

geom::Polytope padded(const geom::Polytope& p, int dim) {
  std::vector<Vec> vs;
  for (const auto& v : p.vertices()) {
    Vec w = Vec::Zero(dim);
    w.head(v.size()) = v;
    vs.push_back(w);
  }
  return geom::Polytope(dim, std::move(vs));
}

geom::PolytopeUnion project_tail(const geom::PolytopeUnion& u, int tail) {
  std::vector<geom::Polytope> parts;
  for (const auto& p : u.parts()) {
    std::vector<Vec> vs;
    for (const auto& v : p.vertices()) vs.push_back(v.tail(tail));
    parts.emplace_back(tail, std::move(vs));
  }
  return geom::PolytopeUnion(tail, std::move(parts));
}

struct Candidate {
  Vec point;
  double theta = 0.0;
  std::vector<double> lower_values;
  std::vector<double> upper_values;
};

Candidate check_candidate(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar, const valuefn::GridSpec& grid) {
  bp.validate();
  if (xbar.size() != bp.x_dim || ybar.size() != bp.y_dim()) throw InputError("candidate dimension mismatch");
  grid.validate(bp.y_dim());
  Candidate c;
  c.point = joint(xbar, ybar);
  for (const auto& f : bp.lower_constraints) {
    c.lower_values.push_back(f(c.point));
    if (c.lower_values.back() > tol::geom) throw InputError("candidate violates a lower-level constraint");
  }
  for (const auto& g : bp.upper_constraints) {
    c.upper_values.push_back(g(xbar));
    if (c.upper_values.back() > tol::geom) throw InputError("candidate violates an upper-level constraint");
  }
  c.theta = valuefn::evaluate_value(bp.lower_problem(), xbar, grid).theta;
  if (bp.lower_cost(c.point) > c.theta + tol::arg)
    throw InputError("candidate y is not a lower-level minimizer: lower cost " +
                     format_number(bp.lower_cost(c.point)) + " exceeds optimal value " + format_number(c.theta));
  return c;
}

std::vector<int> active_indices(const std::vector<double>& values) {
  std::vector<int> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (active(values[i])) out.push_back(static_cast<int>(i));
  return out;
}

std::string failing_list(const std::vector<Hypothesis>& hs) {
  std::string s;
  for (const auto& h : hs)
    if (!h.holds && !h.overridden) s += (s.empty() ? "" : ", ") + h.name;
  return s;
}

}  // namespace

const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::Kkt: return "kkt";
    case Theorem::Convexified: return "convexified";
    case Theorem::Regular: return "regular";
  }
  return "?";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::NoCertificate: return "no_certificate";
    case Verdict::HypothesisFailure: return "hypothesis_failure";
  }
  return "?";
}

double Certificate::max_residual() const {
  double r = 0.0;
  for (const auto& [name, v] : residuals) r = std::max(r, v);
  return r;
}

void BilevelProblem::validate() const {
  if (x_dim < 1) throw InputError("bilevel problem needs at least one upper-level variable");
  if (y_dim() < 1) throw InputError("bilevel problem needs at least one lower-level variable");
  const auto& space = lower_cost.space();
  if (!(upper_cost.space() == space)) throw InputError("upper cost must use the joint (x, y) variables");
  for (const auto& f : lower_constraints)
    if (!(f.space() == space)) throw InputError("lower-level constraints must use the joint (x, y) variables");
  const std::vector<std::string> xs(space.names().begin(), space.names().begin() + x_dim);
  for (const auto& g : upper_constraints)
    if (g.space().names() != xs) throw InputError("upper-level constraints must use the x variables only");
}

valuefn::ParametricProblem BilevelProblem::lower_problem() const {
  return {lower_cost, lower_constraints, x_dim};
}

// ---------------------------------------------------------------------------
// Lipschitz programs

std::optional<Dependence> positive_dependence(const std::vector<geom::PolytopeUnion>& subdiffs) {
  if (subdiffs.empty()) return std::nullopt;
  const int dim = subdiffs.front().dim();
  std::vector<std::size_t> sizes;
  for (const auto& s : subdiffs) sizes.push_back(s.parts().size());
  std::optional<Dependence> found;
  for_each_combination(sizes, [&](const std::vector<std::size_t>& pick) {
    EquationLp e(1, dim);
    std::vector<int> scales, hulls;
    for (std::size_t i = 0; i < subdiffs.size(); ++i) {
      scales.push_back(e.lp.add_variable());
      hulls.push_back(e.add_hull(0, subdiffs[i].parts()[pick[i]], 0, 1.0, scales.back()));
    }
    std::vector<std::pair<int, double>> norm;
    for (int s : scales) norm.push_back({s, 1.0});
    e.lp.add_row(std::move(norm), lp::Sense::Equal, 1.0);
    e.close();
    const auto r = lp::solve(e.lp);
    if (!r.feasible()) return false;
    Dependence d;
    for (std::size_t i = 0; i < scales.size(); ++i) {
      d.weights.push_back(r.x[static_cast<std::size_t>(scales[i])]);
      d.subgradients.push_back(e.point(hulls[i], r.x));
      d.branches.push_back(static_cast<int>(pick[i]));
    }
    found = std::move(d);
    return true;
  });
  return found;
}

KktReport kkt_from_subdifferentials(const geom::PolytopeUnion& objective,
                                    const std::vector<geom::PolytopeUnion>& constraints,
                                    const std::vector<double>& values) {
  if (values.size() != constraints.size()) throw InputError("one value per constraint is required");
  const int dim = objective.dim();
  const auto act = active_indices(values);
  KktReport rep;
  std::vector<geom::PolytopeUnion> active_sets;
  for (int i : act) active_sets.push_back(constraints[static_cast<std::size_t>(i)]);
  rep.mfcq_witness = positive_dependence(active_sets);
  rep.mfcq_holds = !rep.mfcq_witness;

  std::vector<std::size_t> sizes{objective.parts().size()};
  for (const auto& s : active_sets) sizes.push_back(s.parts().size());
  rep.margin = kInf;
  for (bool fixed_objective : {true, false}) {
    rep.combinations += for_each_combination(sizes, [&](const std::vector<std::size_t>& pick) {
      EquationLp e(1, dim);
      int l0 = -1;
      if (!fixed_objective) l0 = e.lp.add_variable();
      e.add_hull(0, objective.parts()[pick[0]], 0, 1.0, fixed_objective ? std::nullopt : std::optional<int>(l0));
      std::vector<int> lam;
      for (std::size_t k = 0; k < act.size(); ++k) {
        lam.push_back(e.lp.add_variable());
        e.add_hull(0, active_sets[k].parts()[pick[k + 1]], 0, 1.0, lam.back());
      }
      std::vector<std::pair<int, double>> obj;
      for (int v : lam) obj.push_back({v, 1.0});
      if (!fixed_objective) {
        auto norm = obj;
        norm.push_back({l0, 1.0});
        e.lp.add_row(std::move(norm), lp::Sense::Equal, 1.0);
      }
      e.lp.set_objective(obj);
      e.close();
      const auto r = lp::solve(e.lp);
      if (!r.feasible()) {
        if (r.status == lp::Status::Infeasible) rep.margin = std::min(rep.margin, r.infeasibility);
        return false;
      }
      Certificate c;
      c.theorem = Theorem::Kkt;
      c.lambda0 = fixed_objective ? 1.0 : r.x[static_cast<std::size_t>(l0)];
      c.lambda.assign(constraints.size(), 0.0);
      for (std::size_t k = 0; k < act.size(); ++k)
        c.lambda[static_cast<std::size_t>(act[k])] = r.x[static_cast<std::size_t>(lam[k])];
      for (std::size_t k = 0; k < pick.size(); ++k) {
        c.branches.push_back(static_cast<int>(pick[k]));
        c.branch_labels.push_back(k == 0 ? "objective" : "constraint " + std::to_string(act[k - 1] + 1));
      }
      double comp = 0.0, sign = std::max(0.0, -c.lambda0);
      for (std::size_t i = 0; i < values.size(); ++i) {
        comp = std::max(comp, std::abs(c.lambda[i] * values[i]));
        sign = std::max(sign, -c.lambda[i]);
      }
      double total = c.lambda0;
      for (double l : c.lambda) total += l;
      c.residuals = {{"lagrangian_inclusion", e.contribution(0, dim, r.x).cwiseAbs().maxCoeff()},
                     {"complementary_slackness", comp},
                     {"sign", sign},
                     {"nontriviality", total > 0 ? 0.0 : 1.0}};
      rep.certificate = std::move(c);
      return true;
    });
    if (rep.certificate) break;
  }
  if (rep.certificate) rep.margin = 0.0;
  if (!std::isfinite(rep.margin)) rep.margin = 0.0;
  return rep;
}

KktReport check_lipschitz_kkt(const LipschitzProgram& prog, const Vec& x, const SampleParams& params) {
  if (x.size() != static_cast<Eigen::Index>(prog.objective.dim())) throw InputError("point dimension mismatch");
  std::vector<double> values;
  std::vector<geom::PolytopeUnion> subs;
  for (const auto& f : prog.constraints) {
    if (!(f.space() == prog.objective.space())) throw InputError("constraints must share the objective's variables");
    values.push_back(f(x));
    if (values.back() > tol::geom) throw InputError("point violates constraint: value " + format_number(values.back()));
    subs.push_back(active(values.back()) ? subdiff::basic_subdifferential(f, x, params)
                                         : geom::PolytopeUnion(static_cast<int>(x.size()), {}));
  }
  return kkt_from_subdifferentials(subdiff::basic_subdifferential(prog.objective, x, params), subs, values);
}

// ---------------------------------------------------------------------------
// Penalization and calmness

double PenalizedProgram::penalty(const Vec& xy) const {
  return lower_cost(xy) - theta(xy.head(x_dim));
}

double PenalizedProgram::objective(const Vec& xy) const { return smooth_part.objective(xy) - kappa * theta(xy.head(x_dim)); }

bool PenalizedProgram::feasible(const Vec& xy) const {
  for (const auto& f : smooth_part.constraints)
    if (f(xy) > tol::geom) return false;
  return true;
}

PenalizedProgram build_penalized(const BilevelProblem& bp, double kappa, const valuefn::GridSpec& grid) {
  bp.validate();
  if (!(kappa > 0) || !std::isfinite(kappa)) throw InputError("penalty constant must be positive");
  grid.validate(bp.y_dim());
  using expr::Op;
  PenalizedProgram p;
  p.kappa = kappa;
  p.x_dim = bp.x_dim;
  p.lower_cost = bp.lower_cost;
  const auto& space = bp.lower_cost.space();
  p.smooth_part.objective = expr::FunctionDef(
      space, expr::make(Op::Add, {bp.upper_cost.root(),
                                  expr::make(Op::Mul, {expr::constant(kappa), bp.lower_cost.root()})}));
  for (const auto& g : bp.upper_constraints) p.smooth_part.constraints.push_back(g.embed(space, 0));
  for (const auto& f : bp.lower_constraints) p.smooth_part.constraints.push_back(f);
  auto lower = bp.lower_problem();
  p.theta = [lower, grid](const Vec& x) { return valuefn::evaluate_value(lower, x, grid).theta; };
  return p;
}

GridMinimum penalized_grid_search(const PenalizedProgram& prog, const std::vector<std::pair<double, double>>& x_box,
                                  const std::vector<std::pair<double, double>>& y_box, double step) {
  if (!(step > 0)) throw InputError("grid step must be positive");
  std::vector<std::pair<double, double>> box = x_box;
  box.insert(box.end(), y_box.begin(), y_box.end());
  const auto n = static_cast<Eigen::Index>(box.size());
  std::vector<int> counts;
  double total = 1.0;
  for (const auto& [lo, hi] : box) {
    if (!(lo <= hi)) throw InputError("search box bounds must satisfy lower <= upper");
    counts.push_back(static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1);
    total *= counts.back();
  }
  if (total > 5e7) throw InputError("penalized grid search exceeds 5e7 points");

  std::map<std::vector<int>, std::optional<double>> theta_cache;
  GridMinimum best;
  best.value = kInf;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vec p(n);
  for (;;) {
    for (Eigen::Index a = 0; a < n; ++a)
      p[a] = box[static_cast<std::size_t>(a)].first + step * idx[static_cast<std::size_t>(a)];
    if (prog.feasible(p)) {
      const std::vector<int> xkey(idx.begin(), idx.begin() + prog.x_dim);
      auto it = theta_cache.find(xkey);
      if (it == theta_cache.end()) {
        std::optional<double> th;
        try {
          th = prog.theta(p.head(prog.x_dim));
        } catch (const valuefn::InfeasibleError&) {
        }
        it = theta_cache.emplace(xkey, th).first;
      }
      if (it->second) {
        ++best.feasible_points;
        const double v = prog.smooth_part.objective(p) - prog.kappa * *it->second;
        if (v < best.value - 1e-12) {
          best.value = v;
          best.point = p;
        }
      }
    }
    std::size_t a = 0;
    while (a < idx.size() && ++idx[a] == counts[a]) idx[a++] = 0;
    if (a == idx.size()) break;
  }
  if (best.feasible_points == 0) throw InputError("no feasible lattice point for the penalized program");
  return best;
}

std::vector<double> default_kappa_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(std::ldexp(1.0, k));
  return g;
}

CalmnessReport partial_calmness_probe(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar,
                                      const std::vector<double>& kappa_grid, const valuefn::GridSpec& grid,
                                      const SampleParams& params) {
  params.validate();
  const auto cand = check_candidate(bp, xbar, ybar, grid);
  for (double k : kappa_grid)
    if (!(k > 0)) throw InputError("penalty constants must be positive");
  const auto lower = bp.lower_problem();
  const double psi0 = bp.upper_cost(cand.point);
  const int n = bp.x_dim, dim = n + bp.y_dim();

  CalmnessReport rep;
  rep.kappa_grid = kappa_grid;
  std::sort(rep.kappa_grid.begin(), rep.kappa_grid.end());
  rep.radii = params.radii;
  struct Sample {
    Vec point;
    double dpsi, nu;
  };
  std::vector<Sample> samples;
  const auto dirs = sampling::directions(dim, params.dirs_per_radius, params.seed);
  for (double r : params.radii)
    for (const auto& d : dirs) {
      ++rep.samples;
      const Vec p = cand.point + r * d;
      bool ok = true;
      for (const auto& f : bp.lower_constraints) ok = ok && f(p) <= tol::geom;
      for (const auto& g : bp.upper_constraints) ok = ok && g(p.head(n)) <= tol::geom;
      if (!ok) continue;
      const auto s = valuefn::sample_in_domain(lower, p.head(n), grid);
      if (!s) continue;
      ++rep.feasible_samples;
      samples.push_back({p, bp.upper_cost(p) - psi0, s->theta - bp.lower_cost(p)});
    }
  for (double k : rep.kappa_grid) {
    std::vector<CalmnessViolation> bad;
    for (const auto& s : samples) {
      const double m = s.dpsi + k * std::abs(s.nu);
      if (m < -tol::lp * (1 + k)) bad.push_back({s.point, s.nu, m});
    }
    if (bad.empty()) {
      rep.kappa_validated = k;
      rep.violations.clear();
      break;
    }
    std::sort(bad.begin(), bad.end(), [](const auto& a, const auto& b) { return a.margin < b.margin; });
    if (bad.size() > kMaxViolations) bad.resize(kMaxViolations);
    rep.violations = std::move(bad);
  }
  return rep;
}

RegularityReport regularity_check(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar,
                                  const SampleParams& params) {
  bp.validate();
  const Vec p = joint(xbar, ybar);
  RegularityReport rep;
  std::vector<geom::PolytopeUnion> lower, upper;
  for (std::size_t i = 0; i < bp.lower_constraints.size(); ++i) {
    const auto& f = bp.lower_constraints[i];
    if (!active(f(p))) continue;
    rep.lower.active.push_back(static_cast<int>(i));
    lower.push_back(project_tail(subdiff::basic_subdifferential(f, p, params), bp.y_dim()));
  }
  for (std::size_t j = 0; j < bp.upper_constraints.size(); ++j) {
    const auto& g = bp.upper_constraints[j];
    if (!active(g(xbar))) continue;
    rep.upper.active.push_back(static_cast<int>(j));
    upper.push_back(subdiff::basic_subdifferential(g, xbar, params));
  }
  rep.lower.witness = positive_dependence(lower);
  rep.lower.regular = !rep.lower.witness;
  rep.upper.witness = positive_dependence(upper);
  rep.upper.regular = !rep.upper.witness;
  return rep;
}

std::optional<geom::Polytope> regular_value_subdiff(const valuefn::ParametricProblem& lower, const Vec& xbar,
                                                    const valuefn::GridSpec& grid, const SampleParams& params) {
  const double theta0 = valuefn::evaluate_value(lower, xbar, grid).theta;
  const auto fn = [&](const Vec& x) {
    if (auto s = valuefn::sample_in_domain(lower, x, grid)) return s->theta;
    return theta0 + tol::cone_radius * (x - xbar).norm();
  };
  const auto dirs = sampling::directions(lower.x_dim, params.dirs_per_radius, params.seed);
  return oracle::quotient_polytope(fn, xbar, {grid.x_stencil_radius, grid.x_stencil_radius / 2}, kQuotientSlack,
                                   dirs);
}

// ---------------------------------------------------------------------------
// Bilevel certificates

namespace {

struct Subdiffs {
  geom::PolytopeUnion lower_cost, upper_cost;
  std::vector<geom::PolytopeUnion> lower;  // active only
  std::vector<geom::PolytopeUnion> upper;  // active only, x space
  std::vector<int> lower_active, upper_active;
};

Subdiffs subdiffs_at(const BilevelProblem& bp, const Candidate& c, const SampleParams& params) {
  Subdiffs s;
  s.lower_cost = subdiff::basic_subdifferential(bp.lower_cost, c.point, params);
  s.upper_cost = subdiff::basic_subdifferential(bp.upper_cost, c.point, params);
  s.lower_active = active_indices(c.lower_values);
  s.upper_active = active_indices(c.upper_values);
  for (int i : s.lower_active)
    s.lower.push_back(subdiff::basic_subdifferential(bp.lower_constraints[static_cast<std::size_t>(i)], c.point, params));
  const Vec xbar = c.point.head(bp.x_dim);
  for (int j : s.upper_active)
    s.upper.push_back(subdiff::basic_subdifferential(bp.upper_constraints[static_cast<std::size_t>(j)], xbar, params));
  return s;
}

struct Search {
  const BilevelProblem& bp;
  const Candidate& cand;
  const Subdiffs& sd;
  Theorem theorem;
  // Range of u: conv(points) + cone.
  std::vector<Vec> u_points;
  geom::ConeSpec u_cone;
};

// One pass over the branch combinations for a fixed kappa.
std::optional<Certificate> search(const Search& s, double kappa, double& margin, std::size_t& combos) {
  const int n = s.bp.x_dim, dim = n + s.bp.y_dim();
  const bool convexified = s.theorem == Theorem::Convexified;
  const std::size_t L = s.sd.lower.size(), U = s.sd.upper.size();

  std::vector<std::size_t> sizes;
  std::vector<std::string> labels;
  if (!convexified) {
    sizes.push_back(s.sd.lower_cost.parts().size());
    labels.push_back("value: lower cost");
    for (std::size_t k = 0; k < L; ++k) {
      sizes.push_back(s.sd.lower[k].parts().size());
      labels.push_back("value: lower constraint " + std::to_string(s.sd.lower_active[k] + 1));
    }
  }
  const std::size_t second = sizes.size();
  sizes.push_back(s.sd.lower_cost.parts().size());
  labels.push_back("penalty: lower cost");
  sizes.push_back(s.sd.upper_cost.parts().size());
  labels.push_back("penalty: upper cost");
  for (std::size_t k = 0; k < L; ++k) {
    sizes.push_back(s.sd.lower[k].parts().size());
    labels.push_back("penalty: lower constraint " + std::to_string(s.sd.lower_active[k] + 1));
  }
  for (std::size_t k = 0; k < U; ++k) {
    sizes.push_back(s.sd.upper[k].parts().size());
    labels.push_back("penalty: upper constraint " + std::to_string(s.sd.upper_active[k] + 1));
  }

  std::optional<Certificate> found;
  combos += for_each_combination(sizes, [&](const std::vector<std::size_t>& pick) {
    // Equation 0 ties u to its range; 1 and 2 are the two inclusions.
    EquationLp incl(3, dim);
    std::vector<int> u;
    for (int c = 0; c < n; ++c) u.push_back(incl.lp.add_variable(-kInf, kInf));
    incl.add_hull(0, geom::Polytope(n, s.u_points), 0, 1.0, std::nullopt);
    for (const auto& g : s.u_cone.generators()) {
      const int v = incl.lp.add_variable();
      for (int c = 0; c < n; ++c)
        if (g[c] != 0.0) incl.add_term(0, c, v, g[c]);
    }
    for (const auto& l : s.u_cone.lineality()) {
      const int v = incl.lp.add_variable(-kInf, kInf);
      for (int c = 0; c < n; ++c)
        if (l[c] != 0.0) incl.add_term(0, c, v, l[c]);
    }
    for (int c = 0; c < n; ++c)
      for (int eq = 0; eq < 3; ++eq) incl.add_term(eq, c, u[static_cast<std::size_t>(c)], -1.0);

    std::vector<int> nu(L), lam(L), mu(U);
    std::size_t at = 0;
    if (convexified) {
      incl.add_hull(1, hull_of(s.sd.lower_cost), 0, 1.0, std::nullopt);
      for (std::size_t k = 0; k < L; ++k) {
        nu[k] = incl.lp.add_variable();
        incl.add_hull(1, hull_of(s.sd.lower[k]), 0, 1.0, nu[k]);
      }
    } else {
      incl.add_hull(1, s.sd.lower_cost.parts()[pick[at++]], 0, 1.0, std::nullopt);
      for (std::size_t k = 0; k < L; ++k) {
        nu[k] = incl.lp.add_variable();
        incl.add_hull(1, s.sd.lower[k].parts()[pick[at++]], 0, 1.0, nu[k]);
      }
    }
    at = second;
    incl.add_hull(2, s.sd.lower_cost.parts()[pick[at++]], 0, 1.0, std::nullopt);
    incl.add_hull(2, s.sd.upper_cost.parts()[pick[at++]], 0, 1.0, std::nullopt, 1.0 / kappa);
    for (std::size_t k = 0; k < L; ++k) {
      lam[k] = incl.lp.add_variable();
      incl.add_hull(2, s.sd.lower[k].parts()[pick[at++]], 0, 1.0, lam[k]);
    }
    for (std::size_t k = 0; k < U; ++k) {
      mu[k] = incl.lp.add_variable();
      incl.add_hull(2, padded(s.sd.upper[k].parts()[pick[at++]], n), 0, 1.0, mu[k]);
    }
    std::vector<std::pair<int, double>> obj;
    for (const auto* vs : {&nu, &lam, &mu})
      for (int v : *vs) obj.push_back({v, 1.0});
    incl.lp.set_objective(obj);
    incl.close();

    const auto r = lp::solve(incl.lp);
    if (!r.feasible()) {
      if (r.status == lp::Status::Infeasible) margin = std::min(margin, r.infeasibility);
      return false;
    }
    Certificate c;
    c.theorem = s.theorem;
    c.kappa = kappa;
    c.u = Vec(n);
    for (int k = 0; k < n; ++k) c.u[k] = r.x[static_cast<std::size_t>(u[static_cast<std::size_t>(k)])];
    c.lambda.assign(s.bp.lower_constraints.size(), 0.0);
    c.nu.assign(s.bp.lower_constraints.size(), 0.0);
    c.mu.assign(s.bp.upper_constraints.size(), 0.0);
    for (std::size_t k = 0; k < L; ++k) {
      c.lambda[static_cast<std::size_t>(s.sd.lower_active[k])] = r.x[static_cast<std::size_t>(lam[k])];
      c.nu[static_cast<std::size_t>(s.sd.lower_active[k])] = r.x[static_cast<std::size_t>(nu[k])];
    }
    for (std::size_t k = 0; k < U; ++k)
      c.mu[static_cast<std::size_t>(s.sd.upper_active[k])] = r.x[static_cast<std::size_t>(mu[k])];
    for (auto p : pick) c.branches.push_back(static_cast<int>(p));
    c.branch_labels = labels;

    // Re-verify against the raw equations.
    Vec target = Vec::Zero(dim);
    target.head(n) = c.u;
    const double r0 = (incl.contribution(0, dim, r.x).head(n) - c.u).cwiseAbs().maxCoeff();
    const double r1 = (incl.contribution(1, dim, r.x) - target).cwiseAbs().maxCoeff();
    const double r2 = (incl.contribution(2, dim, r.x) - target).cwiseAbs().maxCoeff();
    double comp = 0.0, sign = 0.0;
    for (std::size_t i = 0; i < c.lambda.size(); ++i) {
      comp = std::max({comp, std::abs(c.lambda[i] * s.cand.lower_values[i]), std::abs(c.nu[i] * s.cand.lower_values[i])});
      sign = std::max({sign, -c.lambda[i], -c.nu[i]});
    }
    for (std::size_t j = 0; j < c.mu.size(); ++j) {
      comp = std::max(comp, std::abs(c.mu[j] * s.cand.upper_values[j]));
      sign = std::max(sign, -c.mu[j]);
    }
    c.residuals = {{"value_inclusion", r1},
                   {"penalty_inclusion", r2},
                   {"value_subgradient_range", r0},
                   {"complementary_slackness", comp},
                   {"sign", sign}};
    found = std::move(c);
    return true;
  });
  return found;
}

CertifyReport run_certify(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar, const CertifyOptions& opts,
                          Theorem theorem) {
  if (opts.kappa && !(*opts.kappa > 0)) throw InputError("penalty constant must be positive");
  opts.params.validate();
  CertifyReport rep;
  rep.caveat = kCaveat;
  if (theorem == Theorem::Regular && !bp.upper_constraints.empty()) {
    rep.verdict = Verdict::HypothesisFailure;
    rep.hypotheses.push_back({"no upper-level constraints", false, false, false,
                              std::to_string(bp.upper_constraints.size()) + " upper-level constraints present"});
    rep.diagnostic = "hypothesis failure: the regular-subgradient conditions need a program without upper-level constraints";
    return rep;
  }
  const auto cand = check_candidate(bp, xbar, ybar, opts.grid);
  const auto lower = bp.lower_problem();

  const auto reg = regularity_check(bp, xbar, ybar, opts.params);
  auto dep_detail = [](const RegularityVerdict& v) {
    if (v.regular) return std::string(v.active.empty() ? "no active constraints" : "no positive dependence");
    std::string s = "weights";
    for (double w : v.witness->weights) s += " " + format_number(w);
    return s;
  };
  rep.hypotheses.push_back({"lower-level regularity", reg.lower.regular, false, false, dep_detail(reg.lower)});
  if (theorem == Theorem::Convexified)
    rep.hypotheses.push_back({"upper-level regularity", reg.upper.regular, false, false, dep_detail(reg.upper)});

  rep.calmness = partial_calmness_probe(bp, xbar, ybar, opts.kappa_grid, opts.grid, opts.params);
  const auto& kv = rep.calmness->kappa_validated;
  rep.kappa = opts.kappa ? *opts.kappa : (kv ? *kv : (opts.kappa_grid.empty() ? 1.0 : opts.kappa_grid.front()));
  {
    Hypothesis h{"partial calmness", false, false, true, ""};
    if (kv && (opts.kappa_sweep || *kv <= rep.kappa)) {
      h.holds = true;
      h.detail = "validated kappa " + format_number(*kv);
    } else {
      h.detail = kv ? "validated kappa " + format_number(*kv) + " exceeds " + format_number(rep.kappa)
                    : std::to_string(rep.calmness->violations.size()) + " violating samples at the largest kappa";
      h.overridden = opts.override_calmness;
    }
    rep.hypotheses.push_back(h);
  }

  const auto isc = valuefn::inner_semicontinuity_probe(lower, xbar, ybar, opts.grid, opts.params);
  rep.hypotheses.push_back({"inner semicontinuity of the solution map", isc.passes, !isc.passes && opts.override_isc,
                            true, "worst argmin distance " + format_number(isc.worst_distance) + " against threshold " +
                                format_number(isc.threshold)});

  std::vector<Vec> u_points;
  geom::ConeSpec u_cone = geom::ConeSpec::zero(bp.x_dim);
  if (theorem == Theorem::Convexified) {
    const auto est = valuefn::value_subdiff_estimate(lower, xbar, ybar, opts.grid, opts.params, true);
    rep.value_set = est.basic;
    std::vector<Vec> gens, lins;
    for (const auto& piece : est.basic) {
      for (const auto& v : piece.points.vertices()) u_points.push_back(v);
      for (const auto& g : piece.cone.generators()) gens.push_back(g);
      for (const auto& l : piece.cone.lineality()) lins.push_back(l);
    }
    u_cone = geom::ConeSpec(bp.x_dim, gens, lins);
    if (u_points.empty()) throw RefusalError("value-function estimate is empty");
  } else {
    const auto hat = regular_value_subdiff(lower, xbar, opts.grid, opts.params);
    rep.hypotheses.push_back({"nonempty regular subdifferential of the value function", hat.has_value(), false,
                              true, hat ? geom::describe(*hat) : "difference quotients admit no common subgradient"});
    if (hat) {
      u_points = hat->vertices();
      rep.value_set = {{*hat, geom::ConeSpec::zero(bp.x_dim)}};
    }
  }

  if (const auto bad = failing_list(rep.hypotheses); !bad.empty()) {
    rep.verdict = Verdict::HypothesisFailure;
    rep.diagnostic = "hypothesis failure: " + bad;
    return rep;
  }

  const auto sd = subdiffs_at(bp, cand, opts.params);
  const Search s{bp, cand, sd, theorem, u_points, u_cone};
  std::vector<double> kappas{rep.kappa};
  if (opts.kappa_sweep) {
    kappas.clear();
    for (double k : opts.kappa_grid)
      if (!kv || k >= *kv || opts.override_calmness) kappas.push_back(k);
  }
  rep.margin = kInf;
  for (double k : kappas) {
    if (auto c = search(s, k, rep.margin, rep.combinations)) {
      rep.verdict = Verdict::Certified;
      rep.kappa = k;
      rep.margin = 0.0;
      rep.certificate = std::move(c);
      return rep;
    }
  }
  if (!std::isfinite(rep.margin)) rep.margin = 0.0;
  rep.verdict = Verdict::NoCertificate;
  rep.diagnostic = "no multipliers satisfy both inclusions over " + std::to_string(rep.combinations) +
                   " branch combinations; smallest infeasibility " + format_number(rep.margin);
  return rep;
}

}  // namespace

CertifyReport certify_convexified(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar,
                                  const CertifyOptions& opts) {
  return run_certify(bp, xbar, ybar, opts, Theorem::Convexified);
}

CertifyReport certify_regular(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar, const CertifyOptions& opts) {
  return run_certify(bp, xbar, ybar, opts, Theorem::Regular);
}

}  // namespace varcalc::bilevel
