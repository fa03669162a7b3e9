// SPDX-License-Identifier: Apache-2.0
#include "varcalc/setspec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace varcalc::sets {

namespace {

expr::VarSpace generic_space(std::size_t n, const char* stem) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(stem + std::to_string(i));
  return expr::VarSpace(std::move(names));
}

const expr::VarSpace& common_space(const std::vector<expr::FunctionDef>& a, const std::vector<expr::FunctionDef>& b) {
  const expr::FunctionDef* first = !a.empty() ? &a.front() : !b.empty() ? &b.front() : nullptr;
  if (!first) throw InputError("a constraint set needs at least one function");
  for (const auto* list : {&a, &b})
    for (const auto& f : *list)
      if (!(f.space() == first->space())) throw InputError("set constraints use different variable spaces");
  return first->space();
}

}  // namespace

SetSpec SetSpec::sublevel(std::vector<expr::FunctionDef> inequalities, std::vector<expr::FunctionDef> equalities) {
  SetSpec s;
  s.kind_ = SetKind::Sublevel;
  s.space_ = common_space(inequalities, equalities);
  s.x_dim_ = s.dim();
  for (auto& f : inequalities) s.constraints_.push_back({std::move(f), false});
  for (auto& f : equalities) s.constraints_.push_back({std::move(f), true});
  return s;
}

SetSpec SetSpec::graph(int x_dim, std::vector<expr::FunctionDef> inequalities,
                       std::vector<expr::FunctionDef> equalities) {
  SetSpec s = sublevel(std::move(inequalities), std::move(equalities));
  if (x_dim < 1 || x_dim >= s.dim()) throw InputError("graph needs at least one x and one y coordinate");
  s.kind_ = SetKind::Graph;
  s.x_dim_ = x_dim;
  return s;
}

SetSpec SetSpec::epigraph(const expr::FunctionDef& f) {
  auto names = f.space().names();
  std::string t = "t";
  while (f.space().index_of(t) >= 0) t += "_";
  names.push_back(t);
  expr::VarSpace space(std::move(names));
  const auto tvar = expr::variable(static_cast<int>(f.dim()));
  SetSpec s;
  s.kind_ = SetKind::Epigraph;
  s.space_ = space;
  s.x_dim_ = static_cast<int>(f.dim());
  s.constraints_.push_back({expr::FunctionDef(space, expr::make(expr::Op::Sub, {f.root(), tvar})), false});
  return s;
}

SetSpec SetSpec::singleton(const Vec& point) {
  if (point.size() < 1 || !point.allFinite()) throw InputError("singleton needs a finite point");
  SetSpec s;
  s.kind_ = SetKind::Singleton;
  s.space_ = generic_space(static_cast<std::size_t>(point.size()), "p");
  s.x_dim_ = s.dim();
  for (Eigen::Index i = 0; i < point.size(); ++i)
    s.constraints_.push_back(
        {expr::FunctionDef(s.space_, expr::make(expr::Op::Sub, {expr::variable(static_cast<int>(i)),
                                                                 expr::constant(point[i])})),
         true});
  return s;
}

SetSpec SetSpec::product(const std::vector<SetSpec>& factors) {
  if (factors.empty()) throw InputError("product of no sets");
  std::size_t n = 0;
  for (const auto& f : factors) n += static_cast<std::size_t>(f.dim());
  if (n > expr::VarSpace::kMaxDim) throw InputError("product space exceeds 8 coordinates");
  SetSpec s;
  s.kind_ = SetKind::Product;
  s.space_ = generic_space(n, "z");
  s.x_dim_ = static_cast<int>(n);
  s.factors_ = factors;
  int offset = 0;
  for (const auto& f : factors) {
    for (const auto& c : f.constraints_) s.constraints_.push_back({c.fn.embed(s.space_, offset), c.equality});
    offset += f.dim();
  }
  return s;
}

double SetSpec::violation(const Vec& z) const {
  if (z.size() != dim()) throw InputError("point dimension does not match set");
  double v = 0.0;
  for (const auto& c : constraints_) {
    const double g = c.fn(z);
    v = std::max(v, c.equality ? std::abs(g) : g);
  }
  return v;
}

bool SetSpec::polyhedral() const {
  return std::all_of(constraints_.begin(), constraints_.end(), [](const Constraint& c) { return expr::is_affine(c.fn); });
}

std::optional<Vec> exact_projection(const SetSpec& set, const Vec& z) {
  if (!set.polyhedral()) return std::nullopt;
  if (z.size() != set.dim()) throw InputError("point dimension does not match set");
  if (set.contains(z, 1e-12)) return z;
  const int n = set.dim();
  const Vec origin = Vec::Zero(n);
  std::vector<Vec> normals;
  std::vector<double> offsets;
  std::vector<int> ineq;
  Mat E(0, n);
  Vec e(0);
  for (const auto& c : set.constraints()) {
    const Vec a = expr::branch_gradient(c.fn, origin, {});
    const double b = -c.fn(origin);
    if (a.norm() == 0.0) {
      if (c.equality ? b != 0.0 : b < 0.0) return std::nullopt;
      continue;
    }
    if (c.equality) {
      E.conservativeResize(E.rows() + 1, n);
      E.row(E.rows() - 1) = a.transpose();
      e.conservativeResize(e.size() + 1);
      e[e.size() - 1] = b;
    } else {
      ineq.push_back(static_cast<int>(normals.size()));
      normals.push_back(a);
      offsets.push_back(b);
    }
  }
  if (normals.size() > 20) throw InputError("projection supports at most 20 affine inequalities");
  const double scale = 1.0 + z.cwiseAbs().maxCoeff();
  std::optional<Vec> best;
  double best_d = std::numeric_limits<double>::infinity();
  const std::size_t m = normals.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    Mat M = E;
    Vec r = e;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (std::size_t{1} << i)) {
        M.conservativeResize(M.rows() + 1, n);
        M.row(M.rows() - 1) = normals[i].transpose();
        r.conservativeResize(r.size() + 1);
        r[r.size() - 1] = offsets[i];
      }
    Vec w = z;
    if (M.rows() > 0) {
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(M);
      w = z - cod.solve(M * z - r);
      if ((M * w - r).cwiseAbs().maxCoeff() > 1e-10 * scale) continue;
    }
    const double d = (w - z).squaredNorm();
    if (d >= best_d || !set.contains(w, 1e-10 * scale)) continue;
    best_d = d;
    best = w;
  }
  return best;
}

std::string SetSpec::describe() const {
  std::string s;
  switch (kind_) {
    case SetKind::Sublevel: s = "sublevel"; break;
    case SetKind::Graph: s = "graph"; break;
    case SetKind::Epigraph: s = "epigraph"; break;
    case SetKind::Singleton: s = "singleton"; break;
    case SetKind::Product: s = "product"; break;
  }
  s += " {";
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    if (i) s += "; ";
    s += constraints_[i].fn.to_string() + (constraints_[i].equality ? " = 0" : " <= 0");
  }
  return s + "}";
}

}  // namespace varcalc::sets
