// SPDX-License-Identifier: Apache-2.0
#include "varcalc/plform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varcalc::plform {

using expr::ActivePattern;
using expr::Node;
using expr::Op;
using Pieces = std::vector<std::vector<Vec>>;

namespace {

constexpr std::size_t kMaxPieces = 20000;

std::size_t subtree_size(const Node& n) {
  std::size_t s = 1;
  for (const auto& c : n.children) s += subtree_size(*c);
  return s;
}

std::vector<Vec> dedupe(std::vector<Vec> vs) {
  std::sort(vs.begin(), vs.end(), lex_less);
  std::vector<Vec> out;
  for (auto& v : vs)
    if (out.empty() || (v - out.back()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + v.cwiseAbs().maxCoeff()))
      out.push_back(std::move(v));
  return out;
}

bool piece_less(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (lex_less(a[i], b[i])) return true;
    if (lex_less(b[i], a[i])) return false;
  }
  return a.size() < b.size();
}

// Hull each piece, then drop pieces whose hull contains another piece's hull:
// the larger support function never attains the minimum alone.
Pieces reduce(Pieces ps) {
  for (auto& p : ps) p = geom::extreme_points(dedupe(std::move(p)));
  std::sort(ps.begin(), ps.end(), piece_less);
  std::vector<bool> drop(ps.size(), false);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    if (ps[k].empty()) continue;
    const int dim = static_cast<int>(ps[k].front().size());
    geom::Polytope pk(dim, ps[k]);
    for (std::size_t j = 0; j < ps.size() && !drop[k]; ++j) {
      if (j == k || drop[j]) continue;
      geom::Polytope pj(dim, ps[j]);
      if (!geom::contains(pk, pj, 1e-12)) continue;
      if (j > k && geom::contains(pj, pk, 1e-12)) continue;
      drop[k] = true;
    }
  }
  Pieces out;
  for (std::size_t k = 0; k < ps.size(); ++k)
    if (!drop[k]) out.push_back(std::move(ps[k]));
  return out;
}

Pieces linear(const Vec& a) { return {{a}}; }

Pieces add(const Pieces& f, const Pieces& g) {
  if (f.size() * g.size() > kMaxPieces) throw std::length_error("directional form too large");
  Pieces out;
  for (const auto& a : f)
    for (const auto& b : g) {
      std::vector<Vec> s;
      for (const auto& u : a)
        for (const auto& v : b) s.push_back(u + v);
      out.push_back(std::move(s));
    }
  return reduce(std::move(out));
}

// -(min_j max A_j) = max_j min(-A_j) = min over selections s of max_j(-s_j).
Pieces negate(const Pieces& f) {
  std::size_t total = 1;
  for (const auto& a : f) {
    total *= a.size();
    if (total > kMaxPieces) throw std::length_error("directional form too large");
  }
  Pieces out;
  std::vector<std::size_t> idx(f.size(), 0);
  for (;;) {
    std::vector<Vec> s;
    for (std::size_t j = 0; j < f.size(); ++j) s.push_back(-f[j][idx[j]]);
    out.push_back(std::move(s));
    std::size_t j = 0;
    while (j < f.size() && ++idx[j] == f[j].size()) idx[j++] = 0;
    if (j == f.size()) break;
  }
  return reduce(std::move(out));
}

Pieces scale(double c, const Pieces& f) {
  if (c == 0.0) {
    const auto dim = f.front().front().size();
    return linear(Vec::Zero(dim));
  }
  Pieces g = c > 0 ? f : negate(f);
  for (auto& a : g)
    for (auto& v : a) v *= std::abs(c);
  return g;
}

Pieces max_of(const Pieces& f, const Pieces& g) {
  if (f.size() * g.size() > kMaxPieces) throw std::length_error("directional form too large");
  Pieces out;
  for (const auto& a : f)
    for (const auto& b : g) {
      std::vector<Vec> s = a;
      s.insert(s.end(), b.begin(), b.end());
      out.push_back(std::move(s));
    }
  return reduce(std::move(out));
}

Pieces min_of(const Pieces& f, const Pieces& g) {
  Pieces out = f;
  out.insert(out.end(), g.begin(), g.end());
  return reduce(std::move(out));
}

struct Walk {
  const Vec& x;
  const ActivePattern& pattern;
  int next = 0;

  struct Out {
    double value;
    Pieces form;
  };

  std::vector<int> selection(int id, const std::vector<double>& vals, Op op) const {
    if (auto it = pattern.find(id); it != pattern.end()) return it->second;
    std::vector<int> sel;
    if (op == Op::Abs) {
      if (std::abs(vals[0]) <= tol::act) return {0, 1};
      return {vals[0] > 0 ? 0 : 1};
    }
    const double m = op == Op::Max ? *std::max_element(vals.begin(), vals.end())
                                   : *std::min_element(vals.begin(), vals.end());
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (std::abs(vals[i] - m) <= tol::act) sel.push_back(static_cast<int>(i));
    return sel;
  }

  Out visit(const Node& n) {
    const int id = next++;
    const auto dim = x.size();
    switch (n.op) {
      case Op::Const: return {n.value, linear(Vec::Zero(dim))};
      case Op::Var: return {x[n.index], linear(Vec::Unit(dim, n.index))};
      default: break;
    }
    std::vector<Out> kids;
    for (const auto& c : n.children) kids.push_back(visit(*c));
    switch (n.op) {
      case Op::Add: {
        Out o{0.0, linear(Vec::Zero(dim))};
        for (auto& k : kids) {
          o.value += k.value;
          o.form = add(o.form, k.form);
        }
        return o;
      }
      case Op::Sub:
        if (kids.size() == 1) return {-kids[0].value, negate(kids[0].form)};
        return {kids[0].value - kids[1].value, add(kids[0].form, negate(kids[1].form))};
      case Op::Mul: {
        double prod = 1.0;
        for (auto& k : kids) prod *= k.value;
        Pieces form = linear(Vec::Zero(dim));
        for (std::size_t i = 0; i < kids.size(); ++i) {
          double others = 1.0;
          for (std::size_t l = 0; l < kids.size(); ++l)
            if (l != i) others *= kids[l].value;
          form = add(form, scale(others, kids[i].form));
        }
        return {prod, std::move(form)};
      }
      case Op::Pow: {
        const int e = n.index;
        const double b = kids[0].value;
        if (e == 0) return {1.0, linear(Vec::Zero(dim))};
        return {std::pow(b, e), scale(e * std::pow(b, e - 1), kids[0].form)};
      }
      case Op::Abs: {
        const auto sel = selection(id, {kids[0].value}, n.op);
        const Pieces& g = kids[0].form;
        const Pieces ng = negate(g);
        Pieces form;
        if (sel.size() == 2) form = max_of(g, ng);
        else form = sel[0] == 0 ? g : ng;
        return {std::abs(kids[0].value), std::move(form)};
      }
      case Op::Max:
      case Op::Min: {
        std::vector<double> vals;
        for (auto& k : kids) vals.push_back(k.value);
        const auto sel = selection(id, vals, n.op);
        if (sel.empty()) throw InputError("empty selection in active pattern");
        Pieces form = kids[static_cast<std::size_t>(sel[0])].form;
        for (std::size_t i = 1; i < sel.size(); ++i) {
          const auto& other = kids[static_cast<std::size_t>(sel[i])].form;
          form = n.op == Op::Max ? max_of(form, other) : min_of(form, other);
        }
        const double v = n.op == Op::Max ? *std::max_element(vals.begin(), vals.end())
                                         : *std::min_element(vals.begin(), vals.end());
        return {v, std::move(form)};
      }
      default: break;
    }
    throw std::logic_error("unhandled node in directional form");
  }
};

void reach(const Node& n, int& next, const ActivePattern& in, ActivePattern& out) {
  const int id = next++;
  if (!n.is_piecewise()) {
    for (const auto& c : n.children) reach(*c, next, in, out);
    return;
  }
  auto it = in.find(id);
  if (it == in.end()) {
    for (const auto& c : n.children) reach(*c, next, in, out);
    return;
  }
  out[id] = it->second;
  // abs has one child whatever branch is chosen
  const bool all = n.op == Op::Abs;
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    const bool chosen =
        all || std::find(it->second.begin(), it->second.end(), static_cast<int>(i)) != it->second.end();
    if (chosen) reach(*n.children[i], next, in, out);
    else next += static_cast<int>(subtree_size(*n.children[i]));
  }
}

}  // namespace

double DirectionalForm::operator()(const Vec& d) const {
  double best = HUGE_VAL;
  for (const auto& piece : pieces) {
    double m = -HUGE_VAL;
    for (const auto& a : piece) m = std::max(m, a.dot(d));
    best = std::min(best, m);
  }
  return best;
}

DirectionalForm directional_form(const expr::FunctionDef& f, const Vec& x, const ActivePattern& pattern) {
  if (static_cast<std::size_t>(x.size()) != f.dim()) throw InputError("point dimension does not match function");
  Walk w{x, pattern};
  auto out = w.visit(*f.root());
  return {static_cast<int>(f.dim()), std::move(out.form)};
}

ActivePattern reachable(const expr::FunctionDef& f, const ActivePattern& pattern) {
  ActivePattern out;
  int next = 0;
  reach(*f.root(), next, pattern, out);
  return out;
}

std::optional<geom::Polytope> regular_set(const DirectionalForm& form) {
  std::vector<geom::Polytope> hulls;
  for (const auto& p : form.pieces) hulls.emplace_back(form.dim, p);
  if (hulls.size() == 1) return geom::Polytope(form.dim, geom::extreme_points(hulls[0].vertices()));
  if (form.dim > geom::kMaxHullDim)
    throw InputError("regular subdifferential with several pieces needs dimension at most 4");
  return geom::intersect(hulls);
}

}  // namespace varcalc::plform
