// SPDX-License-Identifier: Apache-2.0
#include "varcalc/expr.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace varcalc::expr {

VarSpace::VarSpace(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw InputError("variable space must not be empty");
  if (names_.size() > kMaxDim)
    throw InputError("variable space has " + std::to_string(names_.size()) +
                     " variables; at most 8 are supported");
  std::set<std::string> seen;
  for (const auto& n : names_)
    if (!seen.insert(n).second) throw InputError("duplicate variable '" + n + "'");
}

int VarSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

VarSpace VarSpace::concat(const VarSpace& other) const {
  auto names = names_;
  names.insert(names.end(), other.names_.begin(), other.names_.end());
  return VarSpace(std::move(names));
}

NodePtr constant(double c) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = c;
  return n;
}

NodePtr variable(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  return n;
}

NodePtr make(Op op, std::vector<NodePtr> children) {
  const auto k = children.size();
  switch (op) {
    case Op::Const:
    case Op::Var:
    case Op::Pow:
      throw std::invalid_argument("use constant/variable/power for leaf and pow nodes");
    case Op::Add:
    case Op::Mul:
      if (k < 1) throw std::invalid_argument("+ and * need at least one argument");
      break;
    case Op::Sub:
      if (k < 1 || k > 2) throw std::invalid_argument("- takes one or two arguments");
      break;
    case Op::Abs:
      if (k != 1) throw std::invalid_argument("abs takes exactly one argument");
      break;
    case Op::Max:
    case Op::Min:
      if (k < 2) throw std::invalid_argument("max/min need at least two arguments");
      break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->children = std::move(children);
  return n;
}

NodePtr power(NodePtr base, int exponent) {
  if (exponent < 0) throw std::invalid_argument("negative exponent");
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->index = exponent;
  n->children = {std::move(base)};
  return n;
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.op != b.op || a.children.size() != b.children.size()) return false;
  if (a.op == Op::Const && a.value != b.value) return false;
  if ((a.op == Op::Var || a.op == Op::Pow) && a.index != b.index) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

namespace {

std::size_t subtree_size(const Node& n) {
  std::size_t s = 1;
  for (const auto& c : n.children) s += subtree_size(*c);
  return s;
}

void collect(const Node& n, int& next, std::vector<int>& piecewise, int dim) {
  const int id = next++;
  if (n.is_piecewise()) piecewise.push_back(id);
  if (n.op == Op::Var && (n.index < 0 || n.index >= dim))
    throw InputError("variable index " + std::to_string(n.index) + " outside space of dimension " +
                     std::to_string(dim));
  for (const auto& c : n.children) collect(*c, next, piecewise, dim);
}

double eval_node(const Node& n, const Vec& p) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return p[n.index];
    case Op::Add: {
      double s = 0.0;
      for (const auto& c : n.children) s += eval_node(*c, p);
      return s;
    }
    case Op::Sub:
      if (n.children.size() == 1) return -eval_node(*n.children[0], p);
      return eval_node(*n.children[0], p) - eval_node(*n.children[1], p);
    case Op::Mul: {
      double s = 1.0;
      for (const auto& c : n.children) s *= eval_node(*c, p);
      return s;
    }
    case Op::Pow: {
      const double b = eval_node(*n.children[0], p);
      double r = 1.0;
      for (int i = 0; i < n.index; ++i) r *= b;
      return r;
    }
    case Op::Abs: return std::abs(eval_node(*n.children[0], p));
    case Op::Max: {
      double m = -HUGE_VAL;
      for (const auto& c : n.children) m = std::max(m, eval_node(*c, p));
      return m;
    }
    case Op::Min: {
      double m = HUGE_VAL;
      for (const auto& c : n.children) m = std::min(m, eval_node(*c, p));
      return m;
    }
  }
  return 0.0;
}

void check_point(const FunctionDef& f, const Vec& p) {
  if (static_cast<std::size_t>(p.size()) != f.dim())
    throw InputError("point has dimension " + std::to_string(p.size()) + ", function expects " +
                     std::to_string(f.dim()));
}

// Returns the node value; records active arguments of piecewise nodes.
double pattern_walk(const Node& n, const Vec& p, double tau, int& next, ActivePattern& out) {
  const int id = next++;
  std::vector<double> vals;
  vals.reserve(n.children.size());
  for (const auto& c : n.children) vals.push_back(pattern_walk(*c, p, tau, next, out));
  switch (n.op) {
    case Op::Abs: {
      const double a = vals[0];
      if (std::abs(a) <= tau) out[id] = {0, 1};
      else out[id] = {a > 0 ? 0 : 1};
      return std::abs(a);
    }
    case Op::Max: {
      const double m = *std::max_element(vals.begin(), vals.end());
      auto& sel = out[id];
      for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i] >= m - tau) sel.push_back(static_cast<int>(i));
      return m;
    }
    case Op::Min: {
      const double m = *std::min_element(vals.begin(), vals.end());
      auto& sel = out[id];
      for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i] <= m + tau) sel.push_back(static_cast<int>(i));
      return m;
    }
    default: return eval_node(n, p);
  }
}

struct ValueGrad {
  double value;
  Vec grad;
};

ValueGrad branch_walk(const Node& n, const Vec& p, const Branch& branch, int& next, bool on_path) {
  const int id = next++;
  const auto dim = p.size();
  if (n.op == Op::Const) return {n.value, Vec::Zero(dim)};
  if (n.op == Op::Var) {
    Vec g = Vec::Zero(dim);
    g[n.index] = 1.0;
    return {p[n.index], g};
  }

  int selected = -1;
  if (n.is_piecewise()) {
    auto it = branch.find(id);
    if (it != branch.end()) {
      selected = it->second;
      const int arity = n.op == Op::Abs ? 2 : static_cast<int>(n.children.size());
      if (selected < 0 || selected >= arity)
        throw InputError("branch selects argument " + std::to_string(selected) + " of node " +
                         std::to_string(id) + " which has " + std::to_string(arity));
    } else if (on_path) {
      throw InputError("branch has no selection for piecewise node " + std::to_string(id));
    } else {
      selected = 0;
    }
  }

  std::vector<ValueGrad> kids;
  kids.reserve(n.children.size());
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    bool child_on_path = on_path;
    if (n.op == Op::Max || n.op == Op::Min) child_on_path = on_path && static_cast<int>(i) == selected;
    kids.push_back(branch_walk(*n.children[i], p, branch, next, child_on_path));
  }

  switch (n.op) {
    case Op::Add: {
      ValueGrad r{0.0, Vec::Zero(dim)};
      for (const auto& k : kids) {
        r.value += k.value;
        r.grad += k.grad;
      }
      return r;
    }
    case Op::Sub:
      if (kids.size() == 1) return {-kids[0].value, -kids[0].grad};
      return {kids[0].value - kids[1].value, kids[0].grad - kids[1].grad};
    case Op::Mul: {
      ValueGrad r{1.0, Vec::Zero(dim)};
      for (const auto& k : kids) {
        r.grad = r.grad * k.value + k.grad * r.value;
        r.value *= k.value;
      }
      return r;
    }
    case Op::Pow: {
      const int e = n.index;
      if (e == 0) return {1.0, Vec::Zero(dim)};
      double prev = 1.0;
      for (int i = 0; i < e - 1; ++i) prev *= kids[0].value;
      return {prev * kids[0].value, kids[0].grad * (e * prev)};
    }
    case Op::Abs:
      if (selected == 0) return kids[0];
      return {-kids[0].value, -kids[0].grad};
    case Op::Max:
    case Op::Min: return kids[static_cast<std::size_t>(selected)];
    default: break;
  }
  return {0.0, Vec::Zero(dim)};
}

std::vector<Branch> enumerate_walk(const Node& n, int id, const ActivePattern& pattern,
                                   std::size_t cap) {
  std::vector<int> child_ids;
  int next = id + 1;
  for (const auto& c : n.children) {
    child_ids.push_back(next);
    next += static_cast<int>(subtree_size(*c));
  }
  if (n.is_piecewise()) {
    std::vector<int> active;
    auto it = pattern.find(id);
    if (it != pattern.end()) active = it->second;
    else {
      const int arity = n.op == Op::Abs ? 2 : static_cast<int>(n.children.size());
      for (int i = 0; i < arity; ++i) active.push_back(i);
    }
    std::vector<Branch> out;
    for (int a : active) {
      const std::size_t child = n.op == Op::Abs ? 0 : static_cast<std::size_t>(a);
      for (auto b : enumerate_walk(*n.children[child], child_ids[child], pattern, cap)) {
        b[id] = a;
        out.push_back(std::move(b));
        if (out.size() > cap) throw std::length_error("branch enumeration exceeds cap");
      }
    }
    return out;
  }
  std::vector<Branch> acc{Branch{}};
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    auto sub = enumerate_walk(*n.children[i], child_ids[i], pattern, cap);
    std::vector<Branch> merged;
    merged.reserve(acc.size() * sub.size());
    for (const auto& a : acc)
      for (const auto& s : sub) {
        Branch m = a;
        m.insert(s.begin(), s.end());
        merged.push_back(std::move(m));
        if (merged.size() > cap) throw std::length_error("branch enumeration exceeds cap");
      }
    acc = std::move(merged);
  }
  return acc;
}

bool has_var(const Node& n) {
  if (n.op == Op::Var) return true;
  return std::any_of(n.children.begin(), n.children.end(), [](const NodePtr& c) { return has_var(*c); });
}

enum class Curv { Const, Affine, Convex, Concave, Unknown };

Curv negate_curv(Curv c) {
  if (c == Curv::Convex) return Curv::Concave;
  if (c == Curv::Concave) return Curv::Convex;
  return c;
}

Curv add_curv(Curv a, Curv b) {
  if (a == Curv::Unknown || b == Curv::Unknown) return Curv::Unknown;
  auto lin = [](Curv c) { return c == Curv::Const || c == Curv::Affine; };
  if (lin(a) && lin(b)) return (a == Curv::Const && b == Curv::Const) ? Curv::Const : Curv::Affine;
  if (lin(a)) return b;
  if (lin(b)) return a;
  return a == b ? a : Curv::Unknown;
}

Curv curvature(const Node& n) {
  if (!has_var(n)) return Curv::Const;
  switch (n.op) {
    case Op::Var: return Curv::Affine;
    case Op::Add: {
      Curv c = Curv::Const;
      for (const auto& k : n.children) c = add_curv(c, curvature(*k));
      return c;
    }
    case Op::Sub:
      if (n.children.size() == 1) return negate_curv(curvature(*n.children[0]));
      return add_curv(curvature(*n.children[0]), negate_curv(curvature(*n.children[1])));
    case Op::Mul: {
      double factor = 1.0;
      const Node* variable_part = nullptr;
      for (const auto& k : n.children) {
        if (!has_var(*k)) factor *= eval_node(*k, Vec());
        else if (variable_part) return Curv::Unknown;
        else variable_part = k.get();
      }
      const Curv c = curvature(*variable_part);
      if (factor == 0.0) return Curv::Const;
      return factor > 0 ? c : negate_curv(c);
    }
    case Op::Pow: {
      const Curv b = curvature(*n.children[0]);
      if (n.index == 0) return Curv::Const;
      if (n.index == 1) return b;
      if (b == Curv::Affine && n.index % 2 == 0) return Curv::Convex;
      return Curv::Unknown;
    }
    case Op::Abs:
      return curvature(*n.children[0]) == Curv::Affine ? Curv::Convex : Curv::Unknown;
    case Op::Max: {
      for (const auto& k : n.children) {
        const Curv c = curvature(*k);
        if (c == Curv::Concave || c == Curv::Unknown) return Curv::Unknown;
      }
      return Curv::Convex;
    }
    case Op::Min: {
      for (const auto& k : n.children) {
        const Curv c = curvature(*k);
        if (c == Curv::Convex || c == Curv::Unknown) return Curv::Unknown;
      }
      return Curv::Concave;
    }
    default: return Curv::Unknown;
  }
}

int degree(const Node& n) {
  switch (n.op) {
    case Op::Const: return 0;
    case Op::Var: return 1;
    case Op::Add:
    case Op::Sub: {
      int d = 0;
      for (const auto& k : n.children) d = std::max(d, degree(*k));
      return d;
    }
    case Op::Mul: {
      int d = 0;
      for (const auto& k : n.children) d += degree(*k);
      return d;
    }
    case Op::Pow: return n.index * degree(*n.children[0]);
    default: return 1000;
  }
}

NodePtr shift_vars(const NodePtr& n, int offset) {
  if (n->op == Op::Var) return variable(n->index + offset);
  if (n->op == Op::Const) return n;
  std::vector<NodePtr> kids;
  for (const auto& c : n->children) kids.push_back(shift_vars(c, offset));
  if (n->op == Op::Pow) return power(kids[0], n->index);
  return make(n->op, std::move(kids));
}

}  // namespace

FunctionDef::FunctionDef(VarSpace space, NodePtr root) : space_(std::move(space)), root_(std::move(root)) {
  if (!root_) throw std::invalid_argument("null expression");
  int next = 0;
  collect(*root_, next, piecewise_ids_, static_cast<int>(space_.dim()));
  node_count_ = static_cast<std::size_t>(next);
}

double FunctionDef::operator()(const Vec& p) const { return eval(*this, p); }

FunctionDef FunctionDef::embed(const VarSpace& target, int offset) const {
  if (offset < 0 || static_cast<std::size_t>(offset) + dim() > target.dim())
    throw InputError("cannot embed function into a smaller space");
  return FunctionDef(target, offset == 0 ? root_ : shift_vars(root_, offset));
}

std::string FunctionDef::to_string() const { return print(*root_, space_); }

double eval(const FunctionDef& f, const Vec& p) {
  check_point(f, p);
  return eval_node(*f.root(), p);
}

ActivePattern active_pattern(const FunctionDef& f, const Vec& p, double tau) {
  check_point(f, p);
  if (!(tau > 0)) throw std::invalid_argument("activity tolerance must be positive");
  ActivePattern out;
  int next = 0;
  pattern_walk(*f.root(), p, tau, next, out);
  return out;
}

bool is_singleton(const ActivePattern& pattern) {
  return std::all_of(pattern.begin(), pattern.end(), [](const auto& kv) { return kv.second.size() == 1; });
}

Branch branch_of(const ActivePattern& pattern) {
  Branch b;
  for (const auto& [id, sel] : pattern) {
    if (sel.empty()) throw std::invalid_argument("empty selection");
    b[id] = sel.front();
  }
  return b;
}

Vec branch_gradient(const FunctionDef& f, const Vec& p, const Branch& branch) {
  check_point(f, p);
  int next = 0;
  return branch_walk(*f.root(), p, branch, next, true).grad;
}

double branch_value(const FunctionDef& f, const Vec& p, const Branch& branch) {
  check_point(f, p);
  int next = 0;
  return branch_walk(*f.root(), p, branch, next, true).value;
}

std::vector<Branch> enumerate_branches(const FunctionDef& f, const ActivePattern& pattern, std::size_t cap) {
  return enumerate_walk(*f.root(), 0, pattern, cap);
}

bool is_syntactically_convex(const FunctionDef& f) {
  const Curv c = curvature(*f.root());
  return c == Curv::Const || c == Curv::Affine || c == Curv::Convex;
}

bool is_affine(const FunctionDef& f) { return degree(*f.root()) <= 1; }

FunctionDef sum(const std::vector<FunctionDef>& terms) {
  if (terms.empty()) throw std::invalid_argument("empty sum");
  if (terms.size() == 1) return terms.front();
  std::vector<NodePtr> kids;
  for (const auto& t : terms) {
    if (!(t.space() == terms.front().space())) throw InputError("sum of functions over different spaces");
    kids.push_back(t.root());
  }
  return FunctionDef(terms.front().space(), make(Op::Add, std::move(kids)));
}

FunctionDef difference(const FunctionDef& a, const FunctionDef& b) {
  if (!(a.space() == b.space())) throw InputError("difference of functions over different spaces");
  return FunctionDef(a.space(), make(Op::Sub, {a.root(), b.root()}));
}

FunctionDef negate(const FunctionDef& a) { return FunctionDef(a.space(), make(Op::Sub, {a.root()})); }

FunctionDef scale(double c, const FunctionDef& a) {
  return FunctionDef(a.space(), make(Op::Mul, {constant(c), a.root()}));
}

}  // namespace varcalc::expr
