// SPDX-License-Identifier: Apache-2.0
//
// Piecewise-smooth scalar expressions: polynomials composed with abs/max/min.
// Every such function is locally Lipschitz on its whole domain.
#pragma once

#include "varcalc/common.hpp"

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace varcalc::expr {

class VarSpace {
public:
  static constexpr std::size_t kMaxDim = 8;

  VarSpace() = default;
  explicit VarSpace(std::vector<std::string> names);

  std::size_t dim() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  /// Index of `name`, or -1.
  int index_of(std::string_view name) const;

  /// Concatenation; names must stay unique.
  VarSpace concat(const VarSpace& other) const;

  bool operator==(const VarSpace&) const = default;

private:
  std::vector<std::string> names_;
};

enum class Op { Const, Var, Add, Sub, Mul, Pow, Abs, Max, Min };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable AST node. `Sub` with one child is negation. `Pow` stores its
/// exponent in `index`; `Var` stores the variable index there.
struct Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = 0;
  std::vector<NodePtr> children;

  bool is_piecewise() const { return op == Op::Abs || op == Op::Max || op == Op::Min; }
};

NodePtr constant(double c);
NodePtr variable(int index);
NodePtr make(Op op, std::vector<NodePtr> children);
NodePtr power(NodePtr base, int exponent);

bool structurally_equal(const Node& a, const Node& b);

/// Selected arguments of each piecewise node, keyed by preorder node id.
/// For abs nodes, index 0 is the branch `arg` and index 1 is `-arg`.
using ActivePattern = std::map<int, std::vector<int>>;
/// Exactly one argument per piecewise node.
using Branch = std::map<int, int>;

class FunctionDef {
public:
  FunctionDef() = default;
  FunctionDef(VarSpace space, NodePtr root);

  const VarSpace& space() const { return space_; }
  std::size_t dim() const { return space_.dim(); }
  const NodePtr& root() const { return root_; }

  /// Node ids (preorder) of the abs/max/min nodes.
  const std::vector<int>& piecewise_ids() const { return piecewise_ids_; }
  std::size_t node_count() const { return node_count_; }

  double operator()(const Vec& p) const;

  /// Same tree viewed in a larger space; variable indices are shifted by
  /// `offset`.
  FunctionDef embed(const VarSpace& target, int offset = 0) const;

  std::string to_string() const;

private:
  VarSpace space_;
  NodePtr root_;
  std::vector<int> piecewise_ids_;
  std::size_t node_count_ = 0;
};

/// Thrown by `parse_function` with the byte offset of the problem.
class ParseError : public InputError {
public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

FunctionDef parse_function(std::string_view text, const VarSpace& space);
std::string print(const Node& node, const VarSpace& space);

double eval(const FunctionDef& f, const Vec& p);

ActivePattern active_pattern(const FunctionDef& f, const Vec& p, double tau = tol::act);

/// True when every piecewise node has a single active argument.
bool is_singleton(const ActivePattern& pattern);

/// Exact gradient of the smooth piece selected by `branch`. Nodes missing from
/// `branch` must not be piecewise nodes on the evaluated path.
Vec branch_gradient(const FunctionDef& f, const Vec& p, const Branch& branch);

/// Turns a singleton pattern into a branch.
Branch branch_of(const ActivePattern& pattern);

/// All branches consistent with `pattern`, restricted to nodes reachable
/// through selected arguments. Throws when more than `cap` branches exist.
std::vector<Branch> enumerate_branches(const FunctionDef& f, const ActivePattern& pattern,
                                       std::size_t cap = 4096);

/// Value of the smooth piece selected by `branch` at `p`.
double branch_value(const FunctionDef& f, const Vec& p, const Branch& branch);

/// Syntactic convexity test: sums and nonnegative scalings of max/abs over
/// affine arguments, plus even powers of affine arguments.
bool is_syntactically_convex(const FunctionDef& f);

/// True if the tree has no piecewise nodes and total degree <= 1.
bool is_affine(const FunctionDef& f);

// Composition helpers; operands must share one space.
FunctionDef sum(const std::vector<FunctionDef>& terms);
FunctionDef difference(const FunctionDef& a, const FunctionDef& b);
FunctionDef negate(const FunctionDef& a);
FunctionDef scale(double c, const FunctionDef& a);

}  // namespace varcalc::expr
