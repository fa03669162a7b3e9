// SPDX-License-Identifier: Apache-2.0
#include "varcalc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varcalc::lp {

int LPProblem::add_variable(double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper)
    throw std::invalid_argument("invalid variable bounds");
  if (lower_.size() >= kMaxVariables) throw std::length_error("LP exceeds 512 variables");
  lower_.push_back(lower);
  upper_.push_back(upper);
  return static_cast<int>(lower_.size() - 1);
}

void LPProblem::add_row(std::vector<std::pair<int, double>> terms, Sense sense, double rhs) {
  for (const auto& [j, a] : terms)
    if (j < 0 || static_cast<std::size_t>(j) >= lower_.size() || !std::isfinite(a))
      throw std::invalid_argument("bad LP row term");
  if (!std::isfinite(rhs)) throw std::invalid_argument("non-finite LP right-hand side");
  rows_.push_back({std::move(terms), sense, rhs});
}

void LPProblem::set_objective(std::vector<std::pair<int, double>> terms) { objective_ = std::move(terms); }

const char* to_string(Status s) {
  switch (s) {
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::Breakdown: return "breakdown";
  }
  return "?";
}

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-11;

// Original variable j = offset + sign * z[col] (+ optional second column).
struct VarMap {
  double offset = 0.0;
  int col = -1;
  double sign = 1.0;
  int neg_col = -1;  // free variables: x = z[col] - z[neg_col]
};

class Tableau {
public:
  Tableau(int rows, int cols) : m_(rows), n_(cols), t_(Mat::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  double& at(int r, int c) { return t_(r, c); }
  double rhs(int r) const { return t_(r, n_); }
  int rows() const { return m_; }
  int cols() const { return n_; }
  std::vector<int>& basis() { return basis_; }

  void pivot(int r, int c) {
    const double p = t_(r, c);
    t_.row(r) /= p;
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Runs simplex on the objective stored in row m_ (reduced costs).
  // `allowed` masks columns that may enter.
  Status optimize(const std::vector<bool>& allowed, int& iterations, int cap) {
    for (;;) {
      if (iterations++ > cap) return Status::Breakdown;
      int enter = -1;
      for (int j = 0; j < n_; ++j)
        if (allowed[static_cast<std::size_t>(j)] && t_(m_, j) < -kCostEps) {
          enter = j;
          break;
        }
      if (enter < 0) return Status::Feasible;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a > kPivotEps) {
          const double ratio = t_(i, n_) / a;
          if (leave < 0 || ratio < best - 1e-14 ||
              (std::abs(ratio - best) <= 1e-14 && basis_[static_cast<std::size_t>(i)] <
                                                      basis_[static_cast<std::size_t>(leave)])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return Status::Unbounded;
      pivot(leave, enter);
    }
  }

  Mat& data() { return t_; }

private:
  int m_, n_;
  Mat t_;
  std::vector<int> basis_;
};

}  // namespace

double max_violation(const LPProblem& problem, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < problem.num_variables(); ++j) {
    worst = std::max(worst, problem.lower()[j] - x[j]);
    worst = std::max(worst, x[j] - problem.upper()[j]);
  }
  for (const auto& row : problem.rows()) {
    double lhs = 0.0;
    for (const auto& [j, a] : row.terms) lhs += a * x[static_cast<std::size_t>(j)];
    const double d = lhs - row.rhs;
    switch (row.sense) {
      case Sense::LessEq: worst = std::max(worst, d); break;
      case Sense::GreaterEq: worst = std::max(worst, -d); break;
      case Sense::Equal: worst = std::max(worst, std::abs(d)); break;
    }
  }
  return worst;
}

Result solve(const LPProblem& problem) {
  const std::size_t nv = problem.num_variables();
  std::vector<VarMap> map(nv);
  int ncols = 0;
  struct BoundRow {
    int col;
    double ub;
  };
  std::vector<BoundRow> bound_rows;
  for (std::size_t j = 0; j < nv; ++j) {
    const double l = problem.lower()[j], u = problem.upper()[j];
    if (std::isfinite(l)) {
      map[j] = {l, ncols++, 1.0, -1};
      if (std::isfinite(u)) bound_rows.push_back({map[j].col, u - l});
    } else if (std::isfinite(u)) {
      map[j] = {u, ncols++, -1.0, -1};
    } else {
      map[j].col = ncols++;
      map[j].neg_col = ncols++;
    }
  }
  const int nstruct = ncols;

  // Dense standard-form rows over structural columns.
  struct StdRow {
    Vec a;
    Sense sense;
    double b;
  };
  std::vector<StdRow> rows;
  for (const auto& r : problem.rows()) {
    StdRow s{Vec::Zero(nstruct), r.sense, r.rhs};
    for (const auto& [j, a] : r.terms) {
      const auto& vm = map[static_cast<std::size_t>(j)];
      s.b -= a * vm.offset;
      s.a[vm.col] += a * vm.sign;
      if (vm.neg_col >= 0) s.a[vm.neg_col] -= a;
    }
    rows.push_back(std::move(s));
  }
  for (const auto& br : bound_rows) {
    StdRow s{Vec::Zero(nstruct), Sense::LessEq, br.ub};
    s.a[br.col] = 1.0;
    rows.push_back(std::move(s));
  }

  const int m = static_cast<int>(rows.size());
  int nslack = 0;
  for (const auto& r : rows)
    if (r.sense != Sense::Equal) ++nslack;
  const int art0 = nstruct + nslack;
  const int ntotal = art0 + m;

  Result result;
  Tableau tab(m, ntotal);
  int slack = nstruct;
  for (int i = 0; i < m; ++i) {
    auto& r = rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < nstruct; ++j) tab.at(i, j) = r.a[j];
    if (r.sense == Sense::LessEq) tab.at(i, slack++) = 1.0;
    else if (r.sense == Sense::GreaterEq) tab.at(i, slack++) = -1.0;
    double b = r.b;
    if (b < 0) {
      tab.data().row(i).head(art0) *= -1.0;
      b = -b;
    }
    tab.at(i, art0 + i) = 1.0;
    tab.at(i, ntotal) = b;
    tab.basis()[static_cast<std::size_t>(i)] = art0 + i;
  }
  // Phase-1 objective: minimize sum of artificials, expressed in reduced form.
  for (int i = 0; i < m; ++i) tab.data().row(m).head(art0) -= tab.data().row(i).head(art0);
  for (int i = 0; i < m; ++i) tab.data()(m, ntotal) -= tab.rhs(i);

  const int cap = 200 * (m + ntotal) + 1000;
  std::vector<bool> allowed(static_cast<std::size_t>(ntotal), true);
  Status st = tab.optimize(allowed, result.iterations, cap);
  if (st == Status::Breakdown) {
    result.status = Status::Breakdown;
    result.message = "phase 1 iteration limit";
    return result;
  }
  result.infeasibility = -tab.data()(m, ntotal);
  double scale = 1.0;
  for (const auto& r : rows) scale = std::max(scale, std::abs(r.b));
  if (result.infeasibility > tol::lp * scale) {
    result.status = Status::Infeasible;
    return result;
  }
  result.infeasibility = 0.0;

  // Drive zero-level artificials out of the basis; drop redundant rows.
  std::vector<bool> dead_row(static_cast<std::size_t>(m), false);
  for (int i = 0; i < m; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < art0) continue;
    int col = -1;
    double best = kPivotEps * 100;
    for (int j = 0; j < art0; ++j)
      if (std::abs(tab.at(i, j)) > best) {
        best = std::abs(tab.at(i, j));
        col = j;
      }
    if (col >= 0) tab.pivot(i, col);
    else dead_row[static_cast<std::size_t>(i)] = true;
  }
  for (int j = art0; j < ntotal; ++j) allowed[static_cast<std::size_t>(j)] = false;

  if (problem.objective()) {
    Vec c = Vec::Zero(ntotal);
    double c0 = 0.0;
    for (const auto& [j, a] : *problem.objective()) {
      const auto& vm = map[static_cast<std::size_t>(j)];
      c0 += a * vm.offset;
      c[vm.col] += a * vm.sign;
      if (vm.neg_col >= 0) c[vm.neg_col] -= a;
    }
    auto& t = tab.data();
    t.row(m).setZero();
    t.row(m).head(ntotal) = c.transpose();
    for (int i = 0; i < m; ++i) {
      if (dead_row[static_cast<std::size_t>(i)]) continue;
      const int b = tab.basis()[static_cast<std::size_t>(i)];
      const double cb = t(m, b);
      if (cb != 0.0) t.row(m) -= cb * t.row(i);
    }
    st = tab.optimize(allowed, result.iterations, cap);
    if (st == Status::Breakdown) {
      result.status = Status::Breakdown;
      result.message = "phase 2 iteration limit";
      return result;
    }
    if (st == Status::Unbounded) {
      result.status = Status::Unbounded;
      return result;
    }
    result.objective = -t(m, ntotal) + c0;
  }

  Vec z = Vec::Zero(ntotal);
  for (int i = 0; i < m; ++i) {
    const int b = tab.basis()[static_cast<std::size_t>(i)];
    if (b >= 0 && b < ntotal) z[b] = std::max(0.0, tab.rhs(i));
  }
  result.x.assign(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    const auto& vm = map[j];
    double v = vm.offset + vm.sign * z[vm.col];
    if (vm.neg_col >= 0) v = z[vm.col] - z[vm.neg_col];
    v = std::clamp(v, problem.lower()[j], problem.upper()[j]);
    result.x[j] = v;
  }
  const double viol = max_violation(problem, result.x);
  if (viol > tol::lp * scale) {
    result.status = Status::Breakdown;
    result.message = "assignment violates constraints by " + std::to_string(viol);
    return result;
  }
  result.status = Status::Feasible;
  return result;
}

}  // namespace varcalc::lp
