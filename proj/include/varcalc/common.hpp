// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace varcalc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Numerical tolerances shared across modules.
namespace tol {
inline constexpr double lp = 1e-9;        // LP feasibility
inline constexpr double geom = 1e-8;      // canonicalization, membership
inline constexpr double act = 1e-9;       // piecewise activity
inline constexpr double arg = 1e-6;       // argmin membership on objective values
inline constexpr double cone_radius = 1e6;
}  // namespace tol

/// Malformed or inconsistent input (unknown names, bad dimensions, syntax).
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A computation refused because a qualification hypothesis does not hold.
class RefusalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline std::vector<double> to_std(const Vec& v) {
  return {v.data(), v.data() + v.size()};
}

inline Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Lexicographic ordering used to canonicalize vertex lists.
inline bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

/// Fixed-format number used in every printed and serialized report.
inline std::string format_number(double x) {
  if (x == 0.0) x = 0.0;  // drops the sign of -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string format_vec(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_number(v[i]);
  }
  return s + ")";
}

}  // namespace varcalc
