// SPDX-License-Identifier: Apache-2.0
//
// Optimistic bilevel programs
//   minimize psi(x, y) over x with g_j(x) <= 0 and y in argmin { phi(x, .) : f_i(x, .) <= 0 }
// through the value-function reformulation. Candidates are certified by LP
// feasibility over subdifferential polytopes; every certificate states
// necessary conditions at the candidate and nothing more.
#pragma once

#include "varcalc/expr.hpp"
#include "varcalc/geometry.hpp"
#include "varcalc/sampling.hpp"
#include "varcalc/valuefn.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace varcalc::bilevel {

inline constexpr std::size_t kMaxCombinations = 4096;

/// Lower-level functions and the upper cost live on (x, y); upper
/// constraints live on x alone.
struct BilevelProblem {
  expr::FunctionDef lower_cost;
  std::vector<expr::FunctionDef> lower_constraints;
  expr::FunctionDef upper_cost;
  std::vector<expr::FunctionDef> upper_constraints;
  int x_dim = 0;

  int y_dim() const { return static_cast<int>(lower_cost.dim()) - x_dim; }
  void validate() const;
  valuefn::ParametricProblem lower_problem() const;
};

/// minimize objective subject to constraints <= 0.
struct LipschitzProgram {
  expr::FunctionDef objective;
  std::vector<expr::FunctionDef> constraints;
};

enum class Theorem { Kkt, Convexified, Regular };
const char* to_string(Theorem t);

struct Certificate {
  Theorem theorem = Theorem::Kkt;
  /// Objective multiplier; only meaningful for Kkt.
  double lambda0 = 1.0;
  std::vector<double> lambda;
  std::vector<double> mu;
  std::vector<double> nu;
  /// Value-function subgradient; empty for Kkt.
  Vec u;
  double kappa = 0.0;
  /// Chosen part per subdifferential union, in enumeration order.
  std::vector<int> branches;
  std::vector<std::string> branch_labels;
  /// Largest violation per re-verified condition.
  std::vector<std::pair<std::string, double>> residuals;
  double max_residual() const;
};

/// Nonnegative weights, summing to one, that combine subgradients to zero.
struct Dependence {
  std::vector<double> weights;
  std::vector<Vec> subgradients;
  std::vector<int> branches;
};

struct KktReport {
  std::optional<Certificate> certificate;
  bool mfcq_holds = false;
  std::optional<Dependence> mfcq_witness;
  /// Smallest LP infeasibility over all branch combinations when uncertified.
  double margin = 0.0;
  std::size_t combinations = 0;
};

/// Throws InputError when x is infeasible.
KktReport check_lipschitz_kkt(const LipschitzProgram& prog, const Vec& x, const SampleParams& params = {});

/// Same test from precomputed subdifferentials; `values` are the
/// constraint values at the point.
KktReport kkt_from_subdifferentials(const geom::PolytopeUnion& objective,
                                    const std::vector<geom::PolytopeUnion>& constraints,
                                    const std::vector<double>& values);

/// Weights combining one part per set to zero, over every branch
/// combination; nullopt when none exists.
std::optional<Dependence> positive_dependence(const std::vector<geom::PolytopeUnion>& subdiffs);

/// psi + kappa (phi - theta) subject to g_j <= 0 and f_i <= 0.
struct PenalizedProgram {
  /// psi + kappa * phi as an expression; theta is added by `objective`.
  LipschitzProgram smooth_part;
  expr::FunctionDef lower_cost;
  double kappa = 0.0;
  int x_dim = 0;
  /// Grid value function.
  std::function<double(const Vec& x)> theta;
  double penalty(const Vec& xy) const;
  double objective(const Vec& xy) const;
  bool feasible(const Vec& xy) const;
};

/// Throws InputError unless kappa > 0.
PenalizedProgram build_penalized(const BilevelProblem& bp, double kappa, const valuefn::GridSpec& grid);

struct GridMinimum {
  Vec point;
  double value = 0.0;
  std::size_t feasible_points = 0;
};

/// Exhaustive search of the penalized objective on a lattice over
/// `x_box` times `y_box`.
GridMinimum penalized_grid_search(const PenalizedProgram& prog, const std::vector<std::pair<double, double>>& x_box,
                                  const std::vector<std::pair<double, double>>& y_box, double step);

std::vector<double> default_kappa_grid();

struct CalmnessViolation {
  Vec point;
  double nu = 0.0;
  /// psi(x, y) - psi(candidate) + kappa |nu|; negative.
  double margin = 0.0;
};

struct CalmnessReport {
  std::optional<double> kappa_validated;
  std::vector<double> kappa_grid;
  /// Failures for the largest tested kappa when none validates.
  std::vector<CalmnessViolation> violations;
  int samples = 0;
  int feasible_samples = 0;
  std::vector<double> radii;
};

/// Throws InputError when the candidate is infeasible or y is not a lower
/// minimizer.
CalmnessReport partial_calmness_probe(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar,
                                      const std::vector<double>& kappa_grid, const valuefn::GridSpec& grid,
                                      const SampleParams& params = {});

struct RegularityVerdict {
  bool regular = true;
  std::optional<Dependence> witness;
  /// Active constraint indices.
  std::vector<int> active;
};

struct RegularityReport {
  RegularityVerdict lower;
  RegularityVerdict upper;
};

RegularityReport regularity_check(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar,
                                  const SampleParams& params = {});

struct Hypothesis {
  std::string name;
  bool holds = false;
  bool overridden = false;
  /// Decided by sampling rather than by an exact LP.
  bool sampled = false;
  std::string detail;
};

enum class Verdict { Certified, NoCertificate, HypothesisFailure };
const char* to_string(Verdict v);

struct CertifyOptions {
  /// Unset: the smallest kappa validated by the calmness probe.
  std::optional<double> kappa;
  /// Try the kappa grid in order and keep the first success.
  bool kappa_sweep = false;
  std::vector<double> kappa_grid = default_kappa_grid();
  bool override_isc = false;
  bool override_calmness = false;
  valuefn::GridSpec grid;
  SampleParams params;
};

struct CertifyReport {
  Verdict verdict = Verdict::NoCertificate;
  std::optional<Certificate> certificate;
  double kappa = 0.0;
  double margin = 0.0;
  std::size_t combinations = 0;
  std::vector<Hypothesis> hypotheses;
  /// Range used for the value-function subgradient.
  geom::PolyhedronUnion value_set;
  std::optional<CalmnessReport> calmness;
  std::string diagnostic;
  std::string caveat;
};

/// Convexified conditions over the coderivative estimate of the value
/// function subdifferential.
CertifyReport certify_convexified(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar,
                                  const CertifyOptions& opts);

/// Conditions over the regular subdifferential of the grid value function
/// and unconvexified subdifferentials; needs no upper constraints.
CertifyReport certify_regular(const BilevelProblem& bp, const Vec& xbar, const Vec& ybar, const CertifyOptions& opts);

/// Outer approximation of the regular subdifferential of the grid value
/// function from difference quotients; nullopt when empty.
std::optional<geom::Polytope> regular_value_subdiff(const valuefn::ParametricProblem& lower, const Vec& xbar,
                                                    const valuefn::GridSpec& grid, const SampleParams& params);

}  // namespace varcalc::bilevel
