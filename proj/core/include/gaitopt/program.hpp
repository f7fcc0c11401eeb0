#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gaitopt/types.hpp"

namespace gaitopt {

/// Value and gradient of one scalar term at a point.
struct TermEval {
  double value = 0.0;
  Vector gradient;  // length d
};

/// Optional sum-of-squares structure of a cost term: value = ||r(x)||^2.
/// Exposing it lets the convexifier build a Gauss-Newton model.
struct ResidualEval {
  Vector residual;   // length m
  Matrix jacobian;   // m x d
};

/// One scalar cost or constraint of a sum-structured program.
/// Evaluators must be pure functions of x (safe to call concurrently).
struct ScalarTerm {
  TermKind kind = TermKind::Cost;
  std::string label;
  std::function<TermEval(const Vector&)> evaluator;
  // Present only for sum-of-squares costs.
  std::function<ResidualEval(const Vector&)> residual;

  /// Evaluate, rethrowing any failure as TermEvalError with this label.
  TermEval eval(const Vector& x) const;
};

/// Convex linear feasible set: box bounds plus affine rows.
/// Conventions: eq_A x = eq_b, ineq_A x <= ineq_b.
struct LinearFeasibleSet {
  Vector lower;   // length d, -inf allowed
  Vector upper;   // length d, +inf allowed
  Matrix eq_A;    // r_e x d (may be 0 x d)
  Vector eq_b;
  Matrix ineq_A;  // r_i x d
  Vector ineq_b;

  static LinearFeasibleSet unbounded(int d);
  int dim() const { return static_cast<int>(lower.size()); }
  bool box_only() const { return eq_A.rows() == 0 && ineq_A.rows() == 0; }
  bool contains(const Vector& x, double tol = 1e-8) const;
  /// Largest bound/row violation at x (0 when inside).
  double violation(const Vector& x) const;
  /// Coordinatewise clamp; exact projection only for box-only sets.
  Vector clamp(const Vector& x) const;
};

/// min sum f_i(x)  s.t.  g_i(x) <= 0, h_i(x) = 0, x in feasible_set.
///
/// Terms carry a stable unified index: costs first, then inequalities,
/// then equalities. Minibatch solvers index terms by that order.
struct SumStructuredProgram {
  int d = 0;
  std::vector<ScalarTerm> costs;
  std::vector<ScalarTerm> ineqs;
  std::vector<ScalarTerm> eqs;
  LinearFeasibleSet feasible_set;

  int num_terms() const {
    return static_cast<int>(costs.size() + ineqs.size() + eqs.size());
  }
  /// Term by unified index (0-based).
  const ScalarTerm& term(int i) const;
  TermKind term_kind(int i) const { return term(i).kind; }
};

/// Penalty continuation settings: the mu ladder, the sharpness w of the
/// smooth penalty-gradient approximation, and the constraint tolerance.
struct PenaltyConfig {
  std::vector<double> mu_ladder = {1e2, 1e3, 1e4, 1e5, 1e6, 1e7,
                                   1e8, 1e9, 1e10, 1e11, 1e12};
  double smoothing_w = 100.0;
  double tolerance = 1e-3;

  void validate() const;
};

/// Exact penalty: max(0, y) for inequalities, |y| for equalities.
double exact_penalty(TermKind kind, double y);

/// Scale factor of the smooth penalty gradient: tanh(w*y/2) for
/// equalities (the stable form of -1 + 2*logistic(w*y)), gated to zero
/// on the satisfied side for inequalities. Always in (-1, 1).
double smooth_penalty_scale(TermKind kind, double y, double w);

/// Gradient of the smooth penalty approximation: scale * grad_y.
Vector smooth_penalty_gradient(TermKind kind, double y, const Vector& grad_y,
                               double w);

struct PenalizedValue {
  double value = 0.0;       // sum f_i + mu * sum penalties
  Vector per_term;          // contribution of each unified term index
};

/// Eq-(3a)-style penalized objective with per-term breakdown.
PenalizedValue penalized_objective(const SumStructuredProgram& program,
                                   const Vector& x, double mu);

/// Gradient of the penalized objective restricted to `batch` (unified
/// term indices). Cost terms contribute their raw gradient; constraint
/// terms contribute mu * smooth_penalty_gradient. Accumulation follows
/// ascending batch order so partial sums are exactly linear in batches.
Vector penalized_gradient(const SumStructuredProgram& program, const Vector& x,
                          double mu, const std::vector<int>& batch, double w);

/// Single-term gradient of the penalized objective (same convention).
Vector penalized_term_gradient(const SumStructuredProgram& program, int index,
                               const Vector& x, double mu, double w);

/// Batch-restricted penalized objective value (full value when batch
/// covers every index). Used by stochastic line searches.
double penalized_batch_value(const SumStructuredProgram& program,
                             const Vector& x, double mu,
                             const std::vector<int>& batch);

struct ConstraintViolation {
  std::string label;
  TermKind kind = TermKind::Inequality;
  double violation = 0.0;
};

/// Violations of every nonlinear constraint term plus every box/affine
/// row of the feasible set. Feasible iff the max is <= tolerance.
std::vector<ConstraintViolation> constraint_report(
    const SumStructuredProgram& program, const Vector& x);

double max_violation(const SumStructuredProgram& program, const Vector& x);

/// Values of all terms at x, by unified index (no gradients).
std::vector<double> term_values(const SumStructuredProgram& program,
                                const Vector& x);

/// Value-only sweep over a program: task cost, exact-penalty mass, and
/// violation maxima in one pass.
struct ProgramValues {
  double cost = 0.0;          // sum of cost terms
  double penalty_sum = 0.0;   // sum of exact penalties over constraints
  double max_term_violation = 0.0;
  double set_violation = 0.0;
  double merit(double mu) const { return cost + mu * penalty_sum; }
  double max_violation() const {
    return std::max(max_term_violation, set_violation);
  }
};

ProgramValues evaluate_values(const SumStructuredProgram& program,
                              const Vector& x);

/// Raw task objective: sum of cost terms only.
double cost_value(const SumStructuredProgram& program, const Vector& x);

/// All unified indices 0..n-1.
std::vector<int> all_indices(const SumStructuredProgram& program);

}  // namespace gaitopt
