#pragma once

#include <cstdint>

#include "gaitopt/program.hpp"
#include "gaitopt/types.hpp"

namespace gaitopt {

/// Local convex model of one term: exact-to-first-order affine models for
/// constraints, PSD quadratic models for costs (Gauss-Newton when the
/// term exposes residual structure, damped gradient otherwise).
struct ConvexModel {
  enum class Kind { QuadraticCost, AffineConstraint };
  Kind kind = Kind::AffineConstraint;
  TermKind term_kind = TermKind::Cost;
  int term_index = -1;
  Vector base_point;
  double value0 = 0.0;   // model(base_point), exact by construction
  Vector gradient;
  Matrix hessian;        // QuadraticCost only, PSD

  double value_at(const Vector& x) const {
    Vector dlt = x - base_point;
    double v = value0 + gradient.dot(dlt);
    if (kind == Kind::QuadraticCost) v += 0.5 * dlt.dot(hessian * dlt);
    return v;
  }
};

struct TrustRegion {
  double radius = 0.1;       // box half-width per coordinate (rad / m)
  double expand = 1.5;
  double shrink = 0.25;
  double accept_ratio = 0.1;
  double min_radius = 1e-5;
  double max_radius = 10.0;
};

struct SqpConfig {
  PenaltyConfig penalty;
  double fraction = 1.0;     // 1.0 = classic SQP
  std::uint64_t seed = 0;
  int max_convexify_iterations = 50;  // per penalty rung
  TrustRegion trust;
  double cost_damping = 1e-2;  // lambda*I hessian for residual-less costs
  bool record_history = false;
  double time_limit_s = std::numeric_limits<double>::infinity();
};

ConvexModel convexify(const ScalarTerm& term, int term_index, const Vector& x0,
                      double cost_damping = 1e-2);

struct SubproblemResult {
  Vector x_candidate;
  double model_decrease;  // model merit at x0 minus at candidate
};

/// Minimize the convexified penalty merit over the trust box intersected
/// with the feasible set. Constraint models enter through slack
/// variables priced at mu; models that keep one sign across the box are
/// folded in without a slack. Throws std::logic_error if the slack QP
/// reports infeasible (it cannot, for x0 in the feasible set).
SubproblemResult sqp_subproblem(const std::vector<ConvexModel>& models,
                                double mu, const Vector& x0,
                                const TrustRegion& trust,
                                const LinearFeasibleSet& feasible_set);

/// Trust-region penalty SQP over the mu ladder (fraction fixed at 1).
SolveReport sqp_solve(const SumStructuredProgram& program, const Vector& x0,
                      const SqpConfig& config);

/// Incremental SQP: per convexify iteration only a sampled subset of
/// models is rebuilt (the first iteration of each rung rebuilds all);
/// stale models keep their old base point. fraction = 1 reproduces
/// sqp_solve iterate-for-iterate.
SolveReport isqp_solve(const SumStructuredProgram& program, const Vector& x0,
                       const SqpConfig& config);

}  // namespace gaitopt
