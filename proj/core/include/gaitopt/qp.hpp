#pragma once

#include <string>

#include "gaitopt/program.hpp"
#include "gaitopt/types.hpp"

namespace gaitopt {

/// min 0.5 x'Qx + c'x  subject to  x in feasible_set.
/// Q must be symmetric positive semidefinite.
struct QuadraticProgram {
  Matrix Q;
  Vector c;
  LinearFeasibleSet feasible_set;
};

enum class QpStatus { Optimal, Infeasible, MaxIter };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
  }
  return "?";
}

struct QpSolution {
  Vector x_star;
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIter;
  /// max of stationarity, primal feasibility and complementarity
  /// residuals (inf norms), measured on the original problem data.
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  /// When infeasible: label of the maximally violated row.
  std::string certificate;
};

struct QpOptions {
  int max_iterations = 0;   // 0 = choose from problem size
  bool paranoid = false;    // verify incremental factorizations (tests)
};

/// Dense primal active-set solver. Equality rows (including box bounds
/// with lower == upper) are eliminated through an orthonormal null-space
/// basis before the active-set iteration; the working set then only
/// holds inequality rows. Deterministic: ties broken by lowest row index.
QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& opts = {});

/// Same, warm-started from a point hint (need not be feasible).
QpSolution solve_qp(const QuadraticProgram& qp, const Vector& x_hint,
                    const QpOptions& opts = {});

/// Euclidean projection onto the set: argmin ||z - x||^2. Box-only sets
/// take a closed-form clamp; otherwise a QP with Q = 2I is solved.
/// Throws std::runtime_error when the set is infeasible.
Vector project(const Vector& x, const LinearFeasibleSet& set);

}  // namespace gaitopt
