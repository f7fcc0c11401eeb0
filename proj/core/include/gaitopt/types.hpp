#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaitopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;

/// Role of a term inside a sum-structured program.
enum class TermKind { Cost, Inequality, Equality };

inline const char* to_string(TermKind k) {
  switch (k) {
    case TermKind::Cost: return "cost";
    case TermKind::Inequality: return "inequality";
    case TermKind::Equality: return "equality";
  }
  return "?";
}

/// Thrown when a term evaluator fails (e.g. kinematics domain error).
/// Carries the term label so failures are attributable in reports.
class TermEvalError : public std::runtime_error {
 public:
  TermEvalError(std::string label, const std::string& what)
      : std::runtime_error("term '" + label + "': " + what),
        label_(std::move(label)) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

/// Outcome of one solver run on one problem.
///
/// `cost` is the raw task objective (sum of cost terms, penalties
/// excluded); `success` must agree with `max_violation <= tolerance`.
struct SolveReport {
  bool success = false;
  double cost = 0.0;
  double max_violation = 0.0;
  double time_s = 0.0;
  int restarts_used = 0;
  int iterations = 0;
  double mu_final = 0.0;       // penalty coefficient the solution came from
  bool line_search_flag = false;  // some step fell back / hit the zoom cap
  std::string detail;          // free-form diagnostic (failing window etc.)
  Vector x;                    // returned configuration(s), stacked
  // Iterate trace, recorded only when a config asks for it.
  std::vector<Vector> history;
};

}  // namespace gaitopt
