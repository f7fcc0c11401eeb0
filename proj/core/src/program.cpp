#include "gaitopt/program.hpp"

#include <cmath>
#include <cstdio>

namespace gaitopt {

TermEval ScalarTerm::eval(const Vector& x) const {
  try {
    return evaluator(x);
  } catch (const TermEvalError&) {
    throw;
  } catch (const std::exception& e) {
    throw TermEvalError(label, e.what());
  }
}

LinearFeasibleSet LinearFeasibleSet::unbounded(int d) {
  LinearFeasibleSet s;
  const double inf = std::numeric_limits<double>::infinity();
  s.lower = Vector::Constant(d, -inf);
  s.upper = Vector::Constant(d, inf);
  s.eq_A.resize(0, d);
  s.eq_b.resize(0);
  s.ineq_A.resize(0, d);
  s.ineq_b.resize(0);
  return s;
}

bool LinearFeasibleSet::contains(const Vector& x, double tol) const {
  return violation(x) <= tol;
}

double LinearFeasibleSet::violation(const Vector& x) const {
  double v = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    v = std::max(v, lower[i] - x[i]);
    v = std::max(v, x[i] - upper[i]);
  }
  if (eq_A.rows() > 0) {
    Vector r = eq_A * x - eq_b;
    v = std::max(v, r.cwiseAbs().maxCoeff());
  }
  if (ineq_A.rows() > 0) {
    Vector r = ineq_A * x - ineq_b;
    v = std::max(v, r.maxCoeff());
  }
  return v;
}

Vector LinearFeasibleSet::clamp(const Vector& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

const ScalarTerm& SumStructuredProgram::term(int i) const {
  const int nf = static_cast<int>(costs.size());
  const int ng = static_cast<int>(ineqs.size());
  if (i < nf) return costs[static_cast<size_t>(i)];
  if (i < nf + ng) return ineqs[static_cast<size_t>(i - nf)];
  return eqs[static_cast<size_t>(i - nf - ng)];
}

void PenaltyConfig::validate() const {
  if (mu_ladder.empty()) throw std::invalid_argument("mu ladder is empty");
  double prev = 0.0;
  for (double mu : mu_ladder) {
    if (!(mu > prev)) throw std::invalid_argument("mu ladder must be strictly increasing and positive");
    prev = mu;
  }
  if (!(smoothing_w > 0)) throw std::invalid_argument("smoothing_w must be positive");
  if (!(tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
}

double exact_penalty(TermKind kind, double y) {
  switch (kind) {
    case TermKind::Inequality: return std::max(0.0, y);
    case TermKind::Equality: return std::abs(y);
    case TermKind::Cost: break;
  }
  throw std::invalid_argument("exact_penalty: cost terms have no penalty");
}

double smooth_penalty_scale(TermKind kind, double y, double w) {
  if (!(w > 0)) throw std::invalid_argument("smoothing w must be positive");
  if (kind == TermKind::Inequality && y <= 0.0) return 0.0;
  // -1 + 2*sigma(w*y) == tanh(w*y/2); tanh saturates instead of
  // overflowing, so no branching on sign(y) is needed.
  return std::tanh(0.5 * w * y);
}

Vector smooth_penalty_gradient(TermKind kind, double y, const Vector& grad_y,
                               double w) {
  return smooth_penalty_scale(kind, y, w) * grad_y;
}

PenalizedValue penalized_objective(const SumStructuredProgram& program,
                                   const Vector& x, double mu) {
  PenalizedValue out;
  out.per_term = Vector::Zero(program.num_terms());
  int idx = 0;
  for (const auto& t : program.costs) {
    out.per_term[idx++] = t.eval(x).value;
  }
  for (const auto& t : program.ineqs) {
    out.per_term[idx++] = mu * exact_penalty(TermKind::Inequality, t.eval(x).value);
  }
  for (const auto& t : program.eqs) {
    out.per_term[idx++] = mu * exact_penalty(TermKind::Equality, t.eval(x).value);
  }
  out.value = out.per_term.sum();
  return out;
}

Vector penalized_term_gradient(const SumStructuredProgram& program, int index,
                               const Vector& x, double mu, double w) {
  const ScalarTerm& t = program.term(index);
  TermEval e = t.eval(x);
  if (t.kind == TermKind::Cost) return e.gradient;
  return mu * smooth_penalty_scale(t.kind, e.value, w) * e.gradient;
}

Vector penalized_gradient(const SumStructuredProgram& program, const Vector& x,
                          double mu, const std::vector<int>& batch, double w) {
  Vector g = Vector::Zero(program.d);
  for (int i : batch) g += penalized_term_gradient(program, i, x, mu, w);
  return g;
}

double penalized_batch_value(const SumStructuredProgram& program,
                             const Vector& x, double mu,
                             const std::vector<int>& batch) {
  double v = 0.0;
  for (int i : batch) {
    const ScalarTerm& t = program.term(i);
    double y = t.eval(x).value;
    v += (t.kind == TermKind::Cost) ? y : mu * exact_penalty(t.kind, y);
  }
  return v;
}

std::vector<ConstraintViolation> constraint_report(
    const SumStructuredProgram& program, const Vector& x) {
  std::vector<ConstraintViolation> out;
  out.reserve(program.ineqs.size() + program.eqs.size() +
              static_cast<size_t>(2 * program.d));
  for (const auto& t : program.ineqs) {
    out.push_back({t.label, TermKind::Inequality,
                   exact_penalty(TermKind::Inequality, t.eval(x).value)});
  }
  for (const auto& t : program.eqs) {
    out.push_back({t.label, TermKind::Equality,
                   exact_penalty(TermKind::Equality, t.eval(x).value)});
  }
  const auto& set = program.feasible_set;
  char buf[64];
  for (int i = 0; i < program.d; ++i) {
    double v = std::max(0.0, std::max(set.lower[i] - x[i], x[i] - set.upper[i]));
    if (std::isfinite(set.lower[i]) || std::isfinite(set.upper[i])) {
      std::snprintf(buf, sizeof(buf), "box[%d]", i);
      out.push_back({buf, TermKind::Inequality, v});
    }
  }
  for (int r = 0; r < set.eq_A.rows(); ++r) {
    double v = std::abs(set.eq_A.row(r).dot(x) - set.eq_b[r]);
    std::snprintf(buf, sizeof(buf), "lin_eq[%d]", r);
    out.push_back({buf, TermKind::Equality, v});
  }
  for (int r = 0; r < set.ineq_A.rows(); ++r) {
    double v = std::max(0.0, set.ineq_A.row(r).dot(x) - set.ineq_b[r]);
    std::snprintf(buf, sizeof(buf), "lin_ineq[%d]", r);
    out.push_back({buf, TermKind::Inequality, v});
  }
  return out;
}

double max_violation(const SumStructuredProgram& program, const Vector& x) {
  double m = 0.0;
  for (const auto& t : program.ineqs)
    m = std::max(m, exact_penalty(TermKind::Inequality, t.eval(x).value));
  for (const auto& t : program.eqs)
    m = std::max(m, exact_penalty(TermKind::Equality, t.eval(x).value));
  m = std::max(m, program.feasible_set.violation(x));
  return m;
}

std::vector<double> term_values(const SumStructuredProgram& program,
                                const Vector& x) {
  std::vector<double> v;
  v.reserve(static_cast<size_t>(program.num_terms()));
  for (const auto& t : program.costs) v.push_back(t.eval(x).value);
  for (const auto& t : program.ineqs) v.push_back(t.eval(x).value);
  for (const auto& t : program.eqs) v.push_back(t.eval(x).value);
  return v;
}

ProgramValues evaluate_values(const SumStructuredProgram& program,
                              const Vector& x) {
  ProgramValues out;
  for (const auto& t : program.costs) out.cost += t.eval(x).value;
  for (const auto& t : program.ineqs) {
    double v = exact_penalty(TermKind::Inequality, t.eval(x).value);
    out.penalty_sum += v;
    out.max_term_violation = std::max(out.max_term_violation, v);
  }
  for (const auto& t : program.eqs) {
    double v = exact_penalty(TermKind::Equality, t.eval(x).value);
    out.penalty_sum += v;
    out.max_term_violation = std::max(out.max_term_violation, v);
  }
  out.set_violation = program.feasible_set.violation(x);
  return out;
}

double cost_value(const SumStructuredProgram& program, const Vector& x) {
  double v = 0.0;
  for (const auto& t : program.costs) v += t.eval(x).value;
  return v;
}

std::vector<int> all_indices(const SumStructuredProgram& program) {
  std::vector<int> idx(static_cast<size_t>(program.num_terms()));
  for (int i = 0; i < program.num_terms(); ++i) idx[static_cast<size_t>(i)] = i;
  return idx;
}

}  // namespace gaitopt
