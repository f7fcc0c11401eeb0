#include "gaitopt/sqp.hpp"

#include <chrono>
#include <cmath>

#include "gaitopt/first_order.hpp"
#include "gaitopt/qp.hpp"

namespace gaitopt {

ConvexModel convexify(const ScalarTerm& term, int term_index, const Vector& x0,
                      double cost_damping) {
  ConvexModel m;
  m.term_index = term_index;
  m.term_kind = term.kind;
  m.base_point = x0;
  if (term.kind == TermKind::Cost) {
    m.kind = ConvexModel::Kind::QuadraticCost;
    if (term.residual) {
      ResidualEval r = term.residual(x0);
      m.value0 = r.residual.squaredNorm();
      m.gradient = 2.0 * r.jacobian.transpose() * r.residual;
      m.hessian = 2.0 * r.jacobian.transpose() * r.jacobian;
    } else {
      TermEval e = term.eval(x0);
      m.value0 = e.value;
      m.gradient = e.gradient;
      m.hessian = cost_damping *
                  Matrix::Identity(x0.size(), x0.size());
    }
  } else {
    m.kind = ConvexModel::Kind::AffineConstraint;
    TermEval e = term.eval(x0);
    m.value0 = e.value;
    m.gradient = e.gradient;
  }
  return m;
}

namespace {

double model_merit(const std::vector<ConvexModel>& models, double mu,
                   const Vector& x) {
  double v = 0.0;
  for (const auto& m : models) {
    double mv = m.value_at(x);
    if (m.term_kind == TermKind::Cost)
      v += mv;
    else
      v += mu * exact_penalty(m.term_kind, mv);
  }
  return v;
}

}  // namespace

SubproblemResult sqp_subproblem(const std::vector<ConvexModel>& models,
                                double mu, const Vector& x0,
                                const TrustRegion& trust,
                                const LinearFeasibleSet& feasible_set) {
  const int d = static_cast<int>(x0.size());
  const double scale = std::max(1.0, mu);

  // Trust box in step coordinates dx = x - x0.
  Vector lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = std::max(-trust.radius, feasible_set.lower[i] - x0[i]);
    hi[i] = std::min(trust.radius, feasible_set.upper[i] - x0[i]);
    if (lo[i] > hi[i]) {  // x0 off the box by rounding
      double mid = 0.5 * (lo[i] + hi[i]);
      lo[i] = hi[i] = mid;
    }
  }

  Matrix Qxx = Matrix::Zero(d, d);
  Vector cx = Vector::Zero(d);
  struct SlackTerm {
    const ConvexModel* m;
    double b0;  // model value at x0
  };
  std::vector<SlackTerm> slacks;

  for (const auto& m : models) {
    if (m.kind == ConvexModel::Kind::QuadraticCost) {
      Vector d0 = x0 - m.base_point;
      Qxx += m.hessian;
      cx += m.gradient + m.hessian * d0;
      continue;
    }
    double b0 = m.value_at(x0);
    // Sign screen over the trust box: a model that cannot change sign
    // needs no slack variable.
    double mmin = b0, mmax = b0;
    for (int i = 0; i < d; ++i) {
      double a = m.gradient[i] * lo[i], b = m.gradient[i] * hi[i];
      mmin += std::min(a, b);
      mmax += std::max(a, b);
    }
    if (m.term_kind == TermKind::Inequality) {
      if (mmax <= 0.0) continue;          // inactive across the box
      if (mmin >= 0.0) {                  // always active: t == model
        cx += mu * m.gradient;
        continue;
      }
    } else {  // equality
      if (mmin >= 0.0) {
        cx += mu * m.gradient;
        continue;
      }
      if (mmax <= 0.0) {
        cx -= mu * m.gradient;
        continue;
      }
    }
    slacks.push_back({&m, b0});
  }

  const int ns = static_cast<int>(slacks.size());
  const int nz = d + ns;
  QuadraticProgram qp;
  qp.Q = Matrix::Zero(nz, nz);
  qp.Q.topLeftCorner(d, d) = Qxx / scale;
  qp.c = Vector::Zero(nz);
  qp.c.head(d) = cx / scale;
  qp.c.tail(ns).setConstant(mu / scale);

  qp.feasible_set = LinearFeasibleSet::unbounded(nz);
  qp.feasible_set.lower.head(d) = lo;
  qp.feasible_set.upper.head(d) = hi;
  qp.feasible_set.lower.tail(ns).setZero();

  const int eq_rows = static_cast<int>(feasible_set.eq_A.rows());
  if (eq_rows > 0) {
    qp.feasible_set.eq_A = Matrix::Zero(eq_rows, nz);
    qp.feasible_set.eq_A.leftCols(d) = feasible_set.eq_A;
    qp.feasible_set.eq_b = feasible_set.eq_b - feasible_set.eq_A * x0;
  }
  int model_rows = 0;
  for (const auto& s : slacks)
    model_rows += (s.m->term_kind == TermKind::Equality) ? 2 : 1;
  const int set_rows = static_cast<int>(feasible_set.ineq_A.rows());
  qp.feasible_set.ineq_A = Matrix::Zero(set_rows + model_rows, nz);
  qp.feasible_set.ineq_b = Vector::Zero(set_rows + model_rows);
  if (set_rows > 0) {
    qp.feasible_set.ineq_A.topLeftCorner(set_rows, d) = feasible_set.ineq_A;
    qp.feasible_set.ineq_b.head(set_rows) =
        feasible_set.ineq_b - feasible_set.ineq_A * x0;
  }
  Vector hint = Vector::Zero(nz);
  int row = set_rows;
  for (int j = 0; j < ns; ++j) {
    const auto& s = slacks[static_cast<size_t>(j)];
    // model <= t:  g.dx - t <= -b0
    qp.feasible_set.ineq_A.row(row).head(d) = s.m->gradient;
    qp.feasible_set.ineq_A(row, d + j) = -1.0;
    qp.feasible_set.ineq_b[row] = -s.b0;
    ++row;
    if (s.m->term_kind == TermKind::Equality) {
      // -model <= t: -g.dx - t <= b0
      qp.feasible_set.ineq_A.row(row).head(d) = -s.m->gradient;
      qp.feasible_set.ineq_A(row, d + j) = -1.0;
      qp.feasible_set.ineq_b[row] = s.b0;
      ++row;
    }
    hint[d + j] = (s.m->term_kind == TermKind::Equality) ? std::abs(s.b0)
                                                         : std::max(0.0, s.b0);
  }

  QpSolution qs = solve_qp(qp, hint);
  if (qs.status == QpStatus::Infeasible)
    throw std::logic_error("sqp_subproblem: slack QP infeasible (" +
                           qs.certificate + ")");

  SubproblemResult out;
  out.x_candidate = x0 + qs.x_star.head(d);
  out.model_decrease =
      model_merit(models, mu, x0) - model_merit(models, mu, out.x_candidate);
  return out;
}

namespace {

SolveReport sqp_core(const SumStructuredProgram& program, const Vector& x0,
                     const SqpConfig& config, double fraction) {
  config.penalty.validate();
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("sqp: fraction out of (0,1]");
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  SolveReport rep;
  const auto& set = program.feasible_set;
  Vector x = set.box_only() ? set.clamp(x0) : project(x0, set);
  const int n = program.num_terms();
  const double tol = config.penalty.tolerance;

  MiniBatchSampler sampler{n, fraction, config.seed, 0};
  std::vector<ConvexModel> models(static_cast<size_t>(n));
  std::vector<int> all = all_indices(program);

  TrustRegion tr = config.trust;

  if (config.record_history) rep.history.push_back(x);

  ProgramValues vx = evaluate_values(program, x);

  bool best_valid = false, best_feasible = false;
  double best_cost = 0.0, best_viol = 0.0,
         best_mu = config.penalty.mu_ladder[0];
  Vector best_x = x;
  auto consider = [&](const Vector& xc, const ProgramValues& ev, double mu) {
    bool feas = ev.max_violation() <= tol;
    bool better;
    if (!best_valid)
      better = true;
    else if (feas != best_feasible)
      better = feas;
    else if (feas)
      better = ev.cost < best_cost;
    else
      better = ev.max_violation() < best_viol;
    if (better) {
      best_valid = true;
      best_feasible = feas;
      best_cost = ev.cost;
      best_viol = ev.max_violation();
      best_x = xc;
      best_mu = mu;
    }
  };
  consider(x, vx, best_mu);

  bool stop_all = false;
  for (double mu : config.penalty.mu_ladder) {
    if (stop_all) break;
    rep.mu_final = mu;
    int stall = 0;
    bool rung_converged = false;
    for (int k = 1; k <= config.max_convexify_iterations; ++k) {
      std::vector<int>* batch = &all;
      std::vector<int> sampled;
      if (fraction < 1.0 && k > 1) {
        sampled = sampler.sample();
        batch = &sampled;
      }
      for (int i : *batch)
        models[static_cast<size_t>(i)] =
            convexify(program.term(i), i, x, config.cost_damping);

      // Inner trust-region loop: re-solve at shrinking radius until a
      // step is accepted or the model has no room to improve.
      bool accepted = false;
      double last_model_dec = 0.0;
      while (tr.radius >= tr.min_radius) {
        SubproblemResult sub = sqp_subproblem(models, mu, x, tr, set);
        last_model_dec = sub.model_decrease;
        if (sub.model_decrease < 1e-7) break;  // model-optimal here
        ProgramValues vc = evaluate_values(program, sub.x_candidate);
        double true_dec = vx.merit(mu) - vc.merit(mu);
        double ratio = true_dec / sub.model_decrease;
        if (ratio >= tr.accept_ratio) {
          x = sub.x_candidate;
          vx = vc;
          consider(x, vx, mu);
          if (config.record_history) rep.history.push_back(x);
          tr.radius = std::min(tr.radius * tr.expand, tr.max_radius);
          accepted = true;
          break;
        }
        tr.radius *= tr.shrink;
      }
      ++rep.iterations;

      if (tr.radius < tr.min_radius) {
        tr.radius = tr.min_radius;  // keep a usable radius for the next rung
        rung_converged = true;
        break;
      }
      stall = (last_model_dec < 1e-7) ? stall + 1 : 0;
      if (stall >= 2) {
        rung_converged = true;
        break;
      }
      if (accepted && vx.max_violation() <= tol) break;  // advance mu
      if (elapsed() > config.time_limit_s) {
        stop_all = true;
        break;
      }
    }
    if (rung_converged && vx.max_violation() <= tol)
      stop_all = true;  // feasible and the model has flattened
  }

  ProgramValues fin = evaluate_values(program, best_x);
  rep.success = fin.max_violation() <= tol;
  rep.cost = fin.cost;
  rep.max_violation = fin.max_violation();
  rep.mu_final = best_mu;
  rep.time_s = elapsed();
  rep.x = best_x;
  return rep;
}

}  // namespace

SolveReport sqp_solve(const SumStructuredProgram& program, const Vector& x0,
                      const SqpConfig& config) {
  return sqp_core(program, x0, config, 1.0);
}

SolveReport isqp_solve(const SumStructuredProgram& program, const Vector& x0,
                       const SqpConfig& config) {
  return sqp_core(program, x0, config, config.fraction);
}

}  // namespace gaitopt
