#include "gaitopt/first_order.hpp"

#include <chrono>
#include <cmath>

#include "gaitopt/qp.hpp"

namespace gaitopt {

std::vector<int> MiniBatchSampler::sample() {
  const int k = batch_size();
  std::uint64_t c = counter++;
  if (k >= n) {
    std::vector<int> all(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
    return all;
  }
  Rng rng(seed, c);
  return sample_without_replacement(rng, n, k);
}

Vector AdamState::direction(const Vector& g, bool nesterov) {
  ++k;
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
  Vector m_hat;
  if (nesterov) {
    m_hat = beta1 * m / (1.0 - std::pow(beta1, k + 1)) +
            (1.0 - beta1) * g / (1.0 - std::pow(beta1, k));
  } else {
    m_hat = m / (1.0 - std::pow(beta1, k));
  }
  Vector v_hat = v / (1.0 - std::pow(beta2, k));
  return m_hat.array() / (v_hat.array().sqrt() + epsilon);
}

Vector GradientMemory::recompute_sum() const {
  Vector s = Vector::Zero(y.cols());
  for (int i = 0; i < y.rows(); ++i) s += y.row(i);
  return s;
}

const Vector& incremental_gradient(GradientMemory& memory,
                                   const SumStructuredProgram& program,
                                   const Vector& x, double mu,
                                   const std::vector<int>& batch, double w) {
  const int n = program.num_terms();
  const bool full = !memory.initialized || static_cast<int>(batch.size()) >= n;
  if (!memory.initialized) {
    memory.y = Matrix::Zero(n, program.d);
    memory.running_sum = Vector::Zero(program.d);
    memory.refresh_count = 0;
  }
  if (full) {
    // Ordered full refresh; sum accumulation matches penalized_gradient.
    Vector s = Vector::Zero(program.d);
    for (int i = 0; i < n; ++i) {
      Vector gi = penalized_term_gradient(program, i, x, mu, w);
      memory.y.row(i) = gi;
      s += gi;
    }
    memory.running_sum = s;
    memory.initialized = true;
  } else {
    for (int i : batch) {
      Vector gi = penalized_term_gradient(program, i, x, mu, w);
      memory.running_sum += gi - Vector(memory.y.row(i));
      memory.y.row(i) = gi;
    }
    // Bound incremental drift.
    if (++memory.refresh_count % 256 == 0)
      memory.running_sum = memory.recompute_sum();
  }
  return memory.running_sum;
}

namespace {

// Value and path derivative of the batch-restricted penalized objective
// along alpha -> project(x - alpha * dir). For box sets the projection
// Jacobian is the diagonal clip mask; affine-row sets fall back to the
// unmasked directional derivative.
std::pair<double, double> path_eval(const SumStructuredProgram& program,
                                    const Vector& x, const Vector& dir,
                                    double alpha, double mu,
                                    const std::vector<int>& batch, double w) {
  const auto& set = program.feasible_set;
  Vector p = x - alpha * dir;
  const bool box = set.box_only();
  if (box)
    p = set.clamp(p);
  else if (set.eq_A.rows() > 0 || set.ineq_A.rows() > 0)
    p = project(p, set);
  double value = 0.0;
  Vector grad = Vector::Zero(program.d);
  for (int i : batch) {
    const ScalarTerm& t = program.term(i);
    TermEval e = t.eval(p);
    if (t.kind == TermKind::Cost) {
      value += e.value;
      grad += e.gradient;
    } else {
      value += mu * exact_penalty(t.kind, e.value);
      grad += mu * smooth_penalty_scale(t.kind, e.value, w) * e.gradient;
    }
  }
  double dphi = 0.0;
  for (int i = 0; i < program.d; ++i) {
    bool clipped = box && (p[i] <= set.lower[i] || p[i] >= set.upper[i]);
    if (!clipped) dphi -= grad[i] * dir[i];
  }
  return {value, dphi};
}

}  // namespace

Vector gd_step(const SumStructuredProgram& program, const Vector& x, double mu,
               const std::vector<int>& batch, const GdConfig& config,
               GdState& state) {
  if (batch.empty()) throw std::invalid_argument("gd_step: empty batch");
  const double w = config.penalty.smoothing_w;

  Vector g;
  if (config.mode == GdMode::Incremental)
    g = incremental_gradient(state.memory, program, x, mu, batch, w);
  else
    g = penalized_gradient(program, x, mu, batch, w);

  Vector dir;
  switch (config.update_rule) {
    case UpdateRule::Plain: dir = g; break;
    case UpdateRule::Adam: dir = state.adam.direction(g, false); break;
    case UpdateRule::Nadam: dir = state.adam.direction(g, true); break;
  }
  if (dir.cwiseAbs().maxCoeff() < 1e-15) return x;  // stationary

  // Incremental directions approximate the full gradient, so their step
  // length is searched on the full objective; batch modes search the
  // batch objective.
  static const std::vector<int> kEmpty;
  std::vector<int> all;
  const std::vector<int>* ls_batch = &batch;
  if (config.mode == GdMode::Incremental) {
    all = all_indices(program);
    ls_batch = &all;
  }

  ScalarFn phi = [&](double alpha) {
    return path_eval(program, x, dir, alpha, mu, *ls_batch, w);
  };

  // Fallbacks take a 1e-4-sized step: with raw penalty gradients the
  // direction magnitude grows with mu, so a fixed step factor would jump
  // far outside the region of interest.
  const double fallback = 1e-4 / std::max(1.0, dir.cwiseAbs().maxCoeff());
  double trial = state.alpha_prev > 0 ? 0.5 * state.alpha_prev : 1.0;
  double alpha;
  try {
    LineSearchResult r =
        wolfe_line_search(phi, trial, config.wolfe_c1, config.wolfe_c2);
    if (!r.satisfied) state.line_search_flag = true;
    alpha = (r.alpha > 0.0) ? r.alpha : fallback;
  } catch (const std::invalid_argument&) {
    state.line_search_flag = true;  // non-descent (stale memory / momentum)
    alpha = fallback;
  }
  state.alpha_prev = alpha;

  Vector next = x - alpha * dir;
  const auto& set = program.feasible_set;
  return set.box_only() ? set.clamp(next) : project(next, set);
}

SolveReport solve_first_order(const SumStructuredProgram& program,
                              const Vector& x0, const GdConfig& config) {
  config.penalty.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  SolveReport rep;
  const auto& set = program.feasible_set;
  Vector x = set.box_only() ? set.clamp(x0) : project(x0, set);

  GdState state;
  const double eff_fraction =
      (config.mode == GdMode::Full) ? 1.0 : config.fraction;
  if (!(eff_fraction > 0.0 && eff_fraction <= 1.0))
    throw std::invalid_argument("solve_first_order: fraction out of (0,1]");
  state.sampler = {program.num_terms(), eff_fraction, config.seed, 0};
  state.adam.init(program.d);

  const int epoch_len =
      std::max(1, static_cast<int>(std::ceil(1.0 / eff_fraction)));
  const double tol = config.penalty.tolerance;

  if (config.record_history) rep.history.push_back(x);

  // Best iterate: feasible-and-cheapest first, else least violating.
  bool best_valid = false, best_feasible = false;
  double best_cost = 0.0, best_viol = 0.0, best_mu = config.penalty.mu_ladder[0];
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

  bool stop_all = false;
  for (double mu : config.penalty.mu_ladder) {
    if (stop_all) break;
    rep.mu_final = mu;
    state.memory.reset();  // stale gradients belong to a different objective

    double stage_best = std::numeric_limits<double>::infinity();
    int patience = 0;
    for (int inner = 1; inner <= config.max_inner_iterations; ++inner) {
      std::vector<int> batch = state.sampler.sample();
      x = gd_step(program, x, mu, batch, config, state);
      ++rep.iterations;
      if (config.record_history) rep.history.push_back(x);

      if (inner % epoch_len == 0) {
        ProgramValues ev = evaluate_values(program, x);
        consider(x, ev, mu);
        double merit = ev.merit(mu);
        bool improved =
            !std::isfinite(stage_best) ||
            (stage_best - merit) > 1e-5 * std::max(1.0, std::abs(stage_best));
        if (merit < stage_best) stage_best = merit;
        bool satisfied = ev.max_violation() <= tol;
        if (satisfied && !improved) {
          stop_all = true;  // feasible and flat: done
          break;
        }
        patience = improved ? 0 : patience + 1;
        if (patience >= config.epochs_patience) break;
        if (elapsed() > config.time_limit_s) {
          stop_all = true;
          break;
        }
      }
    }
    ProgramValues ev = evaluate_values(program, x);
    consider(x, ev, mu);
  }

  ProgramValues fin = evaluate_values(program, best_x);
  rep.success = fin.max_violation() <= tol;
  rep.cost = fin.cost;
  rep.max_violation = fin.max_violation();
  rep.mu_final = best_mu;
  rep.line_search_flag = state.line_search_flag;
  rep.time_s = elapsed();
  rep.x = best_x;
  return rep;
}

}  // namespace gaitopt
