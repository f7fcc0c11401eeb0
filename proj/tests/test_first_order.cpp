#include <cmath>

#include "doctest.h"
#include "gaitopt/first_order.hpp"
#include "gaitopt/qp.hpp"

using namespace gaitopt;

namespace {

ScalarTerm quad_cost(const Vector& target) {
  ScalarTerm t;
  t.kind = TermKind::Cost;
  t.label = "quad";
  t.evaluator = [target](const Vector& x) {
    return TermEval{(x - target).squaredNorm(), 2.0 * (x - target)};
  };
  return t;
}

ScalarTerm affine_eq(int coord, double rhs, int d, const std::string& label) {
  ScalarTerm t;
  t.kind = TermKind::Equality;
  t.label = label;
  t.evaluator = [coord, rhs, d](const Vector& x) {
    Vector g = Vector::Zero(d);
    g[coord] = 1.0;
    return TermEval{x[coord] - rhs, g};
  };
  return t;
}

// Nonconvex two-term program used as a reduction fixture.
SumStructuredProgram fixture_program(int variant) {
  SumStructuredProgram p;
  p.d = 3;
  Vector tgt(3);
  tgt << 1.0 + 0.1 * variant, -0.5, 0.25 * variant;
  p.costs.push_back(quad_cost(tgt));
  ScalarTerm curvy;
  curvy.kind = TermKind::Cost;
  curvy.label = "curvy";
  curvy.evaluator = [](const Vector& x) {
    Vector g(3);
    g << std::cos(x[0]), 0.4 * x[1], 0.0;
    return TermEval{std::sin(x[0]) + 0.2 * x[1] * x[1], g};
  };
  p.costs.push_back(curvy);
  p.ineqs.push_back([&] {
    ScalarTerm t;
    t.kind = TermKind::Inequality;
    t.label = "ball";
    t.evaluator = [](const Vector& x) {
      return TermEval{x.squaredNorm() - 4.0, 2.0 * x};
    };
    return t;
  }());
  p.eqs.push_back(affine_eq(2, 0.3 * variant, 3, "pin2"));
  p.feasible_set = LinearFeasibleSet::unbounded(3);
  p.feasible_set.lower.setConstant(-3.0);
  p.feasible_set.upper.setConstant(3.0);
  return p;
}

}  // namespace

TEST_CASE("sampler basics") {
  MiniBatchSampler s{10, 1.0, 99, 0};
  auto all = s.sample();
  REQUIRE(all.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(all[static_cast<size_t>(i)] == i);

  MiniBatchSampler s2{5, 0.2, 1, 0};
  CHECK(s2.batch_size() == 1);
  CHECK(s2.sample().size() == 1);

  MiniBatchSampler s3{10, 0.4, 7, 0};
  auto a = s3.sample();
  CHECK(a.size() == 4);
  MiniBatchSampler s4{10, 0.4, 7, 0};
  CHECK(s4.sample() == a);   // reproducible
  CHECK(s4.sample() != a);   // counter advanced
}

TEST_CASE("adam bias correction identity") {
  AdamState st;
  st.init(2);
  Vector g(2);
  g << 0.3, -2.0;
  for (int k = 1; k <= 25; ++k) {
    Vector dir = st.direction(g, false);
    Vector m_hat = st.m / (1.0 - std::pow(st.beta1, k));
    Vector v_hat = st.v / (1.0 - std::pow(st.beta2, k));
    CHECK((m_hat - g).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((v_hat - g.cwiseProduct(g)).cwiseAbs().maxCoeff() <= 1e-9);
    Vector expect = m_hat.array() / (v_hat.array().sqrt() + st.epsilon);
    CHECK((dir - expect).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("nadam k=1 hand-computed value") {
  AdamState st;
  st.init(1);
  Vector g(1);
  g << 1.0;
  Vector dir = st.direction(g, true);
  // m1 = 0.1, m_hat = 0.9*0.1/(1-0.81) + 0.1*1/(1-0.9)
  double m_hat = 0.9 * 0.1 / (1.0 - 0.81) + 0.1 / (1.0 - 0.9);
  CHECK(m_hat == doctest::Approx(1.4736842105263157).epsilon(1e-12));
  double v_hat = st.v[0] / (1.0 - 0.999);
  double expect = m_hat / (std::sqrt(v_hat) + st.epsilon);
  CHECK(dir[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("gradient memory refresh semantics") {
  SumStructuredProgram p = fixture_program(1);
  GradientMemory mem;
  Vector x0 = Vector::Zero(3);
  Vector x1(3);
  x1 << 0.5, -0.25, 0.1;
  const double mu = 10.0, w = 100.0;

  // full refresh equals the direct full gradient bit-for-bit
  auto all = all_indices(p);
  const Vector& s0 = incremental_gradient(mem, p, x0, mu, all, w);
  Vector direct = penalized_gradient(p, x0, mu, all, w);
  CHECK((s0 - direct).cwiseAbs().maxCoeff() == 0.0);

  // empty batch leaves the sum untouched
  Vector before = mem.running_sum;
  incremental_gradient(mem, p, x1, mu, {}, w);
  CHECK((mem.running_sum - before).cwiseAbs().maxCoeff() == 0.0);

  // refresh one row: sum = fresh term 1 at x1 + others at x0
  incremental_gradient(mem, p, x1, mu, {1}, w);
  Vector expect = Vector::Zero(3);
  for (int i = 0; i < p.num_terms(); ++i)
    expect += penalized_term_gradient(p, i, i == 1 ? x1 : x0, mu, w);
  CHECK((mem.running_sum - expect).cwiseAbs().maxCoeff() <= 1e-14);

  // consistency of the incremental sum against a recomputation
  CHECK((mem.running_sum - mem.recompute_sum()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("plain full-batch step on a quadratic reaches the optimum") {
  SumStructuredProgram p;
  p.d = 1;
  p.costs.push_back(quad_cost(Vector::Zero(1)));
  p.feasible_set = LinearFeasibleSet::unbounded(1);
  GdConfig cfg;
  GdState st;
  st.sampler = {1, 1.0, 0, 0};
  st.adam.init(1);
  Vector x(1);
  x << 1.0;
  Vector next = gd_step(p, x, 1.0, {0}, cfg, st);
  CHECK(std::abs(next[0]) <= 1e-8);  // exact line search on ||x||^2
}

TEST_CASE("iterates stay feasible after projection") {
  SumStructuredProgram p = fixture_program(2);
  GdConfig cfg;
  cfg.mode = GdMode::Stochastic;
  cfg.fraction = 0.5;
  cfg.seed = 3;
  cfg.record_history = true;
  cfg.max_inner_iterations = 60;
  Vector x0(3);
  x0 << 2.5, 2.5, -2.5;
  auto rep = solve_first_order(p, x0, cfg);
  REQUIRE(!rep.history.empty());
  for (const auto& xi : rep.history)
    CHECK(p.feasible_set.violation(xi) <= 1e-8);
}

TEST_CASE("reduction: fraction one reproduces full-batch iterates") {
  for (int variant : {0, 1, 2}) {
    SumStructuredProgram p = fixture_program(variant);
    Vector x0(3);
    x0 << 1.5, -1.0, 0.5;

    GdConfig full;
    full.mode = GdMode::Full;
    full.record_history = true;
    full.max_inner_iterations = 40;
    auto r_full = solve_first_order(p, x0, full);

    GdConfig sgd = full;
    sgd.mode = GdMode::Stochastic;
    sgd.fraction = 1.0;
    sgd.seed = 1234;  // seed must be irrelevant at fraction 1
    auto r_sgd = solve_first_order(p, x0, sgd);

    GdConfig isgd = full;
    isgd.mode = GdMode::Incremental;
    isgd.fraction = 1.0;
    isgd.seed = 77;
    auto r_isgd = solve_first_order(p, x0, isgd);

    REQUIRE(r_full.history.size() == r_sgd.history.size());
    REQUIRE(r_full.history.size() == r_isgd.history.size());
    for (size_t i = 0; i < r_full.history.size(); ++i) {
      CHECK((r_full.history[i] - r_sgd.history[i]).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((r_full.history[i] - r_isgd.history[i]).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("convex constrained program matches the qp solution") {
  // min ||x - t||^2 over a box, no nonlinear constraints
  SumStructuredProgram p;
  p.d = 2;
  Vector tgt(2);
  tgt << 2.0, -0.4;
  p.costs.push_back(quad_cost(tgt));
  p.feasible_set = LinearFeasibleSet::unbounded(2);
  p.feasible_set.lower.setConstant(-1.0);
  p.feasible_set.upper.setConstant(1.0);

  QuadraticProgram qp;
  qp.Q = 2.0 * Matrix::Identity(2, 2);
  qp.c = -2.0 * tgt;
  qp.feasible_set = p.feasible_set;
  auto qs = solve_qp(qp);
  REQUIRE(qs.status == QpStatus::Optimal);

  GdConfig cfg;
  cfg.max_inner_iterations = 400;
  auto rep = solve_first_order(p, Vector::Zero(2), cfg);
  CHECK(rep.success);
  CHECK((rep.x - qs.x_star).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("penalty continuation drives constraints to tolerance") {
  SumStructuredProgram p = fixture_program(1);
  GdConfig cfg;
  cfg.update_rule = UpdateRule::Adam;
  cfg.mode = GdMode::Stochastic;
  cfg.fraction = 0.8;
  cfg.seed = 5;
  cfg.max_inner_iterations = 500;
  Vector x0(3);
  x0 << 2.0, 2.0, -2.0;
  auto rep = solve_first_order(p, x0, cfg);
  CHECK(rep.success);
  CHECK(rep.max_violation <= 1e-3);
  CHECK(rep.x[2] == doctest::Approx(0.3).epsilon(2e-3));
}

TEST_CASE("determinism of full reports") {
  SumStructuredProgram p = fixture_program(2);
  GdConfig cfg;
  cfg.mode = GdMode::Incremental;
  cfg.update_rule = UpdateRule::Nadam;
  cfg.fraction = 0.4;
  cfg.seed = 321;
  cfg.record_history = true;
  cfg.max_inner_iterations = 80;
  Vector x0(3);
  x0 << -1.0, 2.0, 1.0;
  auto a = solve_first_order(p, x0, cfg);
  auto b = solve_first_order(p, x0, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i)
    CHECK((a.history[i] - b.history[i]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.cost == b.cost);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("sufficient decrease along accepted plain full-batch steps") {
  SumStructuredProgram p;
  p.d = 2;
  p.costs.push_back(quad_cost(Vector::Ones(2)));
  ScalarTerm bump;
  bump.kind = TermKind::Cost;
  bump.label = "bump";
  bump.evaluator = [](const Vector& x) {
    Vector g(2);
    g << -std::sin(x[0] * 2.0) * 2.0, std::cos(x[1]);
    return TermEval{std::cos(x[0] * 2.0) + std::sin(x[1]), g};
  };
  p.costs.push_back(bump);
  p.feasible_set = LinearFeasibleSet::unbounded(2);  // unconstrained path

  GdConfig cfg;
  GdState st;
  st.sampler = {2, 1.0, 0, 0};
  st.adam.init(2);
  Vector x(2);
  x << -1.3, 2.1;
  auto all = all_indices(p);
  const double mu = 1.0, w = 100.0;
  for (int k = 0; k < 15; ++k) {
    double phi0 = penalized_batch_value(p, x, mu, all);
    Vector g = penalized_gradient(p, x, mu, all, w);
    if (g.norm() < 1e-10) break;
    Vector nxt = gd_step(p, x, mu, all, cfg, st);
    double alpha = st.alpha_prev;
    double phi1 = penalized_batch_value(p, nxt, mu, all);
    CHECK(phi1 <= phi0 + cfg.wolfe_c1 * alpha * (-g.squaredNorm()) + 1e-12);
    x = nxt;
  }
}
