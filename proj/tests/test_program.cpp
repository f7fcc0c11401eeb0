#include <cmath>

#include "doctest.h"
#include "gaitopt/program.hpp"
#include "gaitopt/rng.hpp"

using namespace gaitopt;

namespace {

ScalarTerm make_term(TermKind kind, std::string label,
                     std::function<TermEval(const Vector&)> f) {
  ScalarTerm t;
  t.kind = kind;
  t.label = std::move(label);
  t.evaluator = std::move(f);
  return t;
}

// x in R^2: cost ||x||^2, one inequality x0 - 1 <= 0, one equality x1 - 2 = 0.
SumStructuredProgram small_program() {
  SumStructuredProgram p;
  p.d = 2;
  p.costs.push_back(make_term(TermKind::Cost, "quad", [](const Vector& x) {
    return TermEval{x.squaredNorm(), 2.0 * x};
  }));
  p.ineqs.push_back(make_term(TermKind::Inequality, "g0", [](const Vector& x) {
    Vector g = Vector::Zero(2);
    g[0] = 1.0;
    return TermEval{x[0] - 1.0, g};
  }));
  p.eqs.push_back(make_term(TermKind::Equality, "h0", [](const Vector& x) {
    Vector g = Vector::Zero(2);
    g[1] = 1.0;
    return TermEval{x[1] - 2.0, g};
  }));
  p.feasible_set = LinearFeasibleSet::unbounded(2);
  return p;
}

}  // namespace

TEST_CASE("exact penalty values") {
  CHECK(exact_penalty(TermKind::Inequality, -0.5) == 0.0);
  CHECK(exact_penalty(TermKind::Equality, -0.3) == doctest::Approx(0.3));
  CHECK(exact_penalty(TermKind::Inequality, 0.0) == 0.0);
  CHECK(exact_penalty(TermKind::Inequality, 2.5) == doctest::Approx(2.5));
  CHECK(exact_penalty(TermKind::Equality, 1.5) == doctest::Approx(1.5));
}

TEST_CASE("exact penalty is nonnegative, convex, zero on satisfied region") {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    double a = rng.uniform(-10, 10), b = rng.uniform(-10, 10);
    double t = rng.next_double();
    for (TermKind kind : {TermKind::Inequality, TermKind::Equality}) {
      double pa = exact_penalty(kind, a), pb = exact_penalty(kind, b);
      CHECK(pa >= 0.0);
      double mid = exact_penalty(kind, t * a + (1 - t) * b);
      CHECK(mid <= t * pa + (1 - t) * pb + 1e-12);
    }
    double y = -std::abs(a);
    CHECK(exact_penalty(TermKind::Inequality, y) == 0.0);
    CHECK(exact_penalty(TermKind::Equality, 0.0) == 0.0);
  }
}

TEST_CASE("smooth penalty gradient examples") {
  Vector g2(2);
  g2 << 1.0, 2.0;
  Vector r = smooth_penalty_gradient(TermKind::Equality, 0.0, g2, 100.0);
  CHECK(r.norm() == 0.0);

  Vector g1(1);
  g1 << 3.0;
  r = smooth_penalty_gradient(TermKind::Inequality, -0.1, g1, 100.0);
  CHECK(r[0] == 0.0);

  // scale at y=0.5, w=100: -1 + 2*sigma(50), evaluated directly
  double sigma50 = 1.0 / (1.0 + std::exp(-50.0));
  double expect = -1.0 + 2.0 * sigma50;
  Vector g10(2);
  g10 << 1.0, 0.0;
  r = smooth_penalty_gradient(TermKind::Equality, 0.5, g10, 100.0);
  CHECK(r[0] == doctest::Approx(expect).epsilon(1e-9));
  CHECK(std::abs(r[0] - 1.0) < 1e-9);
  CHECK(r[1] == 0.0);
}

TEST_CASE("smooth penalty scale: odd symmetry, saturation, stability") {
  Rng rng(7);
  for (int k = 0; k < 500; ++k) {
    double y = rng.uniform(-3, 3);
    double w = rng.uniform(1, 500);
    double s = smooth_penalty_scale(TermKind::Equality, y, w);
    double sm = smooth_penalty_scale(TermKind::Equality, -y, w);
    CHECK(s == doctest::Approx(-sm).epsilon(1e-15));
    CHECK(std::abs(s) <= 1.0);  // tanh saturates to exactly 1 in doubles
    if (w * std::abs(y) < 30.0) CHECK(std::abs(s) < 1.0);
    if (w * std::abs(y) > 15.0) {
      CHECK(std::abs(s - (y > 0 ? 1.0 : -1.0)) < 1e-6);
    }
  }
  // no overflow at extreme w*y
  CHECK(smooth_penalty_scale(TermKind::Equality, 100.0, 1e4) == doctest::Approx(1.0));
  CHECK(smooth_penalty_scale(TermKind::Equality, -100.0, 1e4) == doctest::Approx(-1.0));
  CHECK(std::isfinite(smooth_penalty_scale(TermKind::Inequality, 1e6, 1e4)));
}

TEST_CASE("penalized objective simple cases") {
  SumStructuredProgram p;
  p.d = 1;
  p.costs.push_back(make_term(TermKind::Cost, "sq", [](const Vector& x) {
    Vector g(1);
    g[0] = 2.0 * x[0];
    return TermEval{x[0] * x[0], g};
  }));
  p.feasible_set = LinearFeasibleSet::unbounded(1);
  Vector x(1);
  x << 2.0;
  CHECK(penalized_objective(p, x, 10.0).value == doctest::Approx(4.0));

  SumStructuredProgram q;
  q.d = 1;
  q.eqs.push_back(make_term(TermKind::Equality, "h", [](const Vector& x) {
    Vector g(1);
    g[0] = 1.0;
    return TermEval{x[0] - 1.0, g};
  }));
  q.feasible_set = LinearFeasibleSet::unbounded(1);
  Vector z = Vector::Zero(1);
  auto pv = penalized_objective(q, z, 100.0);
  CHECK(pv.value == doctest::Approx(100.0));
  CHECK(pv.per_term.sum() == doctest::Approx(pv.value));
}

TEST_CASE("penalized gradient: trivial cases and finite differences") {
  SumStructuredProgram p;
  p.d = 2;
  p.costs.push_back(make_term(TermKind::Cost, "quad", [](const Vector& x) {
    return TermEval{x.squaredNorm(), 2.0 * x};
  }));
  p.feasible_set = LinearFeasibleSet::unbounded(2);
  Vector x(2);
  x << 1.0, -1.0;
  Vector g = penalized_gradient(p, x, 1.0, all_indices(p), 100.0);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(-2.0));

  Vector g0 = penalized_gradient(p, x, 1.0, {}, 100.0);
  CHECK(g0.norm() == 0.0);

  // Finite-difference oracle on the mixed program. The smooth penalty
  // gradient integrates to (2/w) ln cosh(w y / 2) (gated for
  // inequalities), so that primitive is the function to difference.
  SumStructuredProgram sp = small_program();
  Rng rng(3);
  const double w = 100.0, mu = 10.0, h = 1e-6;
  auto lncosh = [](double z) {  // overflow-stable ln cosh
    double az = std::abs(z);
    return az + std::log1p(std::exp(-2.0 * az)) - std::log(2.0);
  };
  auto smooth_val = [&](const Vector& q) {
    double v = sp.costs[0].eval(q).value;
    double yg = sp.ineqs[0].eval(q).value;
    if (yg > 0) v += mu * (2.0 / w) * lncosh(0.5 * w * yg);
    double yh = sp.eqs[0].eval(q).value;
    v += mu * (2.0 / w) * lncosh(0.5 * w * yh);
    return v;
  };
  for (int trial = 0; trial < 40; ++trial) {
    Vector pt(2);
    pt << rng.uniform(-2, 2), rng.uniform(-2, 2);
    if (std::abs(sp.ineqs[0].eval(pt).value) < 1e-3) continue;  // gate kink
    Vector ga = penalized_gradient(sp, pt, mu, all_indices(sp), w);
    for (int i = 0; i < 2; ++i) {
      Vector pp = pt, pm = pt;
      pp[i] += h;
      pm[i] -= h;
      double fd = (smooth_val(pp) - smooth_val(pm)) / (2 * h);
      CHECK(ga[i] == doctest::Approx(fd).epsilon(1e-4));
    }
  }

  // Against the exact penalized objective the same match holds once all
  // constraint terms sit where the smoothing error is below 1e-6.
  for (int trial = 0; trial < 40; ++trial) {
    Vector pt(2);
    pt << rng.uniform(-2, 2), rng.uniform(-2, 2);
    double yg = sp.ineqs[0].eval(pt).value;
    double yh = sp.eqs[0].eval(pt).value;
    if (std::abs(yg) < 0.2 || std::abs(yh) < 0.2) continue;
    Vector ga = penalized_gradient(sp, pt, mu, all_indices(sp), w);
    for (int i = 0; i < 2; ++i) {
      Vector pp = pt, pm = pt;
      pp[i] += h;
      pm[i] -= h;
      double fd = (penalized_objective(sp, pp, mu).value -
                   penalized_objective(sp, pm, mu).value) /
                  (2 * h);
      CHECK(ga[i] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("batch linearity of penalized gradient") {
  SumStructuredProgram sp = small_program();
  Vector x(2);
  x << 1.7, -0.4;
  Vector gA = penalized_gradient(sp, x, 5.0, {0, 2}, 100.0);
  Vector gB = penalized_gradient(sp, x, 5.0, {1}, 100.0);
  Vector gAB = penalized_gradient(sp, x, 5.0, {0, 1, 2}, 100.0);
  CHECK((gA + gB - gAB).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("constraint report") {
  SumStructuredProgram sp = small_program();
  sp.feasible_set.lower[0] = -1.0;
  sp.feasible_set.upper[0] = 1.0;

  Vector ok(2);
  ok << 0.5, 2.0;
  auto rep = constraint_report(sp, ok);
  double mx = 0;
  for (auto& r : rep) mx = std::max(mx, r.violation);
  CHECK(mx <= 1e-12);

  Vector bad(2);
  bad << 1.1, 2.0;  // 0.1 above the upper bound, also violates g0
  rep = constraint_report(sp, bad);
  bool found_box = false;
  for (auto& r : rep) {
    if (r.label == "box[0]") {
      found_box = true;
      CHECK(r.violation == doctest::Approx(0.1));
    }
  }
  CHECK(found_box);
  CHECK(max_violation(sp, bad) == doctest::Approx(0.1));

  // independent recomputation of every row
  Vector z(2);
  z << 1.5, 1.0;
  rep = constraint_report(sp, z);
  for (auto& r : rep) {
    if (r.label == "g0") CHECK(r.violation == doctest::Approx(0.5));
    if (r.label == "h0") CHECK(r.violation == doctest::Approx(1.0));
    if (r.label == "box[0]") CHECK(r.violation == doctest::Approx(0.5));
  }
}

TEST_CASE("feasible x keeps penalty gap below mu*n*tolerance") {
  SumStructuredProgram sp = small_program();
  PenaltyConfig pc;
  Vector x(2);
  x << 0.2, 2.0 + 5e-4;  // feasible at tolerance 1e-3
  REQUIRE(max_violation(sp, x) <= pc.tolerance);
  double base = cost_value(sp, x);
  for (double mu : pc.mu_ladder) {
    double v = penalized_objective(sp, x, mu).value;
    CHECK(v - base <= mu * sp.num_terms() * pc.tolerance * (1 + 1e-12));
  }
}

TEST_CASE("term evaluation errors carry the term label") {
  SumStructuredProgram p;
  p.d = 1;
  p.costs.push_back(make_term(TermKind::Cost, "bad_term", [](const Vector&) -> TermEval {
    throw std::domain_error("domain");
  }));
  p.feasible_set = LinearFeasibleSet::unbounded(1);
  Vector x = Vector::Zero(1);
  CHECK_THROWS_AS(penalized_objective(p, x, 1.0), TermEvalError);
  try {
    penalized_objective(p, x, 1.0);
  } catch (const TermEvalError& e) {
    CHECK(e.label() == "bad_term");
  }
}

TEST_CASE("mini-batch sampler contract") {
  // documented stream: splitmix64 mix of (seed, counter), partial
  // Fisher-Yates, ascending output. Reimplemented here as the oracle.
  auto oracle = [](std::uint64_t seed, std::uint64_t counter, int n, int k) {
    Rng rng(seed, counter);
    return sample_without_replacement(rng, n, k);
  };
  auto s1 = oracle(7, 0, 10, 4);
  auto s2 = oracle(7, 0, 10, 4);
  CHECK(s1 == s2);
  CHECK(s1.size() == 4);
  for (size_t i = 1; i < s1.size(); ++i) CHECK(s1[i - 1] < s1[i]);
  auto s3 = oracle(7, 1, 10, 4);
  CHECK(s1 != s3);
}
