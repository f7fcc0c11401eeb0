#include "gaitopt/selftest.hpp"

#include <cmath>
#include <sstream>

#include "gaitopt/bench.hpp"
#include "gaitopt/qp.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

namespace {

Vector random_config(Rng& rng, const PlanarBiped& r) {
  Vector q(9);
  q[0] = rng.uniform(-1, 1);
  q[1] = rng.uniform(0.3, 1.2);
  q[2] = rng.uniform(-0.8, 0.8);
  for (int leg = 0; leg < 2; ++leg) {
    q[3 + 3 * leg] = rng.uniform(r.hip_min * 0.6, r.hip_max * 0.6);
    q[4 + 3 * leg] = rng.uniform(r.knee_min, r.knee_max * 0.8);
    q[5 + 3 * leg] = rng.uniform(r.ankle_min * 0.8, r.ankle_max * 0.8);
  }
  return q;
}

// Convex objective: nested grid refinement is a sound global oracle.
double grid_oracle(const QuadraticProgram& qp, double final_step) {
  const int d = static_cast<int>(qp.c.size());
  Vector lo = qp.feasible_set.lower, hi = qp.feasible_set.upper;
  Vector best_x = 0.5 * (lo + hi);
  auto obj = [&](const Vector& x) { return 0.5 * x.dot(qp.Q * x) + qp.c.dot(x); };
  double step = (hi[0] - lo[0]) / 40.0;
  for (;;) {
    int radius_cells = 25;
    Vector base = best_x;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> idx(static_cast<size_t>(d), -radius_cells);
    for (;;) {
      Vector x(d);
      bool ok = true;
      for (int i = 0; i < d; ++i) {
        x[i] = base[i] + idx[static_cast<size_t>(i)] * step;
        if (x[i] < lo[i] - 1e-15 || x[i] > hi[i] + 1e-15) ok = false;
      }
      if (ok) {
        double v = obj(x);
        if (v < best) {
          best = v;
          best_x = x;
        }
      }
      int i = 0;
      for (; i < d; ++i) {
        if (++idx[static_cast<size_t>(i)] <= radius_cells) break;
        idx[static_cast<size_t>(i)] = -radius_cells;
      }
      if (i == d) break;
    }
    if (step <= final_step) return best;
    step = std::max(final_step, step / 10.0);
  }
}

}  // namespace

SelftestResult run_selftest() {
  SelftestResult res;
  std::ostringstream log;
  bool ok = true;

  // --- gradient integrity across the term families ---
  PlanarBiped robot;
  Terrain terrain;
  terrain.ground = {{-5.0, 0.0}, {-0.5, 0.0}, {-0.48, 0.12}, {5.0, 0.12}};
  ConvexPolygon bar;
  bar.v = {{-0.6, 1.15}, {0.8, 1.15}, {0.8, 1.35}, {-0.6, 1.35}};
  terrain.obstacles.push_back(bar);
  Stance stance;
  stance.left = FootPose{{0.0, 0.12}, 0.0};
  stance.right = FootPose{{0.25, 0.12}, 0.0};
  SumStructuredProgram prog = build_posture_program(robot, terrain, stance);

  // Crossing skeletons sit on a constant-sd plateau where only a
  // deterministic subgradient is defined; those ties are excluded.
  CollisionPairOptions popts;
  auto pairs = collision_pairs(robot, terrain, popts);
  auto in_plateau = [&](const Vector& q) {
    auto sds = signed_distances(robot, q, terrain, popts);
    for (size_t k = 0; k < sds.size(); ++k)
      if (pairs[k].type == CollisionPair::Type::SelfPair &&
          sds[k].sd + pairs[k].radius_sum < 1e-3)
        return true;
    return false;
  };

  Rng rng(2024);
  const double h = 1e-6;
  int checked = 0, failed = 0;
  for (int trial = 0; trial < 80; ++trial) {
    Vector q = random_config(rng, robot);
    q[PlanarBiped::kLHip] = rng.uniform(-1.2, -0.15);
    q[PlanarBiped::kRHip] = rng.uniform(0.15, 1.2);
    if (in_plateau(q)) continue;
    for (int i = 0; i < prog.num_terms(); ++i) {
      const ScalarTerm& term = prog.term(i);
      TermEval e = term.eval(q);
      for (int j = 0; j < 9; j += 2) {
        Vector qp = q, qm = q;
        qp[j] += h;
        qm[j] -= h;
        double fp = term.eval(qp).value, fm = term.eval(qm).value;
        double fd = (fp - fm) / (2 * h);
        double fwd = (fp - e.value) / h, bwd = (e.value - fm) / h;
        double scale = std::max(1.0, std::abs(fd));
        // skip closest-point ties and regime switches
        if (std::abs(fwd - fd) > 1e-3 * scale || std::abs(bwd - fd) > 1e-3 * scale)
          continue;
        ++checked;
        if (std::abs(e.gradient[j] - fd) > 1e-4 * scale) ++failed;
      }
    }
  }
  log << "gradient check: " << checked << " directional probes, " << failed
      << " failures\n";
  if (failed > 0 || checked < 1000) ok = false;

  // --- QP vs grid-search oracle ---
  Rng qrng(42);
  int qp_failed = 0, kkt_failed = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int d = 1 + static_cast<int>(qrng.next_below(3));
    Matrix A(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = qrng.uniform(-1, 1);
    QuadraticProgram qp;
    qp.Q = A.transpose() * A + 0.05 * Matrix::Identity(d, d);
    qp.c = Vector(d);
    for (int i = 0; i < d; ++i) qp.c[i] = qrng.uniform(-1, 1);
    qp.feasible_set = LinearFeasibleSet::unbounded(d);
    qp.feasible_set.lower.setConstant(-1.0);
    qp.feasible_set.upper.setConstant(1.0);
    QpSolution s = solve_qp(qp);
    if (s.status != QpStatus::Optimal || s.kkt_residual > 1e-8) ++kkt_failed;
    double oracle = grid_oracle(qp, 1e-3);
    if (!(s.objective <= oracle + 1e-5)) ++qp_failed;
  }
  log << "qp oracle: 100 solves, " << qp_failed << " above the grid minimum, "
      << kkt_failed << " kkt/status failures\n";
  if (qp_failed > 0 || kkt_failed > 0) ok = false;

  res.passed = ok;
  log << (ok ? "selftest: PASS\n" : "selftest: FAIL\n");
  res.log = log.str();
  return res;
}

}  // namespace gaitopt
