#include <cmath>

#include "doctest.h"
#include "gaitopt/bench.hpp"
#include "gaitopt/json_io.hpp"

using namespace gaitopt;

namespace {

// Small deterministic suite shared by the cases below (generation runs
// the SQP probe, so keep the counts low).
const GeneratedSuite& tiny_suite() {
  static GeneratedSuite suite = [] {
    GeneratorConfig cfg;
    cfg.seed = 42;
    cfg.n_posture = 3;
    cfg.n_trajectory = 1;
    return generate_instances(cfg);
  }();
  return suite;
}

Terrain flat_terrain() {
  Terrain t;
  t.ground = {{-5.0, 0.0}, {5.0, 0.0}};
  return t;
}

ProblemInstance flat_posture_instance(double x_left = 0.0, double x_right = 0.4) {
  ProblemInstance inst;
  inst.id = "fixture_posture";
  inst.task = Task::Posture;
  inst.terrain = flat_terrain();
  Stance st;
  st.left = FootPose{{x_left, 0.0}, 0.0};
  st.right = FootPose{{x_right, 0.0}, 0.0};
  inst.stances = {st};
  return inst;
}

ProblemInstance flat_trajectory_instance(int n_stances) {
  ProblemInstance inst;
  inst.id = "fixture_trajectory";
  inst.task = Task::Trajectory;
  inst.terrain = flat_terrain();
  double xl = 0.0, xr = 0.4;
  Stance st;
  st.left = FootPose{{xl, 0.0}, 0.0};
  st.right = FootPose{{xr, 0.0}, 0.0};
  inst.stances.push_back(st);
  bool move_left = true;
  for (int j = 1; j < n_stances; ++j) {
    if (move_left)
      xl = xr + 0.4;
    else
      xr = xl + 0.4;
    Stance nx;
    nx.left = FootPose{{xl, 0.0}, 0.0};
    nx.right = FootPose{{xr, 0.0}, 0.0};
    inst.stances.push_back(nx);
    move_left = !move_left;
  }
  return inst;
}

// Stub solvers for the multistart/windowing mechanics.
SolverFn stub_always(bool success, double cost) {
  return [success, cost](const SumStructuredProgram& p, const Vector& x0) {
    SolveReport r;
    r.success = success;
    r.cost = cost;
    r.max_violation = success ? 0.0 : 1.0;
    r.x = p.feasible_set.clamp(x0);
    r.iterations = 1;
    return r;
  };
}

}  // namespace

TEST_CASE("initializer contract") {
  PlanarBiped robot;
  ProblemInstance inst = flat_posture_instance();
  Vector good = initialize_posture(robot, inst.stances[0], Condition::Good);
  // base centered between the contacts
  CHECK(good[PlanarBiped::kBaseX] == doctest::Approx(0.2));
  // soles exactly 0.20 above the (flat, height-0) targets
  FkResult fk = forward_kinematics(robot, good);
  CHECK(fk.sole_mid(Side::Left).y() == doctest::Approx(0.20).epsilon(1e-12));
  CHECK(fk.sole_mid(Side::Right).y() == doctest::Approx(0.20).epsilon(1e-12));
  CHECK(fk.sole_angle(Side::Left) == doctest::Approx(0.0));
  // knees bent 50 degrees
  CHECK(good[PlanarBiped::kLKnee] == doctest::Approx(50.0 * M_PI / 180.0));

  Vector bad = initialize_posture(robot, inst.stances[0], Condition::InCollision);
  FkResult fkb = forward_kinematics(robot, bad);
  CHECK(fkb.sole_mid(Side::Left).y() == doctest::Approx(-0.05).epsilon(1e-12));
  // raw signed distances (no exemptions) report ground penetration
  CollisionPairOptions raw;
  auto sds = signed_distances(robot, bad, inst.terrain, raw);
  double worst = 1e9;
  for (const auto& s : sds) worst = std::min(worst, s.sd);
  CHECK(worst < 0.0);
}

TEST_CASE("generator determinism and probe guarantee") {
  const GeneratedSuite& a = tiny_suite();
  GeneratorConfig cfg;
  cfg.seed = 42;
  cfg.n_posture = 3;
  cfg.n_trajectory = 1;
  GeneratedSuite b = generate_instances(cfg);
  REQUIRE(a.instances.size() == b.instances.size());
  REQUIRE(a.instances.size() == 4);
  for (size_t i = 0; i < a.instances.size(); ++i) {
    CHECK(problem_to_json(a.instances[i]) == problem_to_json(b.instances[i]));
    CHECK(solution_to_json(a.probes[i]) == solution_to_json(b.probes[i]));
  }
  PlanarBiped robot;
  for (size_t i = 0; i < a.instances.size(); ++i) {
    const auto& inst = a.instances[i];
    if (inst.task == Task::Posture) {
      // probe configurations are the feasibility oracle
      auto rep = evaluate_solution(inst, a.probes[i], robot);
      CHECK(rep.success);
      CHECK(rep.max_violation <= 1e-3);
    } else {
      // consecutive stances differ in exactly one foot
      for (size_t s = 0; s + 1 < inst.stances.size(); ++s) {
        const Stance& u = inst.stances[s];
        const Stance& v = inst.stances[s + 1];
        int moved = 0;
        for (Side side : {Side::Left, Side::Right}) {
          const auto& fu = u.foot(side);
          const auto& fv = v.foot(side);
          bool same = fu.has_value() == fv.has_value() &&
                      (!fu || (fu->position - fv->position).norm() < 1e-12);
          if (!same) ++moved;
        }
        CHECK(moved == 1);
      }
    }
  }
}

TEST_CASE("multistart with stub solvers") {
  PlanarBiped robot;
  ProblemInstance inst = flat_posture_instance();
  MultistartConfig ms;

  auto ok = multistart_solve(stub_always(true, 1.0), inst, Condition::Good, ms,
                             robot, 7);
  CHECK(ok.success);
  CHECK(ok.restarts_used == 0);

  auto fail = multistart_solve(stub_always(false, 0.0), inst, Condition::Good,
                               ms, robot, 7);
  CHECK(!fail.success);
  CHECK(fail.restarts_used == 10);

  // deterministic perturbation stream: a solver that records its starts
  std::vector<Vector> starts_a, starts_b;
  auto recorder = [](std::vector<Vector>* sink) {
    return [sink](const SumStructuredProgram& p, const Vector& x0) {
      sink->push_back(x0);
      SolveReport r;
      r.success = false;
      r.max_violation = 1.0;
      r.x = p.feasible_set.clamp(x0);
      return r;
    };
  };
  multistart_solve(recorder(&starts_a), inst, Condition::Good, ms, robot, 7);
  multistart_solve(recorder(&starts_b), inst, Condition::Good, ms, robot, 7);
  REQUIRE(starts_a.size() == starts_b.size());
  for (size_t i = 0; i < starts_a.size(); ++i)
    CHECK((starts_a[i] - starts_b[i]).cwiseAbs().maxCoeff() == 0.0);
  // base translation never perturbed
  for (const auto& s : starts_a) {
    CHECK(s[PlanarBiped::kBaseX] == starts_a[0][PlanarBiped::kBaseX]);
    CHECK(s[PlanarBiped::kBaseY] == starts_a[0][PlanarBiped::kBaseY]);
  }
  // perturbations bounded by 5 degrees
  const double lim = 5.0 * M_PI / 180.0 + 1e-12;
  for (size_t i = 1; i < starts_a.size(); ++i)
    for (int j = PlanarBiped::kPitch; j < 9; ++j)
      CHECK(std::abs(starts_a[i][j] - starts_a[0][j]) <= lim);
}

TEST_CASE("windowing mechanics with a stub solver") {
  PlanarBiped robot;
  MultistartConfig ms;
  ms.max_restarts = 0;

  // <= 6 stances: single window, report equals the direct solve
  ProblemInstance small = flat_trajectory_instance(4);
  std::vector<std::vector<Vector>> windows;
  auto rep = windowed_trajectory_solve(stub_always(true, 0.0), small,
                                       Condition::Good, ms, robot, 1, nullptr,
                                       6, &windows);
  CHECK(windows.size() == 1);
  CHECK(windows[0].size() == 8);

  // 7 stances: two windows; the overlap waypoint is shared bitwise
  ProblemInstance seven = flat_trajectory_instance(7);
  windows.clear();
  SolutionFile sol;
  rep = windowed_trajectory_solve(stub_always(true, 0.0), seven,
                                  Condition::Good, ms, robot, 1, &sol, 6,
                                  &windows);
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].size() == 12);  // stances 0..5
  CHECK(windows[1].size() == 4);   // stances 5..6
  // window 2's first waypoint == window 1's waypoint 10 (global 2*5)
  CHECK((windows[0][10] - windows[1][0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.waypoints.size() == 14);
  // concatenation takes the re-planned overlap waypoint from window 2
  CHECK((sol.waypoints[10] - windows[1][0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((sol.waypoints[11] - windows[1][1]).cwiseAbs().maxCoeff() == 0.0);

  // failing window notes its index
  auto bad = windowed_trajectory_solve(stub_always(false, 0.0), seven,
                                       Condition::Good, ms, robot, 1);
  CHECK(!bad.success);
  CHECK(bad.detail.find("window 0") != std::string::npos);
}

TEST_CASE("solver report agrees with the official evaluator") {
  PlanarBiped robot;
  ProblemInstance inst = flat_posture_instance();
  MethodConfig mc;
  mc.method = Method::Sqp;
  MultistartConfig ms;
  SolutionFile sol;
  auto rep = multistart_solve(make_solver(mc), inst, Condition::Good, ms, robot,
                              0, &sol);
  REQUIRE(rep.success);
  sol.solver.name = mc.name();
  auto ev = evaluate_solution(inst, sol, robot);
  CHECK(ev.success == rep.success);
  CHECK(std::abs(ev.cost - rep.cost) <= 1e-9);
  CHECK(std::abs(ev.max_violation - rep.max_violation) <= 1e-9);

  // a displaced foot target shows up as exactly that violation
  SolutionFile off = sol;
  off.waypoints[0][PlanarBiped::kBaseX] += 0.01;
  auto bad = evaluate_solution(inst, off, robot);
  CHECK(!bad.success);
  CHECK(bad.max_violation == doctest::Approx(0.01).epsilon(1e-3));

  // malformed: waypoint count mismatch
  SolutionFile wrong = sol;
  wrong.waypoints.push_back(sol.waypoints[0]);
  CHECK_THROWS_AS(evaluate_solution(inst, wrong, robot), std::invalid_argument);
}

TEST_CASE("json round trips") {
  const GeneratedSuite& suite = tiny_suite();
  for (const auto& inst : suite.instances) {
    std::string a = problem_to_json(inst);
    ProblemInstance back = problem_from_json(a);
    CHECK(problem_to_json(back) == a);
  }
  for (const auto& probe : suite.probes) {
    std::string a = solution_to_json(probe);
    SolutionFile back = solution_from_json(a);
    CHECK(solution_to_json(back) == a);
    if (!probe.waypoints.empty()) {
      // double round trip is exact
      CHECK(back.waypoints[0] == probe.waypoints[0]);
    }
  }
  CHECK_THROWS_AS(problem_from_json("{\"id\":\"x\"}"), std::invalid_argument);
  CHECK_THROWS_AS(solution_from_json("{\"instance_id\":\"x\"}"),
                  std::invalid_argument);
  CHECK_THROWS(solution_from_json("not json"));
}

TEST_CASE("comparison rows with stub solvers") {
  auto posture = flat_posture_instance();
  std::vector<ProblemInstance> instances;
  for (int i = 0; i < 5; ++i) {
    ProblemInstance p = posture;
    p.id = "p" + std::to_string(i);
    instances.push_back(p);
  }
  ComparisonRequest req;
  MethodConfig a;
  a.method = Method::Sqp;
  MethodConfig b;
  b.method = Method::Sgd;
  req.methods = {a, b};
  req.conditions = {Condition::Good};
  req.solver_factory = [](const MethodConfig& mc) {
    return stub_always(true, mc.method == Method::Sqp ? 1.0 : 2.0);
  };
  ComparisonTable t = run_comparison(instances, req);
  REQUIRE(t.cells.size() == 2);
  CHECK(t.cells[0].solved == 5);
  CHECK(t.cells[0].total == 5);
  CHECK(t.cells[0].mean_cost == doctest::Approx(1.0));
  CHECK(t.cells[1].mean_cost == doctest::Approx(2.0));
  std::string csv = t.render_csv(Task::Posture);
  CHECK(csv.find("sqp,good,10,1.00,5/5") != std::string::npos);
  CHECK(csv.find("sgd,good,10,0.80,5/5") != std::string::npos);
}

TEST_CASE("suite files round trip through write and load") {
  const GeneratedSuite& suite = tiny_suite();
  auto dir = std::filesystem::temp_directory_path() / "gaitopt_suite_test";
  std::filesystem::remove_all(dir);
  write_suite(dir, suite, 42);
  LoadedSuite loaded = load_suite(dir);
  REQUIRE(loaded.instances.size() == suite.instances.size());
  // manifest groups by task, files parse back to identical JSON
  for (size_t i = 0; i < loaded.instances.size(); ++i) {
    bool found = false;
    for (const auto& orig : suite.instances) {
      if (orig.id == loaded.instances[i].id) {
        CHECK(problem_to_json(orig) == problem_to_json(loaded.instances[i]));
        found = true;
      }
    }
    CHECK(found);
  }
  std::filesystem::remove_all(dir);
}
