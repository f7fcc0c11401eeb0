#include "gaitopt/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace gaitopt {

const char* to_string(Task t) {
  return t == Task::Posture ? "posture" : "trajectory";
}
const char* to_string(Condition c) {
  return c == Condition::Good ? "good" : "in_collision";
}
const char* to_string(Method m) {
  switch (m) {
    case Method::Sqp: return "sqp";
    case Method::Isqp: return "isqp";
    case Method::Gd: return "gd";
    case Method::Sgd: return "sgd";
    case Method::Adam: return "adam";
    case Method::Nadam: return "nadam";
    case Method::Isgd: return "isgd";
    case Method::Iadam: return "iadam";
    case Method::Inadam: return "inadam";
  }
  return "?";
}

Task parse_task(const std::string& s) {
  if (s == "posture") return Task::Posture;
  if (s == "trajectory") return Task::Trajectory;
  throw std::invalid_argument("unknown task: " + s);
}
Condition parse_condition(const std::string& s) {
  if (s == "good") return Condition::Good;
  if (s == "in_collision") return Condition::InCollision;
  throw std::invalid_argument("unknown condition: " + s);
}
Method parse_method(const std::string& s) {
  for (Method m : {Method::Sqp, Method::Isqp, Method::Gd, Method::Sgd,
                   Method::Adam, Method::Nadam, Method::Isgd, Method::Iadam,
                   Method::Inadam})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method: " + s);
}

double MethodConfig::effective_fraction() const {
  if (fraction > 0.0) return fraction;
  switch (method) {
    case Method::Sqp:
    case Method::Gd: return 1.0;
    case Method::Isqp:
    case Method::Sgd:
    case Method::Adam:
    case Method::Nadam: return 0.8;
    case Method::Isgd:
    case Method::Iadam:
    case Method::Inadam: return 0.4;
  }
  return 1.0;
}

std::string MethodConfig::name() const { return to_string(method); }

SolverFn make_solver(const MethodConfig& config) {
  const double frac = config.effective_fraction();
  if (config.method == Method::Sqp || config.method == Method::Isqp) {
    SqpConfig sc;
    sc.penalty = config.penalty;
    sc.fraction = frac;
    sc.seed = config.seed;
    sc.time_limit_s = config.time_limit_s;
    sc.max_convexify_iterations = config.sqp_max_convexify_iterations;
    if (config.method == Method::Sqp) {
      return [sc](const SumStructuredProgram& p, const Vector& x0) {
        return sqp_solve(p, x0, sc);
      };
    }
    return [sc](const SumStructuredProgram& p, const Vector& x0) {
      return isqp_solve(p, x0, sc);
    };
  }
  GdConfig gc;
  gc.penalty = config.penalty;
  gc.seed = config.seed;
  gc.fraction = frac;
  gc.time_limit_s = config.time_limit_s;
  gc.max_inner_iterations = config.gd_max_inner_iterations;
  switch (config.method) {
    case Method::Gd:
      gc.mode = GdMode::Full;
      gc.update_rule = UpdateRule::Plain;
      break;
    case Method::Sgd:
      gc.mode = GdMode::Stochastic;
      gc.update_rule = UpdateRule::Plain;
      break;
    case Method::Adam:
      gc.mode = GdMode::Stochastic;
      gc.update_rule = UpdateRule::Adam;
      break;
    case Method::Nadam:
      gc.mode = GdMode::Stochastic;
      gc.update_rule = UpdateRule::Nadam;
      break;
    case Method::Isgd:
      gc.mode = GdMode::Incremental;
      gc.update_rule = UpdateRule::Plain;
      break;
    case Method::Iadam:
      gc.mode = GdMode::Incremental;
      gc.update_rule = UpdateRule::Adam;
      break;
    case Method::Inadam:
      gc.mode = GdMode::Incremental;
      gc.update_rule = UpdateRule::Nadam;
      break;
    default:
      throw std::logic_error("make_solver: unhandled method");
  }
  return [gc](const SumStructuredProgram& p, const Vector& x0) {
    return solve_first_order(p, x0, gc);
  };
}

Vector initialize_posture(const PlanarBiped& robot, const Stance& stance,
                          Condition condition) {
  if (stance.contact_count() == 0)
    throw std::invalid_argument("initialize_posture: empty stance");
  const double knee = 50.0 * M_PI / 180.0;
  const double hip = -0.5 * knee;
  const double ankle = -0.5 * knee;  // soles horizontal: hip+knee+ankle = 0
  // ankle sits below the base by (thigh+shank)*cos(knee/2)
  const double drop =
      (robot.thigh_length + robot.shank_length) * std::cos(0.5 * knee);

  double cx = 0.0;
  int nc = 0;
  double ymax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  for (Side s : {Side::Left, Side::Right}) {
    const auto& fp = stance.foot(s);
    if (!fp) continue;
    cx += fp->position.x();
    ymax = std::max(ymax, fp->position.y());
    ymin = std::min(ymin, fp->position.y());
    ++nc;
  }
  cx /= nc;
  const double sole_y =
      condition == Condition::Good ? ymax + 0.20 : ymin - 0.05;

  Vector q = Vector::Zero(PlanarBiped::kDof);
  q[PlanarBiped::kBaseX] = cx;
  q[PlanarBiped::kBaseY] = sole_y + drop;
  q[PlanarBiped::kPitch] = 0.0;
  for (int leg : {PlanarBiped::kLHip, PlanarBiped::kRHip}) {
    q[leg] = hip;
    q[leg + 1] = knee;
    q[leg + 2] = ankle;
  }
  return q;
}

std::vector<Vector> initialize(const PlanarBiped& robot,
                               const ProblemInstance& instance,
                               Condition condition) {
  std::vector<Vector> out;
  if (instance.task == Task::Posture) {
    out.push_back(initialize_posture(robot, instance.stances.at(0), condition));
    return out;
  }
  for (const auto& st : instance.stances) {
    Vector q = initialize_posture(robot, st, condition);
    out.push_back(q);
    out.push_back(q);  // two waypoints per stance
  }
  return out;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Vector perturb_joints(const Vector& q0, double perturb_deg,
                      std::uint64_t stream_seed, int restart) {
  Vector q = q0;
  Rng rng(stream_seed, static_cast<std::uint64_t>(restart));
  const double r = perturb_deg * M_PI / 180.0;
  // all joint angles (torso pitch + legs); base translation untouched
  for (int j = PlanarBiped::kPitch; j < PlanarBiped::kDof; ++j)
    q[j] += rng.uniform(-r, r);
  return q;
}

double now_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

SolveReport multistart_solve(const SolverFn& solver,
                             const ProblemInstance& instance,
                             Condition condition, const MultistartConfig& ms,
                             const PlanarBiped& robot,
                             std::uint64_t method_seed,
                             SolutionFile* solution_out) {
  if (instance.task == Task::Trajectory)
    return windowed_trajectory_solve(solver, instance, condition, ms, robot,
                                     method_seed, solution_out, 6, nullptr);

  const auto t0 = std::chrono::steady_clock::now();
  SumStructuredProgram program =
      build_posture_program(robot, instance.terrain, instance.stances.at(0));
  Vector q0 = initialize_posture(robot, instance.stances.at(0), condition);
  const std::uint64_t stream = fnv1a(instance.id) ^ mix64(method_seed);

  SolveReport best;
  bool have = false;
  int iterations = 0;
  int restarts_used = 0;
  for (int r = 0; r <= ms.max_restarts; ++r) {
    Vector start = (r == 0) ? q0 : perturb_joints(q0, ms.perturb_deg, stream, r);
    SolveReport rep = solver(program, start);
    iterations += rep.iterations;
    restarts_used = r;
    if (!have || (rep.success && !best.success) ||
        (rep.success == best.success &&
         (rep.success ? rep.cost < best.cost
                      : rep.max_violation < best.max_violation))) {
      best = rep;
      have = true;
    }
    if (rep.success) break;
  }
  best.iterations = iterations;
  best.restarts_used = restarts_used;
  best.time_s = now_since(t0);
  if (solution_out) {
    solution_out->instance_id = instance.id;
    solution_out->waypoints = {best.x};
    solution_out->solver.seed = method_seed;
    solution_out->solver.restarts = restarts_used;
    solution_out->solver.time_s = best.time_s;
  }
  return best;
}

SolveReport windowed_trajectory_solve(const SolverFn& solver,
                                      const ProblemInstance& instance,
                                      Condition condition,
                                      const MultistartConfig& ms,
                                      const PlanarBiped& robot,
                                      std::uint64_t method_seed,
                                      SolutionFile* solution_out,
                                      int window_stances,
                                      std::vector<std::vector<Vector>>* window_waypoints_out) {
  if (instance.task != Task::Trajectory)
    throw std::invalid_argument("windowed_trajectory_solve: not a trajectory instance");
  const auto t0 = std::chrono::steady_clock::now();
  const int S = static_cast<int>(instance.stances.size());
  const int T = 2 * S;
  std::vector<Vector> inits = initialize(robot, instance, condition);
  // Prefilled with the initializer so a failed window still leaves a
  // complete concatenation to report and serialize.
  std::vector<Vector> planned = inits;
  const std::uint64_t stream = fnv1a(instance.id) ^ mix64(method_seed);

  SolveReport rep;
  bool all_ok = true;
  int iterations = 0;
  int window_index = 0;
  for (int s = 0; all_ok;) {
    const int width = std::min(window_stances, S - s);
    std::vector<Stance> window(instance.stances.begin() + s,
                               instance.stances.begin() + s + width);
    std::optional<Vector> pin;
    if (s > 0) pin = planned[static_cast<size_t>(2 * s)];
    SumStructuredProgram program =
        build_trajectory_program(robot, instance.terrain, window, pin);

    const int wd = 9 * 2 * width;
    Vector x0(wd);
    for (int t = 0; t < 2 * width; ++t)
      x0.segment<9>(9 * t) = inits[static_cast<size_t>(2 * s + t)];
    if (pin) x0.head<9>() = *pin;

    SolveReport wrep;
    bool ok = false;
    for (int r = 0; r <= ms.max_restarts; ++r) {
      Vector start = x0;
      if (r > 0) {
        for (int t = 0; t < 2 * width; ++t) {
          Vector qr = perturb_joints(x0.segment<9>(9 * t), ms.perturb_deg,
                                     stream ^ mix64(static_cast<std::uint64_t>(
                                                  1000 + window_index)),
                                     r * 64 + t);
          start.segment<9>(9 * t) = qr;
        }
        if (pin) start.head<9>() = *pin;
      }
      wrep = solver(program, start);
      iterations += wrep.iterations;
      if (wrep.success) {
        ok = true;
        rep.restarts_used += r;
        break;
      }
      if (r == ms.max_restarts) rep.restarts_used += r;
    }
    if (!ok) {
      all_ok = false;
      rep.detail = "window " + std::to_string(window_index) + " failed";
    }
    // Snap the pinned coordinates to the exact previous values so that
    // overlap waypoints are shared bitwise across windows.
    Vector sol = wrep.x;
    if (pin) sol.head<9>() = *pin;
    for (int t = 0; t < 2 * width; ++t)
      planned[static_cast<size_t>(2 * s + t)] = sol.segment<9>(9 * t);
    if (window_waypoints_out) {
      std::vector<Vector> wps;
      for (int t = 0; t < 2 * width; ++t) wps.push_back(sol.segment<9>(9 * t));
      window_waypoints_out->push_back(std::move(wps));
    }
    rep.mu_final = wrep.mu_final;
    ++window_index;
    if (s + width >= S) break;
    s += width - 1;  // 1-stance overlap, re-planned
  }

  // Score the concatenation on the full program (the evaluator's view).
  SumStructuredProgram full =
      build_trajectory_program(robot, instance.terrain, instance.stances);
  Vector x(9 * T);
  for (int t = 0; t < T; ++t) x.segment<9>(9 * t) = planned[static_cast<size_t>(t)];
  ProgramValues ev = evaluate_values(full, x);
  rep.x = x;
  rep.cost = ev.cost;
  rep.max_violation = ev.max_violation();
  rep.success = all_ok && ev.max_violation() <= 1e-3;
  rep.iterations = iterations;
  rep.time_s = now_since(t0);
  if (solution_out) {
    solution_out->instance_id = instance.id;
    solution_out->waypoints.clear();
    for (int t = 0; t < T; ++t)
      solution_out->waypoints.push_back(planned[static_cast<size_t>(t)]);
    solution_out->solver.seed = method_seed;
    solution_out->solver.restarts = rep.restarts_used;
    solution_out->solver.time_s = rep.time_s;
  }
  return rep;
}

SolveReport evaluate_solution(const ProblemInstance& instance,
                              const SolutionFile& solution,
                              const PlanarBiped& robot, double tolerance) {
  const size_t expect = instance.task == Task::Posture
                            ? 1
                            : 2 * instance.stances.size();
  if (solution.waypoints.size() != expect)
    throw std::invalid_argument(
        "solution waypoint count " + std::to_string(solution.waypoints.size()) +
        " does not match instance (" + std::to_string(expect) + ")");
  for (const auto& w : solution.waypoints)
    if (w.size() != PlanarBiped::kDof)
      throw std::invalid_argument("waypoints must have 9 entries");

  SolveReport rep;
  if (instance.task == Task::Posture) {
    SumStructuredProgram p =
        build_posture_program(robot, instance.terrain, instance.stances.at(0));
    ProgramValues ev = evaluate_values(p, solution.waypoints[0]);
    rep.x = solution.waypoints[0];
    rep.cost = ev.cost;
    rep.max_violation = ev.max_violation();
  } else {
    SumStructuredProgram p =
        build_trajectory_program(robot, instance.terrain, instance.stances);
    Vector x(9 * static_cast<int>(solution.waypoints.size()));
    for (size_t t = 0; t < solution.waypoints.size(); ++t)
      x.segment<9>(9 * static_cast<int>(t)) = solution.waypoints[t];
    ProgramValues ev = evaluate_values(p, x);
    rep.x = x;
    rep.cost = ev.cost;
    rep.max_violation = ev.max_violation();
  }
  rep.success = rep.max_violation <= tolerance;
  rep.restarts_used = solution.solver.restarts;
  rep.time_s = solution.solver.time_s;
  return rep;
}

std::string ComparisonTable::render_text() const {
  std::ostringstream os;
  os << "method   multi sample | task       condition    success   cost        time_s\n";
  os << "---------------------------------------------------------------------------\n";
  char buf[256];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof(buf),
                  "%-8s %5d %5.0f%% | %-10s %-12s %3d/%-3d  %-10.4g %-8.3g\n",
                  c.method_name.c_str(), c.multistarts, 100.0 * c.sample_size,
                  to_string(c.task), to_string(c.condition), c.solved, c.total,
                  c.mean_cost, c.mean_time_s);
    os << buf;
  }
  return os.str();
}

std::string ComparisonTable::render_csv(Task task) const {
  std::ostringstream os;
  os << "method,condition,multistarts,sample_size,success,mean_cost,mean_time_s\n";
  char buf[256];
  for (const auto& c : cells) {
    if (c.task != task) continue;
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.2f,%d/%d,%.9g,%.6g\n",
                  c.method_name.c_str(), to_string(c.condition), c.multistarts,
                  c.sample_size, c.solved, c.total, c.mean_cost, c.mean_time_s);
    os << buf;
  }
  return os.str();
}

ComparisonTable run_comparison(const std::vector<ProblemInstance>& instances,
                               const ComparisonRequest& request,
                               const PlanarBiped& robot,
                               std::vector<SolutionFile>* solutions_out) {
  ComparisonTable table;
  for (const auto& mc : request.methods) {
    SolverFn solver =
        request.solver_factory ? request.solver_factory(mc) : make_solver(mc);
    for (Condition cond : request.conditions) {
      // group per task so each cell aggregates one task's instances
      for (Task task : {Task::Posture, Task::Trajectory}) {
        std::vector<int> idx;
        for (int i = 0; i < static_cast<int>(instances.size()); ++i)
          if (instances[static_cast<size_t>(i)].task == task) idx.push_back(i);
        if (idx.empty()) continue;

        std::vector<SolveReport> reports(idx.size());
        std::vector<SolutionFile> sols(idx.size());
        auto work = [&](int k) {
          const ProblemInstance& inst = instances[static_cast<size_t>(idx[static_cast<size_t>(k)])];
          SolutionFile sf;
          reports[static_cast<size_t>(k)] = multistart_solve(
              solver, inst, cond, request.multistart, robot, mc.seed, &sf);
          sf.solver.name = mc.name();
          sols[static_cast<size_t>(k)] = std::move(sf);
        };
        if (request.jobs <= 1) {
          for (int k = 0; k < static_cast<int>(idx.size()); ++k) work(k);
        } else {
          std::atomic<int> next{0};
          std::vector<std::thread> pool;
          const int nw = std::min<int>(request.jobs, static_cast<int>(idx.size()));
          for (int w = 0; w < nw; ++w) {
            pool.emplace_back([&] {
              for (;;) {
                int k = next.fetch_add(1);
                if (k >= static_cast<int>(idx.size())) break;
                work(k);
              }
            });
          }
          for (auto& th : pool) th.join();
        }

        ComparisonCell cell;
        cell.method_name = mc.name();
        cell.condition = cond;
        cell.task = task;
        cell.multistarts = request.multistart.max_restarts;
        cell.sample_size = mc.effective_fraction();
        cell.total = static_cast<int>(idx.size());
        double cost_sum = 0.0, time_sum = 0.0;
        for (size_t k = 0; k < idx.size(); ++k) {
          const auto& r = reports[k];
          if (r.success) {
            ++cell.solved;
            cost_sum += r.cost;
            time_sum += r.time_s;
          } else {
            cell.failed_ids.push_back(
                instances[static_cast<size_t>(idx[k])].id);
          }
        }
        if (cell.solved > 0) {
          cell.mean_cost = cost_sum / cell.solved;
          cell.mean_time_s = time_sum / cell.solved;
        }
        table.cells.push_back(std::move(cell));
        if (solutions_out)
          for (auto& s : sols) solutions_out->push_back(std::move(s));
      }
    }
  }
  return table;
}

}  // namespace gaitopt
