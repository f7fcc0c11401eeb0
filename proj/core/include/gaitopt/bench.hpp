#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "gaitopt/first_order.hpp"
#include "gaitopt/robot.hpp"
#include "gaitopt/sqp.hpp"
#include "gaitopt/types.hpp"

namespace gaitopt {

enum class Task { Posture, Trajectory };
enum class Condition { Good, InCollision };
enum class Method { Sqp, Isqp, Gd, Sgd, Adam, Nadam, Isgd, Iadam, Inadam };

const char* to_string(Task t);
const char* to_string(Condition c);
const char* to_string(Method m);
Task parse_task(const std::string& s);
Condition parse_condition(const std::string& s);
Method parse_method(const std::string& s);

struct InstanceFeatures {
  double step_length = 0.0;
  double step_width = 0.0;  // planar: always 0, kept for the record
  double step_height = 0.0;
  double trunk_collision_distance = 0.0;
};

struct ProblemInstance {
  std::string id;
  Task task = Task::Posture;
  Terrain terrain;
  std::vector<Stance> stances;  // exactly 1 for posture
  InstanceFeatures features;
};

struct SolverMeta {
  std::string name;
  std::uint64_t seed = 0;
  int restarts = 0;
  double time_s = 0.0;
};

struct SolutionFile {
  std::string instance_id;
  std::vector<Vector> waypoints;  // 9 reals each
  SolverMeta solver;
};

/// One of the nine benchmarked solver configurations.
struct MethodConfig {
  Method method = Method::Sqp;
  double fraction = -1.0;  // <0: use the method's default sample size
  std::uint64_t seed = 0;
  PenaltyConfig penalty;
  double time_limit_s = std::numeric_limits<double>::infinity();
  int gd_max_inner_iterations = 1500;
  int sqp_max_convexify_iterations = 50;

  double effective_fraction() const;
  std::string name() const;  // e.g. "isqp"
};

/// Resolve a MethodConfig to a callable program solver.
using SolverFn =
    std::function<SolveReport(const SumStructuredProgram&, const Vector&)>;
SolverFn make_solver(const MethodConfig& config);

struct GeneratorConfig {
  std::uint64_t seed = 42;
  int n_posture = 50;
  int n_trajectory = 50;
  int max_attempts = 60;  // resampling budget per instance
};

struct GeneratedSuite {
  std::vector<ProblemInstance> instances;
  /// Known-feasible probe configurations, one file per instance
  /// (trajectory probes hold one configuration per stance).
  std::vector<SolutionFile> probes;
  std::vector<std::string> warnings;
};

/// Seeded suite generation with an SQP feasibility probe; instances the
/// probe cannot solve are resampled.
GeneratedSuite generate_instances(const GeneratorConfig& cfg,
                                  const PlanarBiped& robot = {});

/// Initializer: nominal bent-knee posture, base centered on
/// the active contacts, soles at max target height + 0.20 m (good) or
/// min target height - 0.05 m (in collision).
Vector initialize_posture(const PlanarBiped& robot, const Stance& stance,
                          Condition condition);

/// One configuration per waypoint (posture: a single one).
std::vector<Vector> initialize(const PlanarBiped& robot,
                               const ProblemInstance& instance,
                               Condition condition);

struct MultistartConfig {
  int max_restarts = 10;
  double perturb_deg = 5.0;
};

/// Restart driver: run from the initializer; on failure retry from the
/// initializer with every joint angle perturbed by U(-perturb, perturb)
/// (base translation untouched). The perturbation stream is a pure
/// function of (instance id, method seed, restart index).
SolveReport multistart_solve(const SolverFn& solver,
                             const ProblemInstance& instance,
                             Condition condition, const MultistartConfig& ms,
                             const PlanarBiped& robot,
                             std::uint64_t method_seed,
                             SolutionFile* solution_out = nullptr);

/// Sliding-window trajectory driver: 6 stances (12 waypoints) per
/// window, 1-stance overlap re-planned, first window waypoint pinned to
/// the previously planned value. Failure of any window fails the solve.
SolveReport windowed_trajectory_solve(const SolverFn& solver,
                                      const ProblemInstance& instance,
                                      Condition condition,
                                      const MultistartConfig& ms,
                                      const PlanarBiped& robot,
                                      std::uint64_t method_seed,
                                      SolutionFile* solution_out = nullptr,
                                      int window_stances = 6,
                                      std::vector<std::vector<Vector>>* window_waypoints_out = nullptr);

/// The official scorer: rebuilds the instance's program and reports the
/// task cost and max constraint violation of the given waypoints.
SolveReport evaluate_solution(const ProblemInstance& instance,
                              const SolutionFile& solution,
                              const PlanarBiped& robot = {},
                              double tolerance = 1e-3);

struct ComparisonCell {
  std::string method_name;
  Condition condition = Condition::Good;
  Task task = Task::Posture;
  int multistarts = 0;
  double sample_size = 1.0;  // fraction of n
  int solved = 0;
  int total = 0;
  double mean_cost = 0.0;    // over solved instances
  double mean_time_s = 0.0;  // over solved instances
  std::vector<std::string> failed_ids;
};

struct ComparisonTable {
  std::vector<ComparisonCell> cells;
  std::string render_text() const;
  /// CSV rows (method, condition, multistarts, sample_size, success,
  /// mean_cost, mean_time_s) for one task.
  std::string render_csv(Task task) const;
};

struct ComparisonRequest {
  std::vector<MethodConfig> methods;
  std::vector<Condition> conditions;
  MultistartConfig multistart;
  int jobs = 1;
  /// Test hook; defaults to make_solver.
  std::function<SolverFn(const MethodConfig&)> solver_factory;
};

/// Run every (method, condition) cell over the instance list. When
/// solutions_out is given, one solution file per (cell, instance) is
/// appended in deterministic order.
ComparisonTable run_comparison(const std::vector<ProblemInstance>& instances,
                               const ComparisonRequest& request,
                               const PlanarBiped& robot = {},
                               std::vector<SolutionFile>* solutions_out = nullptr);

}  // namespace gaitopt
