#include "gaitopt/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "gaitopt/bench.hpp"
#include "gaitopt/json_io.hpp"
#include "gaitopt/selftest.hpp"

namespace gaitopt {

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_mu_ladder(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

int cmd_generate(std::uint64_t seed, const std::string& out_dir, int n_posture,
                 int n_trajectory) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.n_posture = n_posture;
  cfg.n_trajectory = n_trajectory;
  std::cout << "generating " << n_posture << "+" << n_trajectory
            << " instances (seed " << seed << ")...\n";
  GeneratedSuite suite = generate_instances(cfg);
  write_suite(out_dir, suite, seed);
  for (const auto& w : suite.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "wrote " << suite.instances.size() << " instances to "
            << out_dir << "\n";
  return suite.warnings.empty() ? 0 : 1;
}

struct SolveArgs {
  std::string instances_dir, out_dir;
  std::string method = "sqp";
  std::string condition = "good";
  std::string task = "all";
  int multistarts = 10;
  double fraction = -1.0;
  std::uint64_t seed = 0;
  std::string mu_ladder;
  double time_limit = std::numeric_limits<double>::infinity();
  int jobs = 1;
  int limit = 0;
};

int cmd_solve(const SolveArgs& a) {
  LoadedSuite suite = load_suite(a.instances_dir);
  std::vector<ProblemInstance> instances;
  std::map<Task, int> taken;
  for (auto& inst : suite.instances) {
    if (a.task != "all" && inst.task != parse_task(a.task)) continue;
    if (a.limit > 0 && taken[inst.task] >= a.limit) continue;
    ++taken[inst.task];
    instances.push_back(std::move(inst));
  }
  if (instances.empty()) {
    std::cerr << "no instances selected\n";
    return 1;
  }

  ComparisonRequest req;
  MethodConfig mc;
  mc.method = parse_method(a.method);
  mc.fraction = a.fraction;
  mc.seed = a.seed;
  mc.time_limit_s = a.time_limit;
  if (!a.mu_ladder.empty()) mc.penalty.mu_ladder = parse_mu_ladder(a.mu_ladder);
  mc.penalty.validate();
  req.methods = {mc};
  req.conditions = {parse_condition(a.condition)};
  req.multistart.max_restarts = a.multistarts;
  req.jobs = a.jobs;

  std::vector<SolutionFile> solutions;
  ComparisonTable table = run_comparison(instances, req, PlanarBiped{}, &solutions);

  fs::create_directories(a.out_dir);
  for (const auto& sol : solutions) {
    std::string fname = sol.instance_id + "." + mc.name() + "." +
                        to_string(req.conditions[0]) + ".solution.json";
    write_text_file(fs::path(a.out_dir) / fname, solution_to_json(sol));
  }
  for (Task task : {Task::Posture, Task::Trajectory}) {
    bool any = false;
    for (const auto& c : table.cells) any = any || c.task == task;
    if (!any) continue;
    std::string fname = std::string("report_") + to_string(task) + ".csv";
    write_text_file(fs::path(a.out_dir) / fname, table.render_csv(task));
  }
  std::cout << table.render_text();
  return 0;
}

int cmd_evaluate(const std::string& instances_dir, const std::string& solutions_dir,
                 double tolerance, const std::string& report_path) {
  LoadedSuite suite = load_suite(instances_dir);
  std::map<std::string, const ProblemInstance*> by_id;
  for (const auto& inst : suite.instances) by_id[inst.id] = &inst;

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(solutions_dir))
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().filename() != "manifest.json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::ostringstream csv;
  csv << "file,instance,success,cost,max_violation\n";
  int failures = 0;
  for (const auto& f : files) {
    try {
      SolutionFile sol = solution_from_json(read_text_file(f));
      auto it = by_id.find(sol.instance_id);
      if (it == by_id.end())
        throw std::invalid_argument("unknown instance_id '" + sol.instance_id + "'");
      SolveReport rep = evaluate_solution(*it->second, sol, PlanarBiped{}, tolerance);
      std::cout << f.filename().string() << ": success=" << rep.success
                << " cost=" << rep.cost << " max_violation=" << rep.max_violation
                << "\n";
      csv << f.filename().string() << "," << sol.instance_id << ","
          << (rep.success ? 1 : 0) << "," << rep.cost << "," << rep.max_violation
          << "\n";
    } catch (const std::exception& e) {
      std::cerr << f.filename().string() << ": ERROR: " << e.what() << "\n";
      ++failures;
    }
  }
  if (!report_path.empty()) write_text_file(report_path, csv.str());
  return failures == 0 ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_path) {
  std::ostringstream merged;
  merged << "task,method,condition,multistarts,sample_size,success,mean_cost,mean_time_s\n";
  std::ostringstream text;
  for (const auto& dir : dirs) {
    for (Task task : {Task::Posture, Task::Trajectory}) {
      fs::path p = fs::path(dir) / (std::string("report_") + to_string(task) + ".csv");
      if (!fs::exists(p)) continue;
      std::istringstream in(read_text_file(p));
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line))
        if (!line.empty()) merged << to_string(task) << "," << line << "\n";
    }
  }
  std::cout << merged.str();
  if (!out_path.empty()) write_text_file(out_path, merged.str());
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"planar legged-robot posture/trajectory optimization benchmark"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate the problem suite");
  std::uint64_t gen_seed = 42;
  std::string gen_out = "instances";
  int n_posture = 50, n_trajectory = 50;
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n-posture", n_posture, "posture instance count");
  gen->add_option("--n-trajectory", n_trajectory, "trajectory instance count");

  // solve
  auto* solve = app.add_subcommand("solve", "run one method over the suite");
  SolveArgs sa;
  solve->add_option("--instances", sa.instances_dir, "instances directory")->required();
  solve->add_option("--out", sa.out_dir, "solutions output directory")->required();
  solve->add_option("--method", sa.method,
                    "sqp|isqp|gd|sgd|adam|nadam|isgd|iadam|inadam");
  solve->add_option("--condition", sa.condition, "good|in_collision");
  solve->add_option("--task", sa.task, "all|posture|trajectory");
  solve->add_option("--multistarts", sa.multistarts, "restart budget");
  solve->add_option("--fraction", sa.fraction, "sample size fraction (method default if unset)");
  solve->add_option("--seed", sa.seed, "method seed");
  solve->add_option("--mu-ladder", sa.mu_ladder, "comma-separated penalty ladder");
  solve->add_option("--time-limit", sa.time_limit, "per-solve time limit (s)");
  solve->add_option("--jobs", sa.jobs, "parallel instances (default 1 for timing fidelity)");
  solve->add_option("--limit", sa.limit, "solve only the first N instances per task");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score a solutions directory");
  std::string ev_instances, ev_solutions, ev_report;
  double ev_tol = 1e-3;
  eval->add_option("--instances", ev_instances, "instances directory")->required();
  eval->add_option("--solutions", ev_solutions, "solutions directory")->required();
  eval->add_option("--tolerance", ev_tol, "constraint tolerance");
  eval->add_option("--report", ev_report, "write a CSV summary here");

  // report
  auto* rep = app.add_subcommand("report", "merge solve report rows");
  std::vector<std::string> rep_dirs;
  std::string rep_out;
  rep->add_option("--in", rep_dirs, "directories holding report_*.csv")->required();
  rep->add_option("--out", rep_out, "merged CSV output path");

  // selftest
  app.add_subcommand("selftest", "gradient checks and QP oracle suite");

  std::vector<std::string> argv_copy = args;
  std::vector<char*> argv;
  std::string prog = "gaitopt";
  argv.push_back(prog.data());
  for (auto& s : argv_copy) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_seed, gen_out, n_posture, n_trajectory);
    if (solve->parsed()) return cmd_solve(sa);
    if (eval->parsed()) return cmd_evaluate(ev_instances, ev_solutions, ev_tol, ev_report);
    if (rep->parsed()) return cmd_report(rep_dirs, rep_out);
    // selftest
    SelftestResult r = run_selftest();
    std::cout << r.log;
    return r.passed ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gaitopt
