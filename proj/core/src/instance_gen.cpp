#include <cmath>
#include <cstdio>

#include "gaitopt/bench.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

namespace {

constexpr double kYMax = 0.8, kYMin = -0.5;

Terrain gen_terrain(Rng& rng) {
  Terrain t;
  double x = -1.6, y = 0.0;
  t.ground.push_back({x, y});
  x += rng.uniform(0.6, 1.0);
  t.ground.push_back({x, y});
  while (x < 3.6) {
    double r = rng.next_double();
    if (r < 0.40) {  // flat stretch
      x += rng.uniform(0.45, 0.95);
      t.ground.push_back({x, y});
    } else if (r < 0.72) {  // step with landing
      double rise = rng.uniform(0.06, 0.25) * (rng.next_double() < 0.5 ? 1.0 : -1.0);
      if (y + rise > kYMax || y + rise < kYMin) rise = -rise;
      x += 0.02;
      y += rise;
      t.ground.push_back({x, y});
      x += rng.uniform(0.40, 0.85);
      t.ground.push_back({x, y});
    } else {  // slope up to ~20 degrees
      double len = rng.uniform(0.45, 0.85);
      double ang = rng.uniform(0.10, 0.35) * (rng.next_double() < 0.5 ? 1.0 : -1.0);
      double dy = len * std::tan(ang);
      if (y + dy > kYMax || y + dy < kYMin) dy = -dy;
      x += len;
      y += dy;
      t.ground.push_back({x, y});
    }
  }
  t.ground.push_back({x + 1.2, y});
  return t;
}

ConvexPolygon rect(double x0, double y0, double x1, double y1) {
  ConvexPolygon p;
  p.v = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return p;
}

void gen_obstacles(Rng& rng, Terrain& t, double region_lo, double region_hi,
                   double low_bar_prob = 0.35) {
  int count = 1 + static_cast<int>(rng.next_below(3));
  for (int k = 0; k < count; ++k) {
    double xc = rng.uniform(region_lo, region_hi);
    double h_local = t.height_at(xc);
    if (rng.next_double() < 0.65) {
      // overhead bar; occasionally low enough to force a crouch
      double w = rng.uniform(0.35, 0.9);
      double bottom = h_local + (rng.next_double() < low_bar_prob
                                     ? rng.uniform(0.96, 1.14)
                                     : rng.uniform(1.05, 1.45));
      t.obstacles.push_back(rect(xc - 0.5 * w, bottom, xc + 0.5 * w, bottom + 0.15));
    } else {
      // side block resting on the ground, offset from the region center
      double off = rng.uniform(0.45, 1.1) * (rng.next_double() < 0.5 ? 1.0 : -1.0);
      double bx = xc + off;
      double w = rng.uniform(0.15, 0.35);
      double base = t.height_at(bx) - 0.02;
      double h = rng.uniform(0.15, 0.45);
      t.obstacles.push_back(rect(bx - 0.5 * w, base, bx + 0.5 * w, base + h));
    }
  }
}

// A sole must lie flush on a single ground segment.
int segment_index_at(const Terrain& t, double x) {
  for (int i = 0; i < t.segment_count(); ++i)
    if (x >= t.ground[static_cast<size_t>(i)].x() &&
        x <= t.ground[static_cast<size_t>(i) + 1].x())
      return i;
  return -1;
}

bool foot_fits(const Terrain& t, double x, double half_sole) {
  int a = segment_index_at(t, x - half_sole);
  int b = segment_index_at(t, x + half_sole);
  return a >= 0 && a == b;
}

FootPose pose_on_ground(const Terrain& t, double x) {
  int s = segment_index_at(t, x);
  Seg seg = t.segment(s);
  double ang = std::atan2(seg.b.y() - seg.a.y(), seg.b.x() - seg.a.x());
  return FootPose{{x, t.height_at(x)}, ang};
}

// Planar soles are capsules of radius 0.06 each; target soles closer
// than the radius sum can never satisfy the foot-foot pair. Cheap filter
// before the expensive solver probe.
bool stance_geometrically_plausible(const PlanarBiped& robot, const Stance& st) {
  if (!st.left || !st.right) return true;
  auto sole = [&](const FootPose& fp) {
    Vec2 half = 0.5 * robot.sole_length *
                Vec2(std::cos(fp.angle), std::sin(fp.angle));
    return Seg{fp.position - half, fp.position + half};
  };
  double gap = seg_seg_closest(sole(*st.left), sole(*st.right)).dist;
  return gap >= 2.0 * robot.leg_radius + 0.005;
}

std::vector<double> step_kinks(const Terrain& t, double lo, double hi) {
  std::vector<double> out;
  for (size_t i = 1; i + 1 < t.ground.size(); ++i) {
    double x = t.ground[i].x();
    if (x < lo || x > hi) continue;
    double dy = std::abs(t.ground[i + 1].y() - t.ground[i - 1].y());
    if (dy > 0.05) out.push_back(x);
  }
  return out;
}

struct ProbeSetup {
  MethodConfig method;
  MultistartConfig ms;
};

ProbeSetup probe_setup() {
  ProbeSetup p;
  p.method.method = Method::Sqp;
  p.method.seed = 0;
  p.ms.max_restarts = 10;
  return p;
}

bool probe_stance(const PlanarBiped& robot, const Terrain& terrain,
                  const Stance& stance, const std::string& probe_id,
                  Vector* config_out, double* trunk_out) {
  ProblemInstance tmp;
  tmp.id = probe_id;
  tmp.task = Task::Posture;
  tmp.terrain = terrain;
  tmp.stances = {stance};
  ProbeSetup ps = probe_setup();
  SolverFn solver = make_solver(ps.method);
  SolveReport rep = multistart_solve(solver, tmp, Condition::Good, ps.ms, robot,
                                     ps.method.seed, nullptr);
  if (!rep.success) return false;
  if (config_out) *config_out = rep.x;
  if (trunk_out) *trunk_out = trunk_clearance(robot, rep.x, terrain);
  return true;
}

bool gen_posture_instance(const PlanarBiped& robot, std::uint64_t seed, int index,
                          int attempt, ProblemInstance* out, SolutionFile* probe) {
  Rng rng(seed, (static_cast<std::uint64_t>(index) << 16) |
                    static_cast<std::uint64_t>(attempt));
  Terrain terrain = gen_terrain(rng);
  const double half_sole = 0.1;

  double xa = 0.0, xb = 0.0;
  bool placed = false;
  auto kinks = step_kinks(terrain, -0.3, 2.9);
  bool straddle = !kinks.empty() && rng.next_double() < 0.45;
  for (int tries = 0; tries < 60 && !placed; ++tries) {
    if (straddle) {
      double kx = kinks[rng.next_below(kinks.size())];
      xa = kx - rng.uniform(0.08, 0.20);
      xb = kx + rng.uniform(0.10, 0.26);
    } else {
      xa = rng.uniform(-0.3, 2.6);
      xb = xa + rng.uniform(0.10, 0.40);
    }
    placed = foot_fits(terrain, xa, half_sole) && foot_fits(terrain, xb, half_sole);
  }
  if (!placed) return false;

  Stance stance;
  bool left_leads = rng.next_double() < 0.5;
  FootPose pa = pose_on_ground(terrain, xa);
  FootPose pb = pose_on_ground(terrain, xb);
  stance.left = left_leads ? pb : pa;
  stance.right = left_leads ? pa : pb;
  if (!stance_geometrically_plausible(robot, stance)) return false;

  gen_obstacles(rng, terrain, std::min(xa, xb) - 0.2, std::max(xa, xb) + 0.2);

  char id[64];
  std::snprintf(id, sizeof(id), "posture_%03d", index);
  Vector config;
  double trunk = 0.0;
  if (!probe_stance(robot, terrain, stance, id, &config, &trunk)) return false;

  out->id = id;
  out->task = Task::Posture;
  out->terrain = terrain;
  out->stances = {stance};
  out->features.step_length = std::abs(xb - xa);
  out->features.step_width = 0.0;
  out->features.step_height = std::abs(pb.position.y() - pa.position.y());
  out->features.trunk_collision_distance = trunk;

  probe->instance_id = id;
  probe->waypoints = {config};
  probe->solver.name = "probe_sqp";
  return true;
}

bool gen_trajectory_instance(const PlanarBiped& robot, std::uint64_t seed,
                             int index, int attempt, ProblemInstance* out,
                             SolutionFile* probe) {
  Rng rng(seed, (1ULL << 40) | (static_cast<std::uint64_t>(index) << 16) |
                    static_cast<std::uint64_t>(attempt));
  Terrain terrain = gen_terrain(rng);
  const double half_sole = 0.1;
  const int n_stances = 4 + static_cast<int>(rng.next_below(11));  // 4..14

  // resample the whole band each try so kinks cannot trap the search
  auto place_in_band = [&](double lo, double hi, double* x) {
    for (int tries = 0; tries < 60; ++tries) {
      double cand = rng.uniform(lo, hi);
      if (foot_fits(terrain, cand, half_sole)) {
        *x = cand;
        return true;
      }
    }
    return false;
  };

  double xl = 0.0, xr = 0.0;
  double start = rng.uniform(-0.5, 0.2);
  if (!place_in_band(start - 0.15, start + 0.15, &xl)) return false;
  if (!place_in_band(xl + 0.34, xl + 0.50, &xr)) return false;

  std::vector<Stance> stances;
  Stance st;
  st.left = pose_on_ground(terrain, xl);
  st.right = pose_on_ground(terrain, xr);
  if (!stance_geometrically_plausible(robot, st)) return false;
  stances.push_back(st);

  Side moving = xl < xr ? Side::Left : Side::Right;
  double len_sum = 0.0, height_max = 0.0;
  for (int j = 1; j < static_cast<int>(n_stances); ++j) {
    double other_x = moving == Side::Left ? xr : xl;
    double nx = 0.0;
    if (!place_in_band(other_x + 0.34, other_x + 0.55, &nx)) return false;
    double prev_x = moving == Side::Left ? xl : xr;
    double prev_y = terrain.height_at(prev_x);
    if (moving == Side::Left)
      xl = nx;
    else
      xr = nx;
    Stance next = stances.back();
    FootPose np = pose_on_ground(terrain, nx);
    if (moving == Side::Left)
      next.left = np;
    else
      next.right = np;
    if (!stance_geometrically_plausible(robot, next)) return false;
    stances.push_back(next);
    len_sum += std::abs(nx - prev_x);
    height_max = std::max(height_max, std::abs(np.position.y() - prev_y));
    moving = moving == Side::Left ? Side::Right : Side::Left;
  }

  double lo = std::min(stances.front().left->position.x(),
                       stances.front().right->position.x());
  double hi = std::max(stances.back().left->position.x(),
                       stances.back().right->position.x());
  gen_obstacles(rng, terrain, lo, hi, 0.22);

  char id[64];
  std::snprintf(id, sizeof(id), "trajectory_%03d", index);
  std::vector<Vector> probe_configs;
  double trunk = std::numeric_limits<double>::infinity();
  for (const auto& stance : stances) {
    Vector cfg;
    double tc = 0.0;
    if (!probe_stance(robot, terrain, stance, id, &cfg, &tc)) return false;
    probe_configs.push_back(cfg);
    trunk = std::min(trunk, tc);
  }

  out->id = id;
  out->task = Task::Trajectory;
  out->terrain = terrain;
  out->stances = stances;
  out->features.step_length =
      len_sum / std::max(1, static_cast<int>(n_stances) - 1);
  out->features.step_width = 0.0;
  out->features.step_height = height_max;
  out->features.trunk_collision_distance = trunk;

  probe->instance_id = id;
  probe->waypoints = probe_configs;  // one known-feasible config per stance
  probe->solver.name = "probe_sqp";
  return true;
}

}  // namespace

GeneratedSuite generate_instances(const GeneratorConfig& cfg,
                                  const PlanarBiped& robot) {
  GeneratedSuite suite;
  for (int i = 0; i < cfg.n_posture; ++i) {
    bool done = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !done; ++attempt) {
      ProblemInstance inst;
      SolutionFile probe;
      if (gen_posture_instance(robot, cfg.seed, i, attempt, &inst, &probe)) {
        suite.instances.push_back(std::move(inst));
        suite.probes.push_back(std::move(probe));
        done = true;
      }
    }
    if (!done)
      suite.warnings.push_back("posture_" + std::to_string(i) +
                               ": no feasible sample, skipped");
  }
  for (int i = 0; i < cfg.n_trajectory; ++i) {
    bool done = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !done; ++attempt) {
      ProblemInstance inst;
      SolutionFile probe;
      if (gen_trajectory_instance(robot, cfg.seed, i, attempt, &inst, &probe)) {
        suite.instances.push_back(std::move(inst));
        suite.probes.push_back(std::move(probe));
        done = true;
      }
    }
    if (!done)
      suite.warnings.push_back("trajectory_" + std::to_string(i) +
                               ": no feasible sample, skipped");
  }
  return suite;
}

}  // namespace gaitopt
