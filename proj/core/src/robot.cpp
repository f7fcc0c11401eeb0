#include "gaitopt/robot.hpp"

#include <cmath>

namespace gaitopt {

namespace {

using Mat29 = Eigen::Matrix<double, 2, 9>;

Vec2 up_dir(double theta) { return {-std::sin(theta), std::cos(theta)}; }
Vec2 up_dir_d(double theta) { return {-std::cos(theta), -std::sin(theta)}; }
Vec2 down_dir(double phi) { return {std::sin(phi), -std::cos(phi)}; }
Vec2 down_dir_d(double phi) { return {std::cos(phi), std::sin(phi)}; }
Vec2 axis_dir(double phi) { return {std::cos(phi), std::sin(phi)}; }
Vec2 axis_dir_d(double phi) { return {-std::sin(phi), std::cos(phi)}; }

struct LegCoords {
  int hip, knee, ankle;
};
LegCoords leg_coords(Side s) {
  if (s == Side::Left)
    return {PlanarBiped::kLHip, PlanarBiped::kLKnee, PlanarBiped::kLAnkle};
  return {PlanarBiped::kRHip, PlanarBiped::kRKnee, PlanarBiped::kRAnkle};
}

LinkId thigh_of(Side s) { return s == Side::Left ? LinkId::LeftThigh : LinkId::RightThigh; }
LinkId shank_of(Side s) { return s == Side::Left ? LinkId::LeftShank : LinkId::RightShank; }
LinkId foot_of(Side s) { return s == Side::Left ? LinkId::LeftFoot : LinkId::RightFoot; }

}  // namespace

const char* to_string(LinkId id) {
  switch (id) {
    case LinkId::Torso: return "torso";
    case LinkId::LeftThigh: return "Lthigh";
    case LinkId::LeftShank: return "Lshank";
    case LinkId::LeftFoot: return "Lfoot";
    case LinkId::RightThigh: return "Rthigh";
    case LinkId::RightShank: return "Rshank";
    case LinkId::RightFoot: return "Rfoot";
  }
  return "?";
}

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

double Terrain::height_at(double x) const {
  if (ground.size() < 2) return 0.0;
  if (x <= ground.front().x()) return ground.front().y();
  if (x >= ground.back().x()) return ground.back().y();
  for (size_t i = 0; i + 1 < ground.size(); ++i) {
    if (x <= ground[i + 1].x()) {
      double t = (x - ground[i].x()) / (ground[i + 1].x() - ground[i].x());
      return ground[i].y() + t * (ground[i + 1].y() - ground[i].y());
    }
  }
  return ground.back().y();
}

void Terrain::validate() const {
  if (ground.size() < 2) throw std::invalid_argument("terrain: ground needs >= 2 points");
  for (size_t i = 0; i + 1 < ground.size(); ++i)
    if (!(ground[i + 1].x() > ground[i].x()))
      throw std::invalid_argument("terrain: ground x must be strictly increasing");
  for (const auto& poly : obstacles) {
    if (poly.v.size() < 3) throw std::invalid_argument("terrain: polygon needs >= 3 vertices");
    const int n = static_cast<int>(poly.v.size());
    for (int i = 0; i < n; ++i) {
      Vec2 a = poly.v[static_cast<size_t>(i)];
      Vec2 b = poly.v[static_cast<size_t>((i + 1) % n)];
      Vec2 c = poly.v[static_cast<size_t>((i + 2) % n)];
      double cr = (b.x() - a.x()) * (c.y() - b.y()) - (b.y() - a.y()) * (c.x() - b.x());
      if (cr < -1e-12)
        throw std::invalid_argument("terrain: polygon must be convex counterclockwise");
    }
  }
}

Vec2 FkResult::sole_mid(Side s) const {
  const LinkGeom& f = links[static_cast<size_t>(foot_of(s))];
  return 0.5 * (f.p1 + f.p2);
}

double FkResult::sole_angle(Side s) const {
  return frames[static_cast<size_t>(foot_of(s))].angle;
}

FkResult forward_kinematics(const PlanarBiped& robot, const Vector& q) {
  if (q.size() != PlanarBiped::kDof)
    throw std::invalid_argument("forward_kinematics: q must have 9 entries");
  FkResult fk;
  Vec2 base(q[0], q[1]);
  Mat29 JB = Mat29::Zero();
  JB(0, 0) = 1.0;
  JB(1, 1) = 1.0;

  {  // torso
    double th = q[PlanarBiped::kPitch];
    LinkGeom& g = fk.links[static_cast<size_t>(LinkId::Torso)];
    g.p1 = base;
    g.J1 = JB;
    g.p2 = base + robot.torso_length * up_dir(th);
    g.J2 = JB;
    g.J2.col(PlanarBiped::kPitch) += robot.torso_length * up_dir_d(th);
    g.radius = robot.torso_radius;
    fk.frames[static_cast<size_t>(LinkId::Torso)] = {base, th};
  }

  for (Side s : {Side::Left, Side::Right}) {
    LegCoords c = leg_coords(s);
    double ph = q[c.hip];
    double ps = ph + q[c.knee];
    double pf = ps + q[c.ankle];

    Vec2 knee = base + robot.thigh_length * down_dir(ph);
    Mat29 JK = JB;
    JK.col(c.hip) += robot.thigh_length * down_dir_d(ph);

    Vec2 ankle = knee + robot.shank_length * down_dir(ps);
    Mat29 JA = JK;
    Vec2 dps = robot.shank_length * down_dir_d(ps);
    JA.col(c.hip) += dps;
    JA.col(c.knee) += dps;

    Vec2 half = 0.5 * robot.sole_length * axis_dir(pf);
    Vec2 dhalf = 0.5 * robot.sole_length * axis_dir_d(pf);

    LinkGeom& thigh = fk.links[static_cast<size_t>(thigh_of(s))];
    thigh.p1 = base;
    thigh.J1 = JB;
    thigh.p2 = knee;
    thigh.J2 = JK;
    thigh.radius = robot.leg_radius;
    fk.frames[static_cast<size_t>(thigh_of(s))] = {base, ph};

    LinkGeom& shank = fk.links[static_cast<size_t>(shank_of(s))];
    shank.p1 = knee;
    shank.J1 = JK;
    shank.p2 = ankle;
    shank.J2 = JA;
    shank.radius = robot.leg_radius;
    fk.frames[static_cast<size_t>(shank_of(s))] = {knee, ps};

    LinkGeom& foot = fk.links[static_cast<size_t>(foot_of(s))];
    foot.p1 = ankle - half;
    foot.p2 = ankle + half;
    foot.J1 = JA;
    foot.J2 = JA;
    for (int j : {c.hip, c.knee, c.ankle}) {
      foot.J1.col(j) -= dhalf;
      foot.J2.col(j) += dhalf;
    }
    foot.radius = robot.leg_radius;
    fk.frames[static_cast<size_t>(foot_of(s))] = {ankle, pf};
  }
  return fk;
}

FootResidual foot_pose_residual(const PlanarBiped& robot, const Vector& q,
                                Side side, const FootPose& target) {
  FkResult fk = forward_kinematics(robot, q);
  LegCoords c = leg_coords(side);
  const LinkGeom& foot = fk.links[static_cast<size_t>(foot_of(side))];
  Vec2 mid = 0.5 * (foot.p1 + foot.p2);
  Mat29 Jmid = 0.5 * (foot.J1 + foot.J2);

  FootResidual out;
  out.value.head<2>() = mid - target.position;
  out.value[2] = wrap_angle(fk.sole_angle(side) - target.angle);
  out.jacobian.setZero();
  out.jacobian.topRows<2>() = Jmid;
  out.jacobian(2, c.hip) = 1.0;
  out.jacobian(2, c.knee) = 1.0;
  out.jacobian(2, c.ankle) = 1.0;
  return out;
}

ComResult center_of_mass(const PlanarBiped& robot, const Vector& q) {
  FkResult fk = forward_kinematics(robot, q);
  double M = robot.total_mass();
  Vec2 acc = Vec2::Zero();
  Mat29 Jacc = Mat29::Zero();
  auto add = [&](LinkId id, double mass, bool midpoint) {
    const LinkGeom& g = fk.links[static_cast<size_t>(id)];
    if (midpoint) {
      acc += mass * 0.5 * (g.p1 + g.p2);
      Jacc += mass * 0.5 * (g.J1 + g.J2);
    } else {
      acc += mass * g.p1;
      Jacc += mass * g.J1;
    }
  };
  add(LinkId::Torso, robot.torso_mass, true);
  for (Side s : {Side::Left, Side::Right}) {
    add(thigh_of(s), robot.thigh_mass, true);
    add(shank_of(s), robot.shank_mass, true);
    add(foot_of(s), robot.foot_mass, true);  // foot midpoint == ankle
  }
  ComResult out;
  out.com = acc / M;
  out.jacobian = Jacc / M;
  return out;
}

std::pair<double, double> support_interval(const Stance& stance,
                                           const PlanarBiped& robot) {
  if (stance.contact_count() == 0)
    throw std::invalid_argument("support_interval: no contact feet");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Side s : {Side::Left, Side::Right}) {
    const auto& fp = stance.foot(s);
    if (!fp) continue;
    Vec2 half = 0.5 * robot.sole_length * axis_dir(fp->angle);
    double x1 = fp->position.x() - half.x();
    double x2 = fp->position.x() + half.x();
    lo = std::min(lo, std::min(x1, x2));
    hi = std::max(hi, std::max(x1, x2));
  }
  return {lo, hi};
}

TorqueResult static_torques(const PlanarBiped& robot, const Vector& q) {
  // U = g * sum_j m_j y_j over link midpoints; tau_k = dU/dq_k for the
  // six leg joints. Masses hang below the hip, so only sin/cos of the
  // absolute leg angles appear.
  const double g = robot.gravity;
  const double c1 = g * (0.5 * robot.thigh_mass * robot.thigh_length +
                         (robot.shank_mass + robot.foot_mass) * robot.thigh_length);
  const double c2 = g * (0.5 * robot.shank_mass * robot.shank_length +
                         robot.foot_mass * robot.shank_length);
  TorqueResult out;
  out.tau.setZero();
  out.jacobian.setZero();
  int row = 0;
  for (Side s : {Side::Left, Side::Right}) {
    LegCoords c = leg_coords(s);
    double ph = q[c.hip];
    double ps = ph + q[c.knee];
    double sh = std::sin(ph), ss = std::sin(ps);
    double chp = std::cos(ph), cs = std::cos(ps);
    out.tau[row] = c1 * sh + c2 * ss;           // hip
    out.tau[row + 1] = c2 * ss;                 // knee
    out.tau[row + 2] = 0.0;                     // ankle (sole mid at ankle)
    out.jacobian(row, c.hip) = c1 * chp + c2 * cs;
    out.jacobian(row, c.knee) = c2 * cs;
    out.jacobian(row + 1, c.hip) = c2 * cs;
    out.jacobian(row + 1, c.knee) = c2 * cs;
    row += 3;
  }
  return out;
}

std::vector<CollisionPair> collision_pairs(const PlanarBiped& robot,
                                           const Terrain& terrain,
                                           const CollisionPairOptions& opts) {
  std::vector<CollisionPair> pairs;
  auto link_radius = [&](LinkId id) {
    return id == LinkId::Torso ? robot.torso_radius : robot.leg_radius;
  };
  const LinkId all_links[kNumLinks] = {
      LinkId::Torso, LinkId::LeftThigh, LinkId::LeftShank, LinkId::LeftFoot,
      LinkId::RightThigh, LinkId::RightShank, LinkId::RightFoot};

  auto exempted = [&](LinkId id, const Seg& seg) {
    const FootGroundExemption* ex = nullptr;
    if (id == LinkId::LeftFoot || id == LinkId::LeftShank) ex = &opts.left;
    if (id == LinkId::RightFoot || id == LinkId::RightShank) ex = &opts.right;
    if (!ex || !ex->active) return false;
    double slo = std::min(seg.a.x(), seg.b.x());
    double shi = std::max(seg.a.x(), seg.b.x());
    return shi >= ex->x_lo && slo <= ex->x_hi;
  };
  for (int s = 0; s < terrain.segment_count(); ++s) {
    Seg seg = terrain.segment(s);
    if (std::max(seg.a.x(), seg.b.x()) < opts.x_min ||
        std::min(seg.a.x(), seg.b.x()) > opts.x_max)
      continue;
    for (LinkId id : all_links) {
      if (exempted(id, seg)) continue;
      CollisionPair p;
      p.type = CollisionPair::Type::Ground;
      p.link = id;
      p.other = s;
      p.radius_sum = link_radius(id);
      p.label = std::string("sd:") + to_string(id) + ":g" + std::to_string(s);
      pairs.push_back(std::move(p));
    }
  }
  for (int o = 0; o < static_cast<int>(terrain.obstacles.size()); ++o) {
    const auto& poly = terrain.obstacles[static_cast<size_t>(o)];
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    for (const auto& v : poly.v) {
      xlo = std::min(xlo, v.x());
      xhi = std::max(xhi, v.x());
    }
    if (xhi < opts.x_min || xlo > opts.x_max) continue;
    for (LinkId id : all_links) {
      CollisionPair p;
      p.type = CollisionPair::Type::Obstacle;
      p.link = id;
      p.other = o;
      p.radius_sum = link_radius(id);
      p.label = std::string("sd:") + to_string(id) + ":o" + std::to_string(o);
      pairs.push_back(std::move(p));
    }
  }
  if (!opts.include_self_pairs) return pairs;
  // Fixed self-pair list. Links sharing the base anchor (torso/thighs)
  // are adjacent and excluded.
  auto self_pair = [&](LinkId a, LinkId b) {
    CollisionPair p;
    p.type = CollisionPair::Type::SelfPair;
    p.link = a;
    p.other = static_cast<int>(b);
    p.radius_sum = link_radius(a) + link_radius(b);
    p.label = std::string("sd:") + to_string(a) + ":" + to_string(b);
    pairs.push_back(std::move(p));
  };
  self_pair(LinkId::Torso, LinkId::LeftShank);
  self_pair(LinkId::Torso, LinkId::RightShank);
  self_pair(LinkId::Torso, LinkId::LeftFoot);
  self_pair(LinkId::Torso, LinkId::RightFoot);
  for (LinkId a : {LinkId::LeftThigh, LinkId::LeftShank, LinkId::LeftFoot}) {
    for (LinkId b : {LinkId::RightThigh, LinkId::RightShank, LinkId::RightFoot}) {
      if (a == LinkId::LeftThigh && b == LinkId::RightThigh) continue;
      self_pair(a, b);
    }
  }
  return pairs;
}

SignedDistance evaluate_pair(const PlanarBiped& robot, const Terrain& terrain,
                             const CollisionPair& pair, const FkResult& fk) {
  (void)robot;
  const LinkGeom& la = fk.links[static_cast<size_t>(pair.link)];
  SignedDistance out;
  out.label = pair.label;
  DistWitness w;
  switch (pair.type) {
    case CollisionPair::Type::Ground:
      w = link_ground_distance(la.seg(), terrain.segment(pair.other));
      out.sd = w.sd - pair.radius_sum;
      out.gradient = w.normal.transpose() * ((1.0 - w.ta) * la.J1 + w.ta * la.J2);
      return out;
    case CollisionPair::Type::Obstacle:
      w = link_polygon_distance(la.seg(),
                                terrain.obstacles[static_cast<size_t>(pair.other)]);
      out.sd = w.sd - pair.radius_sum;
      out.gradient = w.normal.transpose() * ((1.0 - w.ta) * la.J1 + w.ta * la.J2);
      return out;
    case CollisionPair::Type::SelfPair: {
      const LinkGeom& lb = fk.links[static_cast<size_t>(pair.other)];
      w = link_link_distance(la.seg(), lb.seg());
      out.sd = w.sd - pair.radius_sum;
      Mat29 Ja = (1.0 - w.ta) * la.J1 + w.ta * la.J2;
      Mat29 Jb = (1.0 - w.tb) * lb.J1 + w.tb * lb.J2;
      out.gradient = w.normal.transpose() * (Ja - Jb);
      return out;
    }
  }
  throw std::logic_error("evaluate_pair: bad pair type");
}

std::vector<SignedDistance> signed_distances(const PlanarBiped& robot,
                                             const Vector& q,
                                             const Terrain& terrain,
                                             const CollisionPairOptions& opts) {
  FkResult fk = forward_kinematics(robot, q);
  std::vector<SignedDistance> out;
  for (const auto& pair : collision_pairs(robot, terrain, opts))
    out.push_back(evaluate_pair(robot, terrain, pair, fk));
  return out;
}

double trunk_clearance(const PlanarBiped& robot, const Vector& q,
                       const Terrain& terrain) {
  FkResult fk = forward_kinematics(robot, q);
  const LinkGeom& torso = fk.links[static_cast<size_t>(LinkId::Torso)];
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < terrain.segment_count(); ++s) {
    DistWitness w = link_ground_distance(torso.seg(), terrain.segment(s));
    best = std::min(best, w.sd - robot.torso_radius);
  }
  for (const auto& poly : terrain.obstacles) {
    DistWitness w = link_polygon_distance(torso.seg(), poly);
    best = std::min(best, w.sd - robot.torso_radius);
  }
  return best;
}

// ---------------------------------------------------------------------
// Program builders
// ---------------------------------------------------------------------

namespace {

// Shared immutable context captured by trajectory/posture term closures.
struct BuildContext {
  PlanarBiped robot;
  std::shared_ptr<const Terrain> terrain;
  int dim = 0;
};

Vector scatter9(const Eigen::Matrix<double, 1, 9>& g, int offset, int dim) {
  Vector out = Vector::Zero(dim);
  out.segment<9>(offset) = g.transpose();
  return out;
}

void add_waypoint_terms(SumStructuredProgram& prog,
                        const std::shared_ptr<const BuildContext>& ctx,
                        const Stance& stance, int offset,
                        const std::string& suffix) {
  // foot pose equalities, 3 per contact foot
  for (Side side : {Side::Left, Side::Right}) {
    const auto& fp = stance.foot(side);
    if (!fp) continue;
    FootPose target = *fp;
    for (int comp = 0; comp < 3; ++comp) {
      ScalarTerm t;
      t.kind = TermKind::Equality;
      const char* names[3] = {"x", "y", "th"};
      t.label = std::string("foot_") + to_string(side) + "_" + names[comp] + suffix;
      t.evaluator = [ctx, side, target, comp, offset](const Vector& x) {
        FootResidual r = foot_pose_residual(ctx->robot, x.segment<9>(offset),
                                            side, target);
        return TermEval{r.value[comp],
                        scatter9(r.jacobian.row(comp), offset, ctx->dim)};
      };
      prog.eqs.push_back(std::move(t));
    }
  }
  // COM inside the support interval
  auto [lo, hi] = support_interval(stance, ctx->robot);
  {
    ScalarTerm t;
    t.kind = TermKind::Inequality;
    t.label = "com_lo" + suffix;
    t.evaluator = [ctx, lo = lo, offset](const Vector& x) {
      ComResult c = center_of_mass(ctx->robot, x.segment<9>(offset));
      return TermEval{lo - c.com.x(),
                      scatter9(-c.jacobian.row(0), offset, ctx->dim)};
    };
    prog.ineqs.push_back(std::move(t));
  }
  {
    ScalarTerm t;
    t.kind = TermKind::Inequality;
    t.label = "com_hi" + suffix;
    t.evaluator = [ctx, hi = hi, offset](const Vector& x) {
      ComResult c = center_of_mass(ctx->robot, x.segment<9>(offset));
      return TermEval{c.com.x() - hi,
                      scatter9(c.jacobian.row(0), offset, ctx->dim)};
    };
    prog.ineqs.push_back(std::move(t));
  }
}

// Exemption span: sole half-length plus a clearance margin wider than
// the capsule radius, so segments at the span edge stay satisfiable.
constexpr double kFootprintMargin = 0.18;

CollisionPairOptions stance_pair_options(const Stance& stance,
                                         const PlanarBiped& robot) {
  CollisionPairOptions opts;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Side s : {Side::Left, Side::Right}) {
    const auto& fp = stance.foot(s);
    if (!fp) continue;
    FootGroundExemption ex;
    ex.active = true;
    ex.x_lo = fp->position.x() - kFootprintMargin;
    ex.x_hi = fp->position.x() + kFootprintMargin;
    (s == Side::Left ? opts.left : opts.right) = ex;
    lo = std::min(lo, fp->position.x());
    hi = std::max(hi, fp->position.x());
  }
  const double reach =
      robot.thigh_length + robot.shank_length + robot.torso_length + 0.3;
  opts.x_min = lo - reach;
  opts.x_max = hi + reach;
  return opts;
}

FootGroundExemption merge_exemptions(const FootGroundExemption& a,
                                     const FootGroundExemption& b) {
  if (!a.active) return b;
  if (!b.active) return a;
  FootGroundExemption out;
  out.active = true;
  out.x_lo = std::min(a.x_lo, b.x_lo);
  out.x_hi = std::max(a.x_hi, b.x_hi);
  return out;
}

void add_collision_terms(SumStructuredProgram& prog,
                         const std::shared_ptr<const BuildContext>& ctx,
                         const CollisionPairOptions& opts, int offset,
                         const std::string& suffix) {
  for (const auto& pair : collision_pairs(ctx->robot, *ctx->terrain, opts)) {
    ScalarTerm t;
    t.kind = TermKind::Inequality;
    t.label = pair.label + suffix;
    t.evaluator = [ctx, pair, offset](const Vector& x) {
      FkResult fk = forward_kinematics(ctx->robot, x.segment<9>(offset));
      SignedDistance sd = evaluate_pair(ctx->robot, *ctx->terrain, pair, fk);
      // constraint is sd >= 0, i.e. -sd <= 0
      return TermEval{-sd.sd, scatter9(-sd.gradient, offset, ctx->dim)};
    };
    prog.ineqs.push_back(std::move(t));
  }
}

void add_midpoint_collision_terms(SumStructuredProgram& prog,
                                  const std::shared_ptr<const BuildContext>& ctx,
                                  const Stance& sa, const Stance& sb,
                                  int offset_a, int offset_b,
                                  const std::string& suffix) {
  CollisionPairOptions oa = stance_pair_options(sa, ctx->robot);
  CollisionPairOptions ob = stance_pair_options(sb, ctx->robot);
  CollisionPairOptions opts;
  // A foot in contact in either adjacent stance is exempt over the span
  // of both footholds: a planted foot touches the ground, a switching
  // foot transits at ground level between its old and new footholds.
  // Midpoints check the environment only; the swing foot passes the
  // stance foot between waypoints.
  opts.left = merge_exemptions(oa.left, ob.left);
  opts.right = merge_exemptions(oa.right, ob.right);
  opts.include_self_pairs = false;
  opts.x_min = std::min(oa.x_min, ob.x_min);
  opts.x_max = std::max(oa.x_max, ob.x_max);
  for (const auto& pair : collision_pairs(ctx->robot, *ctx->terrain, opts)) {
    ScalarTerm t;
    t.kind = TermKind::Inequality;
    t.label = pair.label + suffix;
    t.evaluator = [ctx, pair, offset_a, offset_b](const Vector& x) {
      Vector qm = 0.5 * (x.segment<9>(offset_a) + x.segment<9>(offset_b));
      FkResult fk = forward_kinematics(ctx->robot, qm);
      SignedDistance sd = evaluate_pair(ctx->robot, *ctx->terrain, pair, fk);
      Vector grad = Vector::Zero(ctx->dim);
      grad.segment<9>(offset_a) = -0.5 * sd.gradient.transpose();
      grad.segment<9>(offset_b) = -0.5 * sd.gradient.transpose();
      return TermEval{-sd.sd, grad};
    };
    prog.ineqs.push_back(std::move(t));
  }
}

void set_joint_limit_box(LinearFeasibleSet& set, const PlanarBiped& robot,
                         int offset) {
  set.lower[offset + PlanarBiped::kLHip] = robot.hip_min;
  set.upper[offset + PlanarBiped::kLHip] = robot.hip_max;
  set.lower[offset + PlanarBiped::kLKnee] = robot.knee_min;
  set.upper[offset + PlanarBiped::kLKnee] = robot.knee_max;
  set.lower[offset + PlanarBiped::kLAnkle] = robot.ankle_min;
  set.upper[offset + PlanarBiped::kLAnkle] = robot.ankle_max;
  set.lower[offset + PlanarBiped::kRHip] = robot.hip_min;
  set.upper[offset + PlanarBiped::kRHip] = robot.hip_max;
  set.lower[offset + PlanarBiped::kRKnee] = robot.knee_min;
  set.upper[offset + PlanarBiped::kRKnee] = robot.knee_max;
  set.lower[offset + PlanarBiped::kRAnkle] = robot.ankle_min;
  set.upper[offset + PlanarBiped::kRAnkle] = robot.ankle_max;
}

}  // namespace

SumStructuredProgram build_posture_program(const PlanarBiped& robot,
                                           const Terrain& terrain,
                                           const Stance& stance) {
  terrain.validate();
  if (stance.contact_count() == 0)
    throw std::invalid_argument("build_posture_program: empty stance");
  auto ctx = std::make_shared<BuildContext>();
  ctx->robot = robot;
  ctx->terrain = std::make_shared<const Terrain>(terrain);
  ctx->dim = PlanarBiped::kDof;

  SumStructuredProgram prog;
  prog.d = PlanarBiped::kDof;

  ScalarTerm torque;
  torque.kind = TermKind::Cost;
  torque.label = "torque";
  torque.evaluator = [ctx](const Vector& x) {
    TorqueResult tr = static_torques(ctx->robot, x);
    Vector grad = 2.0 * tr.jacobian.transpose() * tr.tau;
    return TermEval{tr.tau.squaredNorm(), grad};
  };
  torque.residual = [ctx](const Vector& x) {
    TorqueResult tr = static_torques(ctx->robot, x);
    ResidualEval r;
    r.residual = tr.tau;
    r.jacobian = tr.jacobian;
    return r;
  };
  prog.costs.push_back(std::move(torque));

  add_waypoint_terms(prog, ctx, stance, 0, "");
  add_collision_terms(prog, ctx, stance_pair_options(stance, robot), 0, "");

  prog.feasible_set = LinearFeasibleSet::unbounded(prog.d);
  set_joint_limit_box(prog.feasible_set, robot, 0);
  return prog;
}

SumStructuredProgram build_trajectory_program(
    const PlanarBiped& robot, const Terrain& terrain,
    const std::vector<Stance>& stances, const std::optional<Vector>& q_fixed) {
  terrain.validate();
  if (stances.empty())
    throw std::invalid_argument("build_trajectory_program: no stances");
  const int T = 2 * static_cast<int>(stances.size());
  const int d = PlanarBiped::kDof * T;

  auto ctx = std::make_shared<BuildContext>();
  ctx->robot = robot;
  ctx->terrain = std::make_shared<const Terrain>(terrain);
  ctx->dim = d;

  SumStructuredProgram prog;
  prog.d = d;

  for (int t = 0; t + 1 < T; ++t) {
    ScalarTerm vel;
    vel.kind = TermKind::Cost;
    vel.label = "vel[" + std::to_string(t) + "]";
    const int oa = 9 * t, ob = 9 * (t + 1);
    vel.evaluator = [oa, ob, d](const Vector& x) {
      Vector dq = x.segment<9>(ob) - x.segment<9>(oa);
      Vector grad = Vector::Zero(d);
      grad.segment<9>(oa) = -2.0 * dq;
      grad.segment<9>(ob) = 2.0 * dq;
      return TermEval{dq.squaredNorm(), grad};
    };
    vel.residual = [oa, ob, d](const Vector& x) {
      ResidualEval r;
      r.residual = x.segment<9>(ob) - x.segment<9>(oa);
      r.jacobian = Matrix::Zero(9, d);
      r.jacobian.block<9, 9>(0, oa) = -Matrix::Identity(9, 9);
      r.jacobian.block<9, 9>(0, ob) = Matrix::Identity(9, 9);
      return r;
    };
    prog.costs.push_back(std::move(vel));
  }

  for (int t = 0; t < T; ++t) {
    const Stance& st = stances[static_cast<size_t>(t / 2)];
    std::string suffix = "[" + std::to_string(t) + "]";
    add_waypoint_terms(prog, ctx, st, 9 * t, suffix);
    add_collision_terms(prog, ctx, stance_pair_options(st, robot), 9 * t, suffix);
  }
  for (int t = 0; t + 1 < T; ++t) {
    const Stance& sa = stances[static_cast<size_t>(t / 2)];
    const Stance& sb = stances[static_cast<size_t>((t + 1) / 2)];
    std::string suffix = ":mid[" + std::to_string(t) + "]";
    add_midpoint_collision_terms(prog, ctx, sa, sb, 9 * t, 9 * (t + 1), suffix);
  }

  prog.feasible_set = LinearFeasibleSet::unbounded(d);
  for (int t = 0; t < T; ++t) set_joint_limit_box(prog.feasible_set, robot, 9 * t);
  if (q_fixed) {
    if (q_fixed->size() != PlanarBiped::kDof)
      throw std::invalid_argument("build_trajectory_program: q_fixed must have 9 entries");
    prog.feasible_set.lower.head<9>() = *q_fixed;
    prog.feasible_set.upper.head<9>() = *q_fixed;
  }
  return prog;
}

}  // namespace gaitopt
