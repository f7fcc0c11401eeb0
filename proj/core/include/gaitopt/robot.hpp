#pragma once

#include <array>
#include <memory>
#include <optional>

#include "gaitopt/geometry.hpp"
#include "gaitopt/program.hpp"
#include "gaitopt/types.hpp"

namespace gaitopt {

/// 9-DOF planar biped: base x/y (m), torso pitch (rad), then per leg
/// {hip, knee, ankle} (rad), left leg before right. Leg angles are
/// absolute (measured from straight down), so torso pitch does not move
/// the legs. Sole midpoints coincide with the ankle.
struct PlanarBiped {
  double torso_length = 0.60;
  double thigh_length = 0.40;
  double shank_length = 0.40;
  double sole_length = 0.20;
  double torso_mass = 30.0;
  double thigh_mass = 5.0;
  double shank_mass = 4.0;
  double foot_mass = 1.0;
  double leg_radius = 0.06;
  double torso_radius = 0.12;
  double hip_min = -2.0, hip_max = 2.0;
  double knee_min = 0.0, knee_max = 2.5;
  double ankle_min = -1.0, ankle_max = 1.0;
  double gravity = 9.81;

  static constexpr int kDof = 9;
  enum Coord : int {
    kBaseX = 0,
    kBaseY = 1,
    kPitch = 2,
    kLHip = 3,
    kLKnee = 4,
    kLAnkle = 5,
    kRHip = 6,
    kRKnee = 7,
    kRAnkle = 8,
  };
  double total_mass() const {
    return torso_mass + 2.0 * (thigh_mass + shank_mass + foot_mass);
  }
};

enum class Side { Left, Right };
inline const char* to_string(Side s) { return s == Side::Left ? "L" : "R"; }

/// Links carrying mass and collision capsules.
enum class LinkId : int {
  Torso = 0,
  LeftThigh,
  LeftShank,
  LeftFoot,
  RightThigh,
  RightShank,
  RightFoot,
};
constexpr int kNumLinks = 7;
const char* to_string(LinkId id);

struct FootPose {
  Vec2 position = Vec2::Zero();  // sole midpoint
  double angle = 0.0;            // sole orientation, wrapped to (-pi, pi]
};

struct Stance {
  std::optional<FootPose> left, right;
  const std::optional<FootPose>& foot(Side s) const {
    return s == Side::Left ? left : right;
  }
  int contact_count() const {
    return (left ? 1 : 0) + (right ? 1 : 0);
  }
};

/// Piecewise-linear ground (x strictly increasing) plus convex obstacles.
struct Terrain {
  std::vector<Vec2> ground;
  std::vector<ConvexPolygon> obstacles;

  int segment_count() const {
    return std::max(0, static_cast<int>(ground.size()) - 1);
  }
  Seg segment(int i) const {
    return {ground[static_cast<size_t>(i)], ground[static_cast<size_t>(i) + 1]};
  }
  /// Ground height at x (clamped to the chain's extent).
  double height_at(double x) const;
  void validate() const;
};

struct LinkFrame {
  Vec2 origin = Vec2::Zero();
  double angle = 0.0;
};

/// Skeleton endpoints of one link with endpoint Jacobians w.r.t. q.
struct LinkGeom {
  Vec2 p1 = Vec2::Zero(), p2 = Vec2::Zero();
  Eigen::Matrix<double, 2, 9> J1 = Eigen::Matrix<double, 2, 9>::Zero();
  Eigen::Matrix<double, 2, 9> J2 = Eigen::Matrix<double, 2, 9>::Zero();
  double radius = 0.0;
  Seg seg() const { return {p1, p2}; }
};

struct FkResult {
  std::array<LinkFrame, kNumLinks> frames;
  std::array<LinkGeom, kNumLinks> links;
  Vec2 sole_mid(Side s) const;
  double sole_angle(Side s) const;
};

double wrap_angle(double a);  // to (-pi, pi]

FkResult forward_kinematics(const PlanarBiped& robot, const Vector& q);

/// (dx, dy, dtheta) between the sole and the target, with the 3x9
/// Jacobian. dtheta is wrapped to (-pi, pi].
struct FootResidual {
  Eigen::Vector3d value;
  Eigen::Matrix<double, 3, 9> jacobian;
};
FootResidual foot_pose_residual(const PlanarBiped& robot, const Vector& q,
                                Side side, const FootPose& target);

struct ComResult {
  Vec2 com;
  Eigen::Matrix<double, 2, 9> jacobian;
};
ComResult center_of_mass(const PlanarBiped& robot, const Vector& q);

/// Horizontal support interval spanned by the in-contact target soles.
/// Computed from the stance's target poses, not from q.
std::pair<double, double> support_interval(const Stance& stance,
                                           const PlanarBiped& robot);

/// Gravity torques at the six leg joints (L hip/knee/ankle, R ...):
/// tau_k = dU/dq_k with U the total potential energy.
struct TorqueResult {
  Eigen::Matrix<double, 6, 1> tau;
  Eigen::Matrix<double, 6, 9> jacobian;  // d tau / d q
};
TorqueResult static_torques(const PlanarBiped& robot, const Vector& q);

/// One collision constraint: a link capsule against a terrain feature or
/// another link. sd >= 0 is the constraint; negative is penetration.
struct CollisionPair {
  enum class Type { Ground, Obstacle, SelfPair };
  Type type = Type::Ground;
  LinkId link = LinkId::Torso;
  int other = 0;  // ground segment / obstacle index / other LinkId
  double radius_sum = 0.0;
  std::string label;
};

/// Footprint-local ground exemption of one foot: the sole must touch its
/// target segment, and the shank's lower end coincides with the sole
/// midpoint, so both skip ground pairs against segments overlapping
/// [x_lo, x_hi]. Segments outside the span stay active.
struct FootGroundExemption {
  bool active = false;
  double x_lo = 0.0, x_hi = 0.0;
};

struct CollisionPairOptions {
  FootGroundExemption left, right;
  /// Cull terrain features outside [x_min, x_max]; inf = keep all.
  double x_min = -std::numeric_limits<double>::infinity();
  double x_max = std::numeric_limits<double>::infinity();
  /// Midpoint configurations check the environment only (swing feet pass
  /// each other between waypoints, as in continuous collision checks).
  bool include_self_pairs = true;
};

std::vector<CollisionPair> collision_pairs(const PlanarBiped& robot,
                                           const Terrain& terrain,
                                           const CollisionPairOptions& opts);

struct SignedDistance {
  std::string label;
  double sd = 0.0;
  Eigen::Matrix<double, 1, 9> gradient;
};

/// Evaluate one pair at a configuration (9-vector q).
SignedDistance evaluate_pair(const PlanarBiped& robot, const Terrain& terrain,
                             const CollisionPair& pair, const FkResult& fk);

/// All pairs at q, for reporting and tests.
std::vector<SignedDistance> signed_distances(const PlanarBiped& robot,
                                             const Vector& q,
                                             const Terrain& terrain,
                                             const CollisionPairOptions& opts);

/// Minimum simulated torso clearance: smallest sd over torso-terrain
/// pairs at q (used as the instance difficulty feature).
double trunk_clearance(const PlanarBiped& robot, const Vector& q,
                       const Terrain& terrain);

/// Posture program: one squared-torque cost, 3 equalities per contact
/// foot, COM-interval and collision inequalities, joint-limit box.
SumStructuredProgram build_posture_program(const PlanarBiped& robot,
                                           const Terrain& terrain,
                                           const Stance& stance);

/// Trajectory program over a stance window (two waypoints per stance):
/// squared-velocity costs, per-waypoint posture constraints (minus the
/// torque cost), midpoint collision terms between consecutive waypoints,
/// optional pin of the first waypoint.
SumStructuredProgram build_trajectory_program(
    const PlanarBiped& robot, const Terrain& terrain,
    const std::vector<Stance>& stances,
    const std::optional<Vector>& q_fixed = std::nullopt);

}  // namespace gaitopt
