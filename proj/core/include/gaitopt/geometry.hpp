#pragma once

#include <vector>

#include "gaitopt/types.hpp"

namespace gaitopt {

struct Seg {
  Vec2 a, b;
};

/// Convex polygon, counterclockwise vertex order.
struct ConvexPolygon {
  std::vector<Vec2> v;
};

/// Closest point on segment to p; t in [0,1] is the segment parameter.
Vec2 closest_point_on_segment(const Vec2& p, const Seg& s, double* t);

struct SegSegClosest {
  Vec2 pa, pb;
  double ta = 0.0, tb = 0.0;
  double dist = 0.0;
};
SegSegClosest seg_seg_closest(const Seg& A, const Seg& B);

bool segs_intersect(const Seg& A, const Seg& B);

/// Inside margin of p w.r.t. the polygon: min over edges of the inward
/// distance (positive inside, negative outside). edge_index selects the
/// achieving edge (lowest index on ties).
double poly_margin(const ConvexPolygon& poly, const Vec2& p, int* edge_index);

/// Witness of a signed skeleton distance query. normal is d(sd)/d(pa);
/// for moving-vs-moving pairs d(sd)/d(pb) = -normal.
struct DistWitness {
  double sd = 0.0;   // signed distance between skeletons (radii excluded)
  double ta = 0.0;   // witness parameter on the link segment
  double tb = 0.0;   // witness parameter on the other segment (when used)
  Vec2 normal = Vec2::Zero();
};

/// Link skeleton vs one-sided ground segment (solid below). Above is
/// positive; below the segment's span is negative. Beyond the segment's
/// ends the plain Euclidean distance is used (the neighbouring chain
/// segment owns that region).
DistWitness link_ground_distance(const Seg& link, const Seg& ground);

/// Link skeleton vs solid convex polygon: positive separation outside,
/// negative max point-penetration when overlapping.
DistWitness link_polygon_distance(const Seg& link, const ConvexPolygon& poly);

/// Link skeleton vs link skeleton (both moving). Crossing skeletons
/// report sd = 0 with a fixed vertical subgradient.
DistWitness link_link_distance(const Seg& A, const Seg& B);

}  // namespace gaitopt
