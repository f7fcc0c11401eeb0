#include "gaitopt/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace gaitopt {

Vec2 closest_point_on_segment(const Vec2& p, const Seg& s, double* t) {
  Vec2 d = s.b - s.a;
  double len2 = d.squaredNorm();
  double tt = (len2 > 0.0) ? std::clamp((p - s.a).dot(d) / len2, 0.0, 1.0) : 0.0;
  if (t) *t = tt;
  return s.a + tt * d;
}

SegSegClosest seg_seg_closest(const Seg& A, const Seg& B) {
  // Ericson, Real-Time Collision Detection 5.1.9.
  Vec2 d1 = A.b - A.a, d2 = B.b - B.a, r = A.a - B.a;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= 1e-18 && e <= 1e-18) {
    s = t = 0.0;
  } else if (a <= 1e-18) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = d1.dot(r);
    if (e <= 1e-18) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2);
      double denom = a * e - b * b;
      if (denom > 1e-18) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  SegSegClosest out;
  out.ta = s;
  out.tb = t;
  out.pa = A.a + s * d1;
  out.pb = B.a + t * d2;
  out.dist = (out.pa - out.pb).norm();
  return out;
}

namespace {
double cross2(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }
}  // namespace

bool segs_intersect(const Seg& A, const Seg& B) {
  Vec2 r = A.b - A.a, s = B.b - B.a;
  double rxs = cross2(r, s);
  Vec2 qp = B.a - A.a;
  if (std::abs(rxs) < 1e-15) {
    if (std::abs(cross2(qp, r)) > 1e-15) return false;  // parallel, apart
    // collinear: overlap test on the dominant axis
    double r2 = r.squaredNorm();
    if (r2 < 1e-18) return (qp.squaredNorm() < 1e-18);
    double t0 = qp.dot(r) / r2;
    double t1 = t0 + s.dot(r) / r2;
    if (t0 > t1) std::swap(t0, t1);
    return t1 >= 0.0 && t0 <= 1.0;
  }
  double t = cross2(qp, s) / rxs;
  double u = cross2(qp, r) / rxs;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

double poly_margin(const ConvexPolygon& poly, const Vec2& p, int* edge_index) {
  const int n = static_cast<int>(poly.v.size());
  double margin = std::numeric_limits<double>::infinity();
  int best = 0;
  for (int i = 0; i < n; ++i) {
    Vec2 e = poly.v[static_cast<size_t>((i + 1) % n)] - poly.v[static_cast<size_t>(i)];
    Vec2 nout(e.y(), -e.x());  // outward for CCW
    double len = nout.norm();
    if (len < 1e-15) continue;
    nout /= len;
    double m = -nout.dot(p - poly.v[static_cast<size_t>(i)]);  // >0 inside
    if (m < margin) {
      margin = m;
      best = i;
    }
  }
  if (edge_index) *edge_index = best;
  return margin;
}

DistWitness link_ground_distance(const Seg& link, const Seg& ground) {
  Vec2 gd = ground.b - ground.a;
  double glen = gd.norm();
  Vec2 n_up = (glen > 1e-15) ? Vec2(-gd.y(), gd.x()) / glen : Vec2(0.0, 1.0);
  if (n_up.y() < 0) n_up = -n_up;  // chain is monotone in x; keep up

  DistWitness w;
  if (segs_intersect(link, ground)) {
    // deepest endpoint below the ground line
    double ha = n_up.dot(link.a - ground.a);
    double hb = n_up.dot(link.b - ground.a);
    if (ha <= hb) {
      w.sd = ha;
      w.ta = 0.0;
    } else {
      w.sd = hb;
      w.ta = 1.0;
    }
    w.normal = n_up;
    return w;
  }
  SegSegClosest cc = seg_seg_closest(link, ground);
  w.ta = cc.ta;
  w.tb = cc.tb;
  if (cc.dist < 1e-12) {  // touching: subgradient along the ground normal
    w.sd = 0.0;
    w.normal = n_up;
    return w;
  }
  Vec2 u = (cc.pa - cc.pb) / cc.dist;
  const bool endpoint_regime = (cc.tb <= 1e-12 || cc.tb >= 1.0 - 1e-12);
  if (endpoint_regime) {
    w.sd = cc.dist;
    w.normal = u;
  } else {
    double side = (n_up.dot(u) >= 0.0) ? 1.0 : -1.0;
    w.sd = side * cc.dist;
    w.normal = side * u;
  }
  return w;
}

DistWitness link_polygon_distance(const Seg& link, const ConvexPolygon& poly) {
  const int n = static_cast<int>(poly.v.size());
  DistWitness w;

  // Inside margins along the chord: m_e(t) = alpha_e + beta_e * t per
  // edge; the depth profile min_e m_e is concave piecewise-linear.
  Vec2 d = link.b - link.a;
  std::vector<double> alpha(static_cast<size_t>(n)), beta(static_cast<size_t>(n));
  std::vector<Vec2> nrm(static_cast<size_t>(n));
  double t0 = 0.0, t1 = 1.0;
  bool empty = false;
  for (int i = 0; i < n; ++i) {
    Vec2 e = poly.v[static_cast<size_t>((i + 1) % n)] - poly.v[static_cast<size_t>(i)];
    Vec2 nout(e.y(), -e.x());
    double len = nout.norm();
    if (len < 1e-15) {
      alpha[static_cast<size_t>(i)] = std::numeric_limits<double>::infinity();
      beta[static_cast<size_t>(i)] = 0.0;
      continue;
    }
    nout /= len;
    nrm[static_cast<size_t>(i)] = nout;
    alpha[static_cast<size_t>(i)] = -nout.dot(link.a - poly.v[static_cast<size_t>(i)]);
    beta[static_cast<size_t>(i)] = -nout.dot(d);
    // inside means m_e(t) >= 0
    double a = alpha[static_cast<size_t>(i)], b = beta[static_cast<size_t>(i)];
    if (std::abs(b) < 1e-15) {
      if (a < 0.0) empty = true;
    } else if (b > 0.0) {
      t0 = std::max(t0, -a / b);
    } else {
      t1 = std::min(t1, -a / b);
    }
    if (t0 > t1) empty = true;
  }

  if (!empty) {
    auto profile = [&](double t) {
      double m = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i)
        m = std::min(m, alpha[static_cast<size_t>(i)] + beta[static_cast<size_t>(i)] * t);
      return m;
    };
    // Maximize over [t0, t1]: candidates are the ends and the pairwise
    // crossings of the margin lines.
    double best_t = t0, best_m = profile(t0);
    {
      double m1 = profile(t1);
      if (m1 > best_m) {
        best_m = m1;
        best_t = t1;
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double bi = beta[static_cast<size_t>(i)], bj = beta[static_cast<size_t>(j)];
        if (std::abs(bi - bj) < 1e-15) continue;
        double tc = (alpha[static_cast<size_t>(j)] - alpha[static_cast<size_t>(i)]) / (bi - bj);
        if (tc <= t0 || tc >= t1) continue;
        double m = profile(tc);
        if (m > best_m) {
          best_m = m;
          best_t = tc;
        }
      }
    }
    if (best_m > 0.0) {
      // active edges at the maximizer
      int e_plus = -1, e_minus = -1;
      for (int i = 0; i < n; ++i) {
        double m = alpha[static_cast<size_t>(i)] + beta[static_cast<size_t>(i)] * best_t;
        if (m <= best_m + 1e-12) {
          if (e_plus < 0 || beta[static_cast<size_t>(i)] > beta[static_cast<size_t>(e_plus)])
            e_plus = i;
          if (e_minus < 0 || beta[static_cast<size_t>(i)] < beta[static_cast<size_t>(e_minus)])
            e_minus = i;
        }
      }
      w.sd = -best_m;
      w.ta = best_t;
      if (e_plus == e_minus || best_t <= t0 + 1e-12 || best_t >= t1 - 1e-12) {
        // single active edge (flat piece or clip boundary)
        w.normal = nrm[static_cast<size_t>(e_plus)];
      } else {
        // interior kink maximizer: the margins of both active edges stay
        // equal as the link moves; differentiating the equality gives
        //   d depth = (b_minus * dm_plus - b_plus * dm_minus)/(b_minus - b_plus)
        // which factors into one effective outward normal.
        double bp = beta[static_cast<size_t>(e_plus)];
        double bm = beta[static_cast<size_t>(e_minus)];
        Vec2 npl = nrm[static_cast<size_t>(e_plus)];
        Vec2 nmi = nrm[static_cast<size_t>(e_minus)];
        w.normal = (bm * npl - bp * nmi) / (bm - bp);
      }
      return w;
    }
    // tangent contact falls through to the boundary branch
  }

  // Outside: nearest feature over the polygon edges.
  double best = std::numeric_limits<double>::infinity();
  SegSegClosest bestcc;
  for (int i = 0; i < n; ++i) {
    Seg edge{poly.v[static_cast<size_t>(i)], poly.v[static_cast<size_t>((i + 1) % n)]};
    SegSegClosest cc = seg_seg_closest(link, edge);
    if (cc.dist < best) {
      best = cc.dist;
      bestcc = cc;
    }
  }
  w.sd = best;
  w.ta = bestcc.ta;
  if (best > 1e-12) {
    w.normal = (bestcc.pa - bestcc.pb) / best;
  } else {
    int ei = 0;
    poly_margin(poly, bestcc.pa, &ei);
    Vec2 e = poly.v[static_cast<size_t>((ei + 1) % n)] - poly.v[static_cast<size_t>(ei)];
    Vec2 nout(e.y(), -e.x());
    w.normal = nout.normalized();
  }
  return w;
}

DistWitness link_link_distance(const Seg& A, const Seg& B) {
  SegSegClosest cc = seg_seg_closest(A, B);
  DistWitness w;
  w.ta = cc.ta;
  w.tb = cc.tb;
  w.sd = cc.dist;
  if (cc.dist > 1e-12) {
    w.normal = (cc.pa - cc.pb) / cc.dist;
  } else {
    w.normal = Vec2(0.0, 1.0);  // crossing skeletons: fixed subgradient
  }
  return w;
}

}  // namespace gaitopt
