#include "gaitopt/qp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace gaitopt {
namespace {

constexpr double kFeasTol = 1e-8;    // row activity / feasibility slack
constexpr double kDepTol = 1e-10;    // working-set dependence threshold
constexpr double kMultTol = 1e-9;    // multiplier sign tolerance

// In-place Givens helpers. G rotates the (i,j) coordinate plane:
// u_i' = c u_i + s u_j, u_j' = -s u_i + c u_j.

void rotate_vec(Vector& u, int i, int j, double c, double s) {
  double ui = u[i], uj = u[j];
  u[i] = c * ui + s * uj;
  u[j] = -s * ui + c * uj;
}

void rotate_cols(Eigen::Ref<Matrix> A, int i, int j, double c, double s) {
  Vector ci = A.col(i), cj = A.col(j);
  A.col(i) = c * ci + s * cj;
  A.col(j) = -s * ci + c * cj;
}

void rotate_rows(Eigen::Ref<Matrix> A, int i, int j, double c, double s) {
  Vector ri = A.row(i), rj = A.row(j);
  A.row(i) = c * ri + s * rj;
  A.row(j) = -s * ri + c * rj;
}

// Factorization state of the active-set iteration. For working-set rows
// W (unit-norm, independent), B = G_W' = Y R with Y orthonormal, Z an
// orthonormal basis of null(G_W), and M = Z' Q Z. All updates are
// O(m * k) Givens passes; nothing is refactorized from scratch.
class Factors {
 public:
  Factors(const Matrix& Q, int m)
      : Q_(Q), m_(m), w_(0), k_(m),
        Y_(Matrix::Zero(m, m)), R_(Matrix::Zero(m, m)),
        Z_(Matrix::Identity(m, m)), M_(Q) {}

  int w() const { return w_; }
  int k() const { return k_; }
  auto Z() const { return Z_.leftCols(k_); }
  auto M() const { return M_.topLeftCorner(k_, k_); }

  // Append a unit-norm row direction. False if dependent on W.
  bool add(const Vector& a) {
    if (k_ == 0) return false;
    Vector za = Z().transpose() * a;
    if (za.norm() < kDepTol) return false;
    // Rotate za onto the last coordinate so the freed column is Z's last.
    for (int j = 0; j + 1 < k_; ++j) {
      double x = za[j], y = za[j + 1];
      double r = std::hypot(x, y);
      if (r == 0.0) continue;
      double c = y / r, s = -x / r;  // sends (x,y) -> (0,r)
      rotate_vec(za, j, j + 1, c, s);
      rotate_cols(Z_.leftCols(k_), j, j + 1, c, s);
      rotate_rows(M_.topLeftCorner(k_, k_), j, j + 1, c, s);
      rotate_cols(M_.topLeftCorner(k_, k_), j, j + 1, c, s);
    }
    double nz = za[k_ - 1];
    Y_.col(w_) = Z_.col(k_ - 1);
    R_.col(w_).head(w_) = Y_.leftCols(w_).transpose() * a;
    R_(w_, w_) = nz;
    ++w_;
    --k_;  // Z and M simply shrink by their last column/row
    return true;
  }

  // Remove the working-set row at position pos (order of addition).
  void remove(int pos) {
    // Delete column pos of R; restore upper-triangularity with left
    // Givens rotations mirrored into Y's columns.
    for (int c = pos; c + 1 < w_; ++c) R_.col(c).head(w_) = R_.col(c + 1).head(w_);
    for (int i = pos; i + 1 < w_; ++i) {
      double x = R_(i, i), y = R_(i + 1, i);
      double r = std::hypot(x, y);
      if (r != 0.0) {
        double c = x / r, s = y / r;  // sends (x,y) -> (r,0)
        rotate_rows(R_.topLeftCorner(w_, w_ - 1), i, i + 1, c, s);
        rotate_cols(Y_.leftCols(w_), i, i + 1, c, s);
      }
    }
    // Freed direction joins the null-space basis.
    Vector q = Y_.col(w_ - 1);
    Z_.col(k_) = q;
    Vector v = Q_ * q;
    M_.col(k_).head(k_) = Z_.leftCols(k_).transpose() * v;
    M_.row(k_).head(k_) = M_.col(k_).head(k_).transpose();
    M_(k_, k_) = q.dot(v);
    --w_;
    ++k_;
  }

  // Multipliers of the working-set rows given a gradient with (near)
  // zero reduced component: solve R lambda = -Y' grad.
  Vector multipliers(const Vector& grad) const {
    Vector rhs = -(Y_.leftCols(w_).transpose() * grad);
    return R_.topLeftCorner(w_, w_).template triangularView<Eigen::Upper>().solve(rhs);
  }

  // Expensive consistency check used by tests (paranoid mode).
  void verify(const std::vector<Vector>& wrows) const {
    auto checked = [](double v, const char* what) {
      if (!(v < 1e-6)) {
        std::ostringstream os;
        os << "qp factor drift: " << what << " = " << v;
        throw std::logic_error(os.str());
      }
    };
    Matrix Yw = Y_.leftCols(w_);
    Matrix Zk = Z_.leftCols(k_);
    if (w_ > 0)
      checked((Yw.transpose() * Yw - Matrix::Identity(w_, w_)).cwiseAbs().maxCoeff(), "Y'Y");
    if (k_ > 0)
      checked((Zk.transpose() * Zk - Matrix::Identity(k_, k_)).cwiseAbs().maxCoeff(), "Z'Z");
    if (w_ > 0 && k_ > 0) checked((Yw.transpose() * Zk).cwiseAbs().maxCoeff(), "Y'Z");
    if (w_ > 0) {
      Matrix B(m_, w_);
      for (int i = 0; i < w_; ++i) B.col(i) = wrows[static_cast<size_t>(i)];
      checked((B - Yw * R_.topLeftCorner(w_, w_)).cwiseAbs().maxCoeff(), "B-YR");
    }
    if (k_ > 0)
      checked((Zk.transpose() * Q_ * Zk - M()).cwiseAbs().maxCoeff(), "M");
  }

 private:
  const Matrix& Q_;
  int m_, w_, k_;
  Matrix Y_, R_, Z_, M_;
};

enum class AsStatus { Optimal, MaxIter, Unbounded };

struct AsResult {
  AsStatus status = AsStatus::MaxIter;
  int iterations = 0;
  std::vector<int> active;   // row indices in working set
  Vector multipliers;        // aligned with `active`
};

// Primal active-set iteration over  min 0.5 y'Qy + c'y  s.t.  G y <= b.
// Rows of G must have unit norm. y must be feasible within kFeasTol.
AsResult active_set_solve(const Matrix& Q, const Vector& c, const Matrix& G,
                          const Vector& b, Vector& y, int max_iter,
                          bool paranoid) {
  const int m = static_cast<int>(y.size());
  const int nrows = static_cast<int>(G.rows());
  Factors F(Q, m);
  std::vector<int> W;
  std::vector<Vector> wrows;  // kept for paranoid verification
  std::vector<char> in_W(static_cast<size_t>(nrows), 0);
  // Rows linearly implied by the working set (add() refused them while
  // tight). They stay out of the ratio test until W shrinks.
  std::vector<char> implied(static_cast<size_t>(nrows), 0);

  Vector gap = G * y - b;  // <= 0 when feasible

  // Start from the rows already active at y (deterministic order).
  for (int i = 0; i < nrows; ++i) {
    if (gap[i] >= -kFeasTol) {
      Vector a = G.row(i);
      if (F.add(a)) {
        W.push_back(i);
        in_W[static_cast<size_t>(i)] = 1;
        if (paranoid) wrows.push_back(a);
      } else {
        implied[static_cast<size_t>(i)] = 1;
      }
    }
  }
  if (paranoid) F.verify(wrows);

  AsResult res;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    Vector grad = Q * y + c;
    Vector rg = F.Z().transpose() * grad;
    double rgn = (F.k() > 0) ? rg.cwiseAbs().maxCoeff() : 0.0;

    if (rgn <= 1e-11 * std::max(1.0, grad.cwiseAbs().maxCoeff())) {
      // Stationary on the working-set manifold: examine multipliers.
      if (W.empty()) {
        res.status = AsStatus::Optimal;
        res.active = W;
        res.multipliers = Vector();
        return res;
      }
      Vector lam = F.multipliers(grad);
      int drop = -1;
      double worst = -kMultTol;
      for (int j = 0; j < static_cast<int>(W.size()); ++j) {
        if (lam[j] < worst) {
          worst = lam[j];
          drop = j;
        }
      }
      if (drop < 0) {
        res.status = AsStatus::Optimal;
        res.active = W;
        res.multipliers = lam;
        return res;
      }
      in_W[static_cast<size_t>(W[static_cast<size_t>(drop)])] = 0;
      F.remove(drop);
      W.erase(W.begin() + drop);
      std::fill(implied.begin(), implied.end(), 0);  // implications may break
      if (paranoid) {
        wrows.erase(wrows.begin() + drop);
        F.verify(wrows);
      }
      continue;
    }

    // Newton step within the manifold; regularize if the reduced
    // Hessian is singular (descent direction still guaranteed).
    Vector pz;
    {
      Matrix M = F.M();
      double reg = 0.0;
      double mscale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
      for (;;) {
        Eigen::LDLT<Matrix> ldlt(M + reg * Matrix::Identity(F.k(), F.k()));
        pz = ldlt.solve(-rg);
        bool ok = ldlt.info() == Eigen::Success && pz.allFinite() &&
                  pz.dot(rg) < 0.0;
        if (ok) break;
        reg = (reg == 0.0) ? 1e-12 * mscale : reg * 1e3;
        if (reg > 1e3 * mscale) {
          pz = -rg;  // steepest descent fallback
          break;
        }
      }
    }
    Vector p = F.Z() * pz;
    double pn = p.cwiseAbs().maxCoeff();
    if (!(pn > 0.0)) continue;

    // Ratio test against rows outside the working set.
    Vector sp = G * p;
    double alpha_max = std::numeric_limits<double>::infinity();
    int blocker = -1;
    for (int i = 0; i < nrows; ++i) {
      if (in_W[static_cast<size_t>(i)] || implied[static_cast<size_t>(i)]) continue;
      if (sp[i] > 1e-14 * std::max(1.0, pn)) {
        double ratio = std::max(0.0, -gap[i]) / sp[i];
        if (ratio < alpha_max) {
          alpha_max = ratio;
          blocker = i;
        }
      }
    }

    if (!std::isfinite(alpha_max)) {
      double curv = p.dot(Q * p);
      if (curv <= 1e-14 * p.squaredNorm() || pn > 1e13) {
        res.status = AsStatus::Unbounded;
        res.active = W;
        return res;
      }
    }
    double alpha = std::min(1.0, alpha_max);
    if (pn * alpha > 1e13) {  // runaway regularized step
      res.status = AsStatus::Unbounded;
      res.active = W;
      return res;
    }

    y += alpha * p;
    gap += alpha * sp;
    if ((iter & 127) == 127) gap = G * y - b;  // periodic drift refresh
    if (alpha_max <= 1.0 && blocker >= 0 && alpha == alpha_max) {
      Vector a = G.row(blocker);
      if (F.add(a)) {
        W.push_back(blocker);
        in_W[static_cast<size_t>(blocker)] = 1;
        if (paranoid) {
          wrows.push_back(a);
          F.verify(wrows);
        }
      } else {
        implied[static_cast<size_t>(blocker)] = 1;
      }
      gap[blocker] = 0.0;  // tight by construction
    }
  }
  res.active = W;
  return res;
}

struct YRow {
  Vector a;      // unit norm in reduced space
  double b;
  double norm;   // original row norm before normalization
  int x_index;   // index into the x-space row table
};

// x-space inequality rows in canonical order (the tie-break order):
// box lower bounds, box upper bounds, then affine inequality rows.
struct XRowTable {
  std::vector<Vector> a;
  std::vector<double> b;
  std::vector<std::string> labels;
};

}  // namespace

QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& opts) {
  return solve_qp(qp, Vector::Zero(qp.c.size()), opts);
}

QpSolution solve_qp(const QuadraticProgram& qp, const Vector& x_hint,
                    const QpOptions& opts) {
  const int d = static_cast<int>(qp.c.size());
  const auto& set = qp.feasible_set;
  QpSolution sol;

  if (qp.Q.rows() != d || qp.Q.cols() != d)
    throw std::invalid_argument("solve_qp: Q dimension mismatch");
  if ((qp.Q - qp.Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, qp.Q.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("solve_qp: Q must be symmetric");
  for (int i = 0; i < d; ++i)
    if (set.lower[i] > set.upper[i])
      throw std::invalid_argument("solve_qp: box lower > upper");

  // --- Gather equality rows: affine equalities plus pinned coordinates.
  std::vector<int> pinned;
  for (int i = 0; i < d; ++i)
    if (set.upper[i] - set.lower[i] <= 1e-12 && std::isfinite(set.lower[i]))
      pinned.push_back(i);
  const int re = static_cast<int>(set.eq_A.rows()) + static_cast<int>(pinned.size());
  Matrix E(re, d);
  Vector eb(re);
  if (set.eq_A.rows() > 0) {
    E.topRows(set.eq_A.rows()) = set.eq_A;
    eb.head(set.eq_A.rows()) = set.eq_b;
  }
  for (size_t j = 0; j < pinned.size(); ++j) {
    int r = static_cast<int>(set.eq_A.rows()) + static_cast<int>(j);
    E.row(r).setZero();
    E(r, pinned[j]) = 1.0;
    eb[r] = set.lower[pinned[j]];
  }

  // --- Null-space elimination of the equalities.
  Vector x_p = Vector::Zero(d);
  Matrix N = Matrix::Identity(d, d);
  int m = d;
  if (re > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(E);
    x_p = cod.solve(eb);
    Vector resid = E * x_p - eb;
    double rmax = resid.cwiseAbs().maxCoeff();
    if (rmax > 1e-8 * (1.0 + eb.cwiseAbs().maxCoeff())) {
      int worst = 0;
      resid.cwiseAbs().maxCoeff(&worst);
      sol.status = QpStatus::Infeasible;
      sol.certificate = (worst < set.eq_A.rows())
                            ? "eq[" + std::to_string(worst) + "]"
                            : "pin[" + std::to_string(pinned[static_cast<size_t>(worst - set.eq_A.rows())]) + "]";
      sol.x_star = x_p;
      return sol;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(E.transpose());
    const int rank = static_cast<int>(qr.rank());
    Matrix Qfull = qr.householderQ() * Matrix::Identity(d, d);
    m = d - rank;
    N = Qfull.rightCols(m);
  }

  // --- x-space inequality row table (canonical order).
  XRowTable xr;
  for (int i = 0; i < d; ++i) {
    if (std::isfinite(set.lower[i]) && set.upper[i] - set.lower[i] > 1e-12) {
      Vector a = Vector::Zero(d);
      a[i] = -1.0;
      xr.a.push_back(a);
      xr.b.push_back(-set.lower[i]);
      xr.labels.push_back("lb[" + std::to_string(i) + "]");
    }
  }
  for (int i = 0; i < d; ++i) {
    if (std::isfinite(set.upper[i]) && set.upper[i] - set.lower[i] > 1e-12) {
      Vector a = Vector::Zero(d);
      a[i] = 1.0;
      xr.a.push_back(a);
      xr.b.push_back(set.upper[i]);
      xr.labels.push_back("ub[" + std::to_string(i) + "]");
    }
  }
  for (int r = 0; r < set.ineq_A.rows(); ++r) {
    xr.a.push_back(set.ineq_A.row(r));
    xr.b.push_back(set.ineq_b[r]);
    xr.labels.push_back("ineq[" + std::to_string(r) + "]");
  }

  // --- Objective scaling (solution-invariant).
  double s_obj = std::max({1.0, qp.Q.cwiseAbs().maxCoeff(), qp.c.cwiseAbs().maxCoeff()});
  Matrix Qy = N.transpose() * (qp.Q / s_obj) * N;
  Qy = 0.5 * (Qy + Qy.transpose());
  Vector cy = N.transpose() * (qp.Q * x_p + qp.c) / s_obj;

  // --- Map rows into the reduced space.
  std::vector<YRow> rows;
  rows.reserve(xr.a.size());
  for (size_t i = 0; i < xr.a.size(); ++i) {
    Vector ay = N.transpose() * xr.a[i];
    double by = xr.b[i] - xr.a[i].dot(x_p);
    double nrm = ay.norm();
    if (nrm < 1e-12) {
      if (by < -1e-9 * (1.0 + std::abs(xr.b[i]))) {
        sol.status = QpStatus::Infeasible;
        sol.certificate = xr.labels[i];
        sol.x_star = x_p;
        return sol;
      }
      continue;  // row trivially satisfied on the equality manifold
    }
    rows.push_back({ay / nrm, by / nrm, nrm, static_cast<int>(i)});
  }
  const int nrows = static_cast<int>(rows.size());
  Matrix G(nrows, std::max(m, 1));
  Vector gb(nrows);
  for (int i = 0; i < nrows; ++i) {
    G.row(i) = rows[static_cast<size_t>(i)].a;
    gb[i] = rows[static_cast<size_t>(i)].b;
  }

  if (m == 0) {
    // x fully determined by the equalities.
    sol.x_star = x_p;
    sol.objective = 0.5 * x_p.dot(qp.Q * x_p) + qp.c.dot(x_p);
    sol.iterations = 0;
    double feas = set.violation(x_p);
    if (feas > 1e-8) {
      sol.status = QpStatus::Infeasible;
      double worst = -1.0;
      for (size_t i = 0; i < xr.a.size(); ++i) {
        double v = xr.a[i].dot(x_p) - xr.b[i];
        if (v > worst) {
          worst = v;
          sol.certificate = xr.labels[i];
        }
      }
      sol.kkt_residual = feas;
      return sol;
    }
    // Stationarity is absorbed by the equality multipliers.
    Vector r0 = qp.Q * x_p + qp.c;
    Eigen::CompleteOrthogonalDecomposition<Matrix> codt(Matrix(E.transpose()));
    Vector nu = codt.solve(-r0);
    sol.kkt_residual =
        std::max(feas, (r0 + E.transpose() * nu).cwiseAbs().maxCoeff());
    sol.status = sol.kkt_residual <= 1e-8 ? QpStatus::Optimal : QpStatus::MaxIter;
    return sol;
  }

  Vector y = N.transpose() * (x_hint - x_p);
  int max_iter = opts.max_iterations > 0 ? opts.max_iterations
                                         : 200 + 30 * (m + nrows);

  // --- Phase 1 when the start violates rows.
  {
    Vector gap = G * y - gb;
    std::vector<int> viol;
    for (int i = 0; i < nrows; ++i)
      if (gap[i] > kFeasTol) viol.push_back(i);
    if (!viol.empty()) {
      const int nv = static_cast<int>(viol.size());
      const int ma = m + nv;
      Matrix Qa = Matrix::Zero(ma, ma);
      Qa.bottomRightCorner(nv, nv).setIdentity();
      Vector ca = Vector::Zero(ma);
      Matrix Ga(nrows + nv, ma);
      Vector ba(nrows + nv);
      Ga.setZero();
      Ga.topLeftCorner(nrows, m) = G;
      ba.head(nrows) = gb;
      for (int j = 0; j < nv; ++j) {
        Ga(viol[static_cast<size_t>(j)], m + j) = -1.0;
        // slack nonnegativity: -s_j <= 0
        Ga(nrows + j, m + j) = -1.0;
        ba[nrows + j] = 0.0;
      }
      // renormalize relaxed rows (they gained a slack component)
      for (int j = 0; j < nv; ++j) {
        int r = viol[static_cast<size_t>(j)];
        double nrm = Ga.row(r).norm();
        Ga.row(r) /= nrm;
        ba[r] /= nrm;
      }
      Vector ya(ma);
      ya.head(m) = y;
      for (int j = 0; j < nv; ++j) {
        int r = viol[static_cast<size_t>(j)];
        // exact slack so the relaxed row starts tight
        ya[m + j] = std::max(0.0, gap[r]);
      }
      AsResult pr = active_set_solve(Qa, ca, Ga, ba, ya, max_iter + 10 * nv, opts.paranoid);
      double worst_s = 0.0;
      int worst_j = 0;
      for (int j = 0; j < nv; ++j) {
        if (ya[m + j] > worst_s) {
          worst_s = ya[m + j];
          worst_j = j;
        }
      }
      if (pr.status != AsStatus::Optimal || worst_s > 1e-9) {
        sol.status = (pr.status == AsStatus::MaxIter && worst_s <= 1e-9)
                         ? QpStatus::MaxIter
                         : QpStatus::Infeasible;
        sol.certificate = xr.labels[static_cast<size_t>(
            rows[static_cast<size_t>(viol[static_cast<size_t>(worst_j)])].x_index)];
        sol.x_star = x_p + N * ya.head(m);
        sol.iterations = pr.iterations;
        return sol;
      }
      y = ya.head(m);
    }
  }

  // --- Phase 2.
  AsResult r2 = active_set_solve(Qy, cy, G, gb, y, max_iter, opts.paranoid);
  sol.iterations = r2.iterations;
  Vector x = x_p + N * y;
  sol.x_star = x;
  sol.objective = 0.5 * x.dot(qp.Q * x) + qp.c.dot(x);

  // --- KKT residual on the original data.
  Vector r0 = qp.Q * x + qp.c;
  double compl_res = 0.0;
  if (r2.status == AsStatus::Optimal) {
    for (size_t j = 0; j < r2.active.size(); ++j) {
      const YRow& yr = rows[static_cast<size_t>(r2.active[j])];
      double lam = r2.multipliers.size() > 0 ? r2.multipliers[static_cast<Eigen::Index>(j)] : 0.0;
      double lam_x = lam * s_obj / yr.norm;
      if (lam_x < 0.0 && lam_x > -1e-9 * s_obj) lam_x = 0.0;
      const Vector& ax = xr.a[static_cast<size_t>(yr.x_index)];
      r0 += lam_x * ax;
      compl_res = std::max(compl_res,
                           std::abs(lam_x * (ax.dot(x) - xr.b[static_cast<size_t>(yr.x_index)])));
    }
  }
  double stat_res;
  if (re > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> codt(Matrix(E.transpose()));
    Vector nu = codt.solve(-r0);
    stat_res = (r0 + E.transpose() * nu).cwiseAbs().maxCoeff();
  } else {
    stat_res = r0.size() > 0 ? r0.cwiseAbs().maxCoeff() : 0.0;
  }
  double feas_res = set.violation(x);
  sol.kkt_residual = std::max({stat_res, feas_res, compl_res});

  if (r2.status == AsStatus::Optimal && sol.kkt_residual <= 1e-8) {
    sol.status = QpStatus::Optimal;
  } else if (r2.status == AsStatus::Optimal) {
    sol.status = QpStatus::MaxIter;  // honest downgrade
  } else {
    sol.status = QpStatus::MaxIter;
    if (r2.status == AsStatus::Unbounded) sol.certificate = "unbounded";
  }
  return sol;
}

Vector project(const Vector& x, const LinearFeasibleSet& set) {
  if (set.box_only()) {
    for (int i = 0; i < x.size(); ++i)
      if (set.lower[i] > set.upper[i])
        throw std::runtime_error("project: empty box");
    return set.clamp(x);
  }
  QuadraticProgram qp;
  const int d = static_cast<int>(x.size());
  qp.Q = 2.0 * Matrix::Identity(d, d);
  qp.c = -2.0 * x;
  qp.feasible_set = set;
  QpSolution s = solve_qp(qp, set.clamp(x));
  if (s.status == QpStatus::Infeasible)
    throw std::runtime_error("project: infeasible set (" + s.certificate + ")");
  return s.x_star;
}

}  // namespace gaitopt
