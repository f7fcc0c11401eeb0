#include "gaitopt/line_search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaitopt {

namespace {

// Quadratic-interpolation trial inside (lo, hi), bisection safeguarded.
double interp(double alo, double philo, double dphilo, double ahi, double phihi) {
  double delta = ahi - alo;
  double denom = 2.0 * (phihi - philo - dphilo * delta);
  double t = (denom != 0.0) ? -dphilo * delta * delta / denom : 0.0;
  double aj = alo + t;
  double lo = std::min(alo, ahi), hi = std::max(alo, ahi);
  double margin = 0.1 * (hi - lo);
  if (!(aj > lo + margin) || !(aj < hi - margin)) aj = 0.5 * (alo + ahi);
  return aj;
}

}  // namespace

LineSearchResult wolfe_line_search(const ScalarFn& phi, double alpha0,
                                   double c1, double c2, int max_zoom) {
  LineSearchResult res;
  auto [phi0, dphi0] = phi(0.0);
  ++res.evaluations;
  if (!(dphi0 < 0.0))
    throw std::invalid_argument("wolfe_line_search: non-descent direction");

  double best_alpha = 0.0, best_phi = phi0;
  auto note = [&](double a, double v) {
    if (v < best_phi) {
      best_phi = v;
      best_alpha = a;
    }
  };
  auto accept = [&](double a, double v) {
    res.alpha = a;
    res.phi = v;
    res.satisfied = true;
    return res;
  };
  auto give_up = [&]() {
    res.alpha = best_alpha;
    res.phi = best_phi;
    res.satisfied = false;
    return res;
  };

  auto zoom = [&](double alo, double philo, double dphilo, double ahi,
                  double phihi) -> LineSearchResult {
    for (int j = 0; j < max_zoom; ++j) {
      double aj = interp(alo, philo, dphilo, ahi, phihi);
      auto [phij, dphij] = phi(aj);
      ++res.evaluations;
      note(aj, phij);
      if (phij > phi0 + c1 * aj * dphi0 || phij >= philo) {
        ahi = aj;
        phihi = phij;
      } else {
        if (std::abs(dphij) <= -c2 * dphi0) return accept(aj, phij);
        if (dphij * (ahi - alo) >= 0.0) {
          ahi = alo;
          phihi = philo;
        }
        alo = aj;
        philo = phij;
        dphilo = dphij;
      }
      if (std::abs(ahi - alo) < 1e-16 * std::max(1.0, std::abs(alo))) break;
    }
    return give_up();
  };

  const double alpha_cap = 1e12;
  double aprev = 0.0, phiprev = phi0, dphiprev = dphi0;
  double a = std::max(alpha0, 1e-16);
  for (int i = 1; i <= max_zoom; ++i) {
    auto [phia, dphia] = phi(a);
    ++res.evaluations;
    note(a, phia);
    if (phia > phi0 + c1 * a * dphi0 || (i > 1 && phia >= phiprev))
      return zoom(aprev, phiprev, dphiprev, a, phia);
    if (std::abs(dphia) <= -c2 * dphi0) return accept(a, phia);
    if (dphia >= 0.0) return zoom(a, phia, dphia, aprev, phiprev);
    aprev = a;
    phiprev = phia;
    dphiprev = dphia;
    a = std::min(2.0 * a, alpha_cap);
    if (a >= alpha_cap) break;
  }
  return give_up();
}

}  // namespace gaitopt
