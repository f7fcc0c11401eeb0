#pragma once

#include <functional>
#include <utility>

namespace gaitopt {

/// 1-d merit function handle: returns (value, derivative) at alpha.
using ScalarFn = std::function<std::pair<double, double>(double)>;

struct LineSearchResult {
  double alpha = 0.0;
  double phi = 0.0;       // value at alpha
  bool satisfied = false;  // both Wolfe conditions hold
  int evaluations = 0;
};

/// Bracketing + zoom line search enforcing the Wolfe conditions
/// (sufficient decrease c1, curvature c2). Throws std::invalid_argument
/// when phi'(0) >= 0. When the conditions cannot be met within the zoom
/// budget, returns the best decreasing step found with satisfied=false.
LineSearchResult wolfe_line_search(const ScalarFn& phi, double alpha0,
                                   double c1 = 1e-4, double c2 = 0.9,
                                   int max_zoom = 50);

}  // namespace gaitopt
