#pragma once

#include <string>

namespace gaitopt {

struct SelftestResult {
  bool passed = false;
  std::string log;
};

/// Built-in diagnostic suite: analytic-gradient finite-difference checks
/// across every term family and a QP-vs-grid-search oracle sweep.
SelftestResult run_selftest();

}  // namespace gaitopt
