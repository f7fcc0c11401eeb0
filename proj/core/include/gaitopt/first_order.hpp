#pragma once

#include <cstdint>
#include <optional>

#include "gaitopt/line_search.hpp"
#include "gaitopt/program.hpp"
#include "gaitopt/rng.hpp"
#include "gaitopt/types.hpp"

namespace gaitopt {

/// Without-replacement minibatch stream. The draw at each step is fully
/// determined by (seed, counter); advancing the counter changes it.
struct MiniBatchSampler {
  int n = 0;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  int batch_size() const {
    return std::max(1, static_cast<int>(std::ceil(fraction * n)));
  }
  /// Ascending indices; advances the counter.
  std::vector<int> sample();
};

/// Adam / Nadam moment accumulators.
struct AdamState {
  Vector m, v;
  int k = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;

  void init(int d) {
    m = Vector::Zero(d);
    v = Vector::Zero(d);
    k = 0;
  }
  /// Consume gradient g, advance the step count, return the
  /// preconditioned direction m_hat / (sqrt(v_hat) + eps).
  Vector direction(const Vector& g, bool nesterov);
};

/// SAG-style per-term gradient table with an incrementally maintained sum.
struct GradientMemory {
  Matrix y;            // n x d, last-computed gradient of each term
  Vector running_sum;  // column sum of y
  bool initialized = false;
  int refresh_count = 0;

  void reset() { initialized = false; }
  Vector recompute_sum() const;
};

/// Refresh the rows in `batch` at x and return the running sum over all
/// terms. The first call after reset() refreshes every row. A full-batch
/// refresh recomputes the sum in ascending term order, which makes
/// fraction = 1 bit-identical to the direct full gradient.
const Vector& incremental_gradient(GradientMemory& memory,
                                   const SumStructuredProgram& program,
                                   const Vector& x, double mu,
                                   const std::vector<int>& batch, double w);

enum class GdMode { Full, Stochastic, Incremental };
enum class UpdateRule { Plain, Adam, Nadam };

struct GdConfig {
  GdMode mode = GdMode::Full;
  UpdateRule update_rule = UpdateRule::Plain;
  double fraction = 1.0;  // ignored for mode Full
  std::uint64_t seed = 0;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int epochs_patience = 10;
  int max_inner_iterations = 2000;  // per penalty rung
  PenaltyConfig penalty;
  bool record_history = false;
  double time_limit_s = std::numeric_limits<double>::infinity();
};

/// Mutable per-solve state threaded through gd_step.
struct GdState {
  MiniBatchSampler sampler;
  AdamState adam;
  GradientMemory memory;
  double alpha_prev = 0.0;  // warm start for the next line search
  bool line_search_flag = false;
};

/// One projected step of the configured rule along the sampled batch.
/// The step length comes from a Wolfe search along the projected path;
/// a non-descent or failed search falls back to alpha = 1e-4 and flags.
Vector gd_step(const SumStructuredProgram& program, const Vector& x, double mu,
               const std::vector<int>& batch, const GdConfig& config,
               GdState& state);

/// Penalty-continuation driver: for each mu in the ladder, iterate
/// gd_step until the improvement patience is exhausted, stopping early
/// once constraints hold to tolerance and progress has flattened.
SolveReport solve_first_order(const SumStructuredProgram& program,
                              const Vector& x0, const GdConfig& config);

}  // namespace gaitopt
