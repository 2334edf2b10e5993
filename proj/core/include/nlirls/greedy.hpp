#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nlirls/irls.hpp"
#include "nlirls/model.hpp"

namespace nlirls {

struct GreedyOptions {
  /// Ground truth for rel_error and success; without it success stays false.
  std::optional<Vector> x_star;
  double success_threshold = 0.01;
  /// Compare against +-x_star (phase retrieval cannot resolve the global sign).
  bool sign_invariant = false;
  /// Ranked candidates tried per step before the step counts as rejected.
  int max_candidates = 5;
  /// Stop once the lp residual is at most this fraction of (1 + ||y||_p).
  double residual_tol = 1e-10;
};

struct GreedyReport {
  /// Support after every step (ascending indices).
  std::vector<std::vector<Index>> support_trace;
  Vector estimate;
  bool success = false;
  double rel_error = 0.0;
  int steps_used = 0;
  /// lp residual after every step; nonincreasing.
  std::vector<double> per_step_residuals;
  /// Outer iterations and final eps of the solve behind the current estimate.
  int final_outer_iters = 0;
  double final_eps = 0.0;
};

/// Support-growing search with at most 3K steps. Each step ranks the indices
/// outside the support by the gradient of the smoothed lp residual at the
/// current estimate (falling back to a coordinate probe where that gradient
/// vanishes), then solves the restricted problem for the best candidate with
/// multistart_convexified. When the support already has K entries its
/// smallest-magnitude index is dropped first. A candidate is kept only if the
/// residual strictly decreases; otherwise the next one is tried. `plan`
/// supplies the random starts; the current estimate is always added as a warm start.
GreedyReport greedy_sparse_recovery(const ResidualMap& map, const Vector& y, int max_sparsity,
                                    const IrlsConfig& config, const MultistartPlan& plan,
                                    std::uint64_t seed, const GreedyOptions& options = {});

/// ||estimate - x_star|| / ||x_star||, optionally minimized over the sign of x_star.
double relative_error(const Vector& estimate, const Vector& x_star, bool sign_invariant);

}  // namespace nlirls
