#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlirls/inner_solver.hpp"
#include "nlirls/model.hpp"

namespace nlirls {

/// Where the multistart branches begin.
struct MultistartPlan {
  enum class Sampler { RandomInBall, UserProvided };

  Sampler sampler = Sampler::UserProvided;
  std::vector<Vector> start_points;
  /// Number of random starts; ignored for UserProvided.
  int num_starts = 1;
  double radius = 1.0;
  std::uint64_t seed = 0;
  /// Upper bound on concurrently running branches.
  int max_workers = 1;

  static MultistartPlan user_provided(std::vector<Vector> points);
  static MultistartPlan random_in_ball(int num_starts, double radius, std::uint64_t seed);

  /// The concrete start points for a problem on R^dim. Throws InvalidConfig
  /// for an empty plan and DimensionMismatch for wrongly sized user points.
  std::vector<Vector> materialize(Index dim) const;
};

/// Plain reweighting scheme: w = 1, eps = 1 at n = 0, then alternating
/// weighted least-squares solves and eps/weight updates.
SolveReport run_nr_irls(const ResidualMap& map, const Vector& y, const IrlsConfig& config,
                        const Vector& x_start);

/// Convexified scheme: each inner problem carries the anchor omega ||x - x^n||^2.
/// The first state (n = 1) takes eps and w from the residual at x_start.
SolveReport run_convexified(const ResidualMap& map, const Vector& y, const IrlsConfig& config,
                            const Vector& x_start);

struct MultistartBranch {
  Vector start;
  Vector l2_point;  ///< stage-1 stationary point of the unweighted problem
  bool ok = false;
  std::string error;
  SolveReport report;
};

struct MultistartResult {
  SolveReport best;
  std::size_t best_index = 0;
  std::vector<MultistartBranch> branches;
};

/// Stage 1: unweighted least squares from every start. Stage 2: the
/// convexified scheme (or the plain one when omega = 0) from each stage-1
/// point. The branch with the smallest final lp residual wins; ties go to the
/// lowest start index.
MultistartResult multistart_convexified(const ResidualMap& map, const Vector& y,
                                        const IrlsConfig& config, const MultistartPlan& plan);

}  // namespace nlirls
