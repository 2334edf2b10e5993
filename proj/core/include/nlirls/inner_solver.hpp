#pragma once

#include <vector>

#include "nlirls/model.hpp"

namespace nlirls {

/// Quadratic anchor omega * ||x - center||^2 added to the inner objective.
struct ProximalTerm {
  double omega = 0.0;
  Vector center;

  static ProximalTerm none() { return {}; }
  bool active() const noexcept { return omega > 0.0; }
};

/// Gauss-Newton system  matrix * d = rhs  for the inner objective.
struct NormalSystem {
  Matrix matrix;  ///< J^T W J + 2 omega I
  Vector rhs;     ///< -(J^T W r + 2 omega (x - u)),  r = A(x) - y
};

NormalSystem gn_normal_matrix(const ResidualMap& map, const Vector& x, const Vector& y,
                              const Weights& w, const ProximalTerm& prox);

/// Inner objective F(x) = 1/2 ||A(x) - y||^2_{l2(w)} + omega ||x - u||^2.
double inner_objective(const ResidualMap& map, const Vector& x, const Vector& y,
                       const Weights& w, const ProximalTerm& prox);

/// grad F(x) = J^T W r + 2 omega (x - u).
Vector inner_gradient(const ResidualMap& map, const Vector& x, const Vector& y,
                      const Weights& w, const ProximalTerm& prox);

enum class InnerStatus {
  GradientTolerance,
  StepTolerance,
  /// No trial step decreases F in floating point; x is numerically stationary.
  NoDescent,
  MaxIterations,
};

struct InnerResult {
  Vector x;
  bool converged = false;
  InnerStatus status = InnerStatus::MaxIterations;
  int iterations = 0;
  /// F at x0 followed by F after every accepted step; strictly decreasing.
  std::vector<double> objective_trace;
  double grad_norm = 0.0;
};

/// Minimizes F from x0 by monotone Levenberg-Marquardt (or Gauss-Newton with
/// halving line search). A step is accepted only if it strictly decreases F,
/// so F(result.x) <= F(x0) always holds.
InnerResult lm_solve(const ResidualMap& map, const Vector& y, const Weights& w, const Vector& x0,
                     const ProximalTerm& prox, const InnerSolverOptions& opts);

}  // namespace nlirls
