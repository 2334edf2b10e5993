#pragma once

#include <chrono>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nlirls/errors.hpp"

namespace nlirls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Nonlinear map A : R^k -> R^m whose residual A(x) - y is minimized.
///
/// Implementations are immutable value objects: eval() and jacobian() are
/// deterministic and reentrant, so one instance can be shared by concurrent
/// solves. The overdetermined requirement m >= k is checked by the solvers,
/// not here, because sparse-recovery maps live on an ambient R^N with N > m
/// and only their restrictions to a support are solved.
class ResidualMap {
 public:
  virtual ~ResidualMap() = default;

  Index dim_in() const noexcept { return dim_in_; }
  Index dim_out() const noexcept { return dim_out_; }

  virtual Vector eval(const Vector& x) const = 0;

  virtual bool has_jacobian() const noexcept { return false; }

  /// m x k matrix of partial derivatives; row i is the gradient of A_i.
  virtual Matrix jacobian(const Vector& x) const;

 protected:
  ResidualMap(Index dim_in, Index dim_out);

  void check_input(const Vector& x) const;

 private:
  Index dim_in_;
  Index dim_out_;
};

using MapPtr = std::shared_ptr<const ResidualMap>;

/// Throws InvalidDims unless dim_out >= dim_in.
void require_overdetermined(const ResidualMap& map);

/// Strictly positive, finite weight vector.
class Weights {
 public:
  explicit Weights(Vector values);

  static Weights ones(Index m);

  const Vector& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }

 private:
  Vector values_;
};

enum class InnerMethod { GaussNewton, LevenbergMarquardt };

/// Damping matrix added to the Gauss-Newton normal matrix in LM steps.
enum class DampingKind { Identity, GramDiagonal };

struct InnerSolverOptions {
  InnerMethod method = InnerMethod::LevenbergMarquardt;
  DampingKind damping = DampingKind::Identity;
  int max_iters = 200;
  double grad_tol = 1e-10;
  double step_tol = 1e-12;
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;

  void validate() const;
};

struct IrlsConfig {
  double p = 1.0;
  double eps_tilde = 1e-6;
  double eps_hard_floor = 1e-8;
  int max_outer_iters = 200;
  /// Convexification weight; 0 selects the plain reweighting scheme.
  double omega = 0.0;
  InnerSolverOptions inner{};
  /// Stop as soon as eps_n <= stop_eps.
  double stop_eps = 0.0;

  void validate() const;
};

struct IrlsState {
  int n = 0;
  Vector x;
  Weights w = Weights::ones(1);
  double eps = 0.0;
  double j_value = 0.0;
};

enum class Termination { EpsZero, EpsBelowFloor, MaxIters, InnerSolverFailure, Stalled };

std::string_view to_string(Termination t) noexcept;

struct SolveReport {
  std::vector<IrlsState> iterates;
  Termination termination = Termination::MaxIters;
  Vector final_x;
  /// ||A(final_x) - y||_p (the norm, not its p-th power).
  double final_lp_residual = 0.0;
  std::chrono::duration<double> wall_time{0.0};
};

/// Central differences with a fixed step:
/// J(i,j) = (A_i(x + h e_j) - A_i(x - h e_j)) / (2h).
Matrix finite_difference_jacobian(const ResidualMap& map, const Vector& x, double h);

/// Central differences with per-coordinate step h_j = rel_step * max(1, |x_j|).
Matrix finite_difference_jacobian_scaled(const ResidualMap& map, const Vector& x,
                                         double rel_step = 1e-6);

/// max |analytic - fd| / max(1, max |analytic|) at x.
double jacobian_fd_deviation(const ResidualMap& map, const Vector& x, double rel_step = 1e-6);

}  // namespace nlirls
