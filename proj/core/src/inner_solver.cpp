#include "nlirls/inner_solver.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "nlirls/functional.hpp"

namespace nlirls {

namespace {

constexpr double kLambdaCeiling = 1e12;
constexpr int kMaxHalvings = 40;

void check_prox(const ProximalTerm& prox, Index k) {
  if (!(prox.omega >= 0.0)) raise(ErrorCode::InvalidConfig, "omega must be nonnegative");
  if (prox.active() && prox.center.size() != k) {
    raise(ErrorCode::DimensionMismatch, "proximal center has size " +
                                            std::to_string(prox.center.size()) + ", expected " +
                                            std::to_string(k));
  }
}

double prox_value(const Vector& x, const ProximalTerm& prox) {
  return prox.active() ? prox.omega * (x - prox.center).squaredNorm() : 0.0;
}

// Cholesky solve; retries once with a 1e-14 * trace ridge on failure.
std::optional<Vector> solve_spd(const Matrix& a, const Vector& b) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    Vector d = llt.solve(b);
    if (d.allFinite()) return d;
  }
  const double ridge = 1e-14 * std::max(a.trace(), 1e-300);
  const Matrix regularized = a + ridge * Matrix::Identity(a.rows(), a.cols());
  llt.compute(regularized);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Vector d = llt.solve(b);
  if (!d.allFinite()) return std::nullopt;
  return d;
}

struct Linearization {
  Vector r;
  Matrix jac;
  Matrix gram;  // J^T W J
  Vector grad;  // J^T W r + 2 omega (x - u)
  double value = 0.0;
};

Linearization linearize(const ResidualMap& map, const Vector& x, const Vector& y,
                        const Weights& w, const ProximalTerm& prox) {
  Linearization lin;
  lin.r = residual(map, x, y);
  lin.jac = map.jacobian(x);
  if (!lin.jac.allFinite()) raise(ErrorCode::NonFiniteEvaluation, "non-finite Jacobian");
  const Matrix wj = w.values().asDiagonal() * lin.jac;
  lin.gram = lin.jac.transpose() * wj;
  lin.grad = wj.transpose() * lin.r;
  lin.value = 0.5 * weighted_sq_norm(lin.r, w);
  if (prox.active()) {
    lin.grad += 2.0 * prox.omega * (x - prox.center);
    lin.value += prox_value(x, prox);
  }
  return lin;
}

// F at a trial point, or nullopt if the map misbehaves there.
std::optional<double> trial_value(const ResidualMap& map, const Vector& x, const Vector& y,
                                  const Weights& w, const ProximalTerm& prox) {
  const Vector v = map.eval(x);
  if (!v.allFinite()) return std::nullopt;
  const double f = 0.5 * weighted_sq_norm(v - y, w) + prox_value(x, prox);
  if (!std::isfinite(f)) return std::nullopt;
  return f;
}

}  // namespace

NormalSystem gn_normal_matrix(const ResidualMap& map, const Vector& x, const Vector& y,
                              const Weights& w, const ProximalTerm& prox) {
  if (!map.has_jacobian()) raise(ErrorCode::JacobianUnavailable, "Gauss-Newton needs a Jacobian");
  check_prox(prox, map.dim_in());
  Linearization lin = linearize(map, x, y, w, prox);
  NormalSystem sys{std::move(lin.gram), -lin.grad};
  if (prox.active()) sys.matrix.diagonal().array() += 2.0 * prox.omega;
  return sys;
}

double inner_objective(const ResidualMap& map, const Vector& x, const Vector& y,
                       const Weights& w, const ProximalTerm& prox) {
  check_prox(prox, map.dim_in());
  return 0.5 * weighted_sq_residual(map, x, y, w) + prox_value(x, prox);
}

Vector inner_gradient(const ResidualMap& map, const Vector& x, const Vector& y,
                      const Weights& w, const ProximalTerm& prox) {
  return -gn_normal_matrix(map, x, y, w, prox).rhs;
}

InnerResult lm_solve(const ResidualMap& map, const Vector& y, const Weights& w, const Vector& x0,
                     const ProximalTerm& prox, const InnerSolverOptions& opts) {
  opts.validate();
  if (!map.has_jacobian()) raise(ErrorCode::JacobianUnavailable, "inner solver needs a Jacobian");
  check_prox(prox, map.dim_in());
  if (!x0.allFinite()) raise(ErrorCode::NonFiniteEvaluation, "non-finite starting point");

  InnerResult result;
  result.x = x0;
  Linearization lin = linearize(map, result.x, y, w, prox);
  result.objective_trace.push_back(lin.value);
  result.grad_norm = lin.grad.norm();
  if (result.grad_norm <= opts.grad_tol) {
    result.converged = true;
    result.status = InnerStatus::GradientTolerance;
    return result;
  }

  double lambda = opts.method == InnerMethod::GaussNewton ? 0.0 : opts.lambda_init;
  bool ever_factored = false;

  while (result.iterations < opts.max_iters) {
    Matrix normal = lin.gram;
    if (prox.active()) normal.diagonal().array() += 2.0 * prox.omega;

    std::optional<Vector> accepted_step;
    double accepted_value = 0.0;

    if (opts.method == InnerMethod::GaussNewton) {
      ++result.iterations;
      const std::optional<Vector> d = solve_spd(normal, -lin.grad);
      if (!d) raise(ErrorCode::SingularNormalEquations, "Gauss-Newton normal matrix is singular");
      double t = 1.0;
      for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
        const Vector step = t * *d;
        const std::optional<double> f = trial_value(map, result.x + step, y, w, prox);
        if (f && *f < lin.value) {
          accepted_step = step;
          accepted_value = *f;
          break;
        }
      }
      if (!accepted_step) {
        result.converged = true;
        result.status = InnerStatus::NoDescent;
        return result;
      }
    } else {
      while (!accepted_step) {
        if (result.iterations >= opts.max_iters) break;
        ++result.iterations;
        Matrix damped = normal;
        if (opts.damping == DampingKind::Identity) {
          damped.diagonal().array() += lambda;
        } else {
          const double floor = 1e-12 * std::max(1.0, lin.gram.diagonal().maxCoeff());
          damped.diagonal().array() += lambda * lin.gram.diagonal().array().max(floor);
        }
        const std::optional<Vector> d = solve_spd(damped, -lin.grad);
        if (d) {
          ever_factored = true;
          const std::optional<double> f = trial_value(map, result.x + *d, y, w, prox);
          if (f && *f < lin.value) {
            accepted_step = *d;
            accepted_value = *f;
            break;
          }
        }
        lambda *= opts.lambda_up;
        if (lambda > kLambdaCeiling) {
          if (!ever_factored) {
            raise(ErrorCode::SingularNormalEquations, "damped normal matrix never factored");
          }
          result.converged = true;
          result.status = InnerStatus::NoDescent;
          return result;
        }
      }
      if (!accepted_step) break;
      lambda = std::max(lambda * opts.lambda_down, 1e-15);
    }

    result.x += *accepted_step;
    lin = linearize(map, result.x, y, w, prox);
    // Keep the recorded objective consistent with the evaluation used for acceptance.
    lin.value = accepted_value;
    result.objective_trace.push_back(accepted_value);
    result.grad_norm = lin.grad.norm();

    if (result.grad_norm <= opts.grad_tol) {
      result.converged = true;
      result.status = InnerStatus::GradientTolerance;
      return result;
    }
    if (accepted_step->norm() <= opts.step_tol * (1.0 + result.x.norm())) {
      result.converged = true;
      result.status = InnerStatus::StepTolerance;
      return result;
    }
  }
  result.converged = false;
  result.status = InnerStatus::MaxIterations;
  return result;
}

}  // namespace nlirls
