#include "nlirls/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nlirls {

ResidualMap::ResidualMap(Index dim_in, Index dim_out) : dim_in_(dim_in), dim_out_(dim_out) {
  if (dim_in <= 0 || dim_out <= 0) {
    raise(ErrorCode::InvalidDims, "map dimensions must be positive, got k=" +
                                      std::to_string(dim_in) + " m=" + std::to_string(dim_out));
  }
}

Matrix ResidualMap::jacobian(const Vector&) const {
  raise(ErrorCode::JacobianUnavailable, "map has no analytic Jacobian");
}

void ResidualMap::check_input(const Vector& x) const {
  if (x.size() != dim_in_) {
    raise(ErrorCode::DimensionMismatch, "expected input of size " + std::to_string(dim_in_) +
                                            ", got " + std::to_string(x.size()));
  }
}

void require_overdetermined(const ResidualMap& map) {
  if (map.dim_out() < map.dim_in()) {
    raise(ErrorCode::InvalidDims, "solver requires m >= k, got k=" + std::to_string(map.dim_in()) +
                                      " m=" + std::to_string(map.dim_out()));
  }
}

Weights::Weights(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) raise(ErrorCode::InvalidDims, "empty weight vector");
  for (Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || !(values_[i] > 0.0)) {
      raise(ErrorCode::InvalidConfig,
            "weight " + std::to_string(i) + " is not strictly positive and finite");
    }
  }
}

Weights Weights::ones(Index m) { return Weights(Vector::Ones(m)); }

void InnerSolverOptions::validate() const {
  if (max_iters <= 0 || !(grad_tol > 0.0) || !(step_tol > 0.0) || !(lambda_init > 0.0)) {
    raise(ErrorCode::InvalidConfig, "inner solver tolerances and budgets must be positive");
  }
  if (!(lambda_up > 1.0) || !(lambda_down > 0.0 && lambda_down < 1.0)) {
    raise(ErrorCode::InvalidConfig, "require lambda_up > 1 > lambda_down > 0");
  }
}

void IrlsConfig::validate() const {
  if (!(p >= 1.0 && p <= 2.0)) raise(ErrorCode::InvalidP, "p must lie in [1, 2]");
  if (!(eps_tilde > 0.0)) raise(ErrorCode::InvalidConfig, "eps_tilde must be positive");
  if (!(eps_hard_floor > 0.0)) raise(ErrorCode::InvalidConfig, "eps_hard_floor must be positive");
  if (!(omega >= 0.0)) raise(ErrorCode::InvalidConfig, "omega must be nonnegative");
  if (!(stop_eps >= 0.0)) raise(ErrorCode::InvalidConfig, "stop_eps must be nonnegative");
  if (max_outer_iters <= 0) raise(ErrorCode::InvalidConfig, "max_outer_iters must be positive");
  inner.validate();
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::EpsZero: return "EpsZero";
    case Termination::EpsBelowFloor: return "EpsBelowFloor";
    case Termination::MaxIters: return "MaxIters";
    case Termination::InnerSolverFailure: return "InnerSolverFailure";
    case Termination::Stalled: return "Stalled";
  }
  return "Unknown";
}

namespace {

Vector checked_eval(const ResidualMap& map, const Vector& x) {
  Vector v = map.eval(x);
  if (!v.allFinite()) raise(ErrorCode::NonFiniteEvaluation, "map returned a non-finite value");
  return v;
}

}  // namespace

Matrix finite_difference_jacobian(const ResidualMap& map, const Vector& x, double h) {
  if (!(h > 0.0)) raise(ErrorCode::InvalidConfig, "finite-difference step must be positive");
  Matrix jac(map.dim_out(), map.dim_in());
  Vector probe = x;
  for (Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const Vector plus = checked_eval(map, probe);
    probe[j] = x[j] - h;
    const Vector minus = checked_eval(map, probe);
    probe[j] = x[j];
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

Matrix finite_difference_jacobian_scaled(const ResidualMap& map, const Vector& x,
                                         double rel_step) {
  Matrix jac(map.dim_out(), map.dim_in());
  Vector probe = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + h;
    const Vector plus = checked_eval(map, probe);
    probe[j] = x[j] - h;
    const Vector minus = checked_eval(map, probe);
    probe[j] = x[j];
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

double jacobian_fd_deviation(const ResidualMap& map, const Vector& x, double rel_step) {
  const Matrix analytic = map.jacobian(x);
  const Matrix fd = finite_difference_jacobian_scaled(map, x, rel_step);
  const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

}  // namespace nlirls
