#include "nlirls/functional.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nlirls {

namespace {

void check_p(double p) {
  if (!(p >= 1.0 && p <= 2.0)) raise(ErrorCode::InvalidP, "p must lie in [1, 2], got " + std::to_string(p));
}

void check_sizes(Index a, Index b, const char* what) {
  if (a != b) {
    raise(ErrorCode::DimensionMismatch, std::string(what) + ": sizes " + std::to_string(a) +
                                            " and " + std::to_string(b) + " differ");
  }
}

}  // namespace

Vector residual(const ResidualMap& map, const Vector& x, const Vector& y) {
  check_sizes(x.size(), map.dim_in(), "input");
  check_sizes(y.size(), map.dim_out(), "data");
  Vector r = map.eval(x) - y;
  if (!r.allFinite()) raise(ErrorCode::NonFiniteEvaluation, "non-finite residual");
  return r;
}

double weighted_sq_norm(const Vector& r, const Weights& w) {
  check_sizes(r.size(), w.size(), "weights");
  return (w.values().array() * r.array().square()).sum();
}

double weighted_sq_residual(const ResidualMap& map, const Vector& x, const Vector& y,
                            const Weights& w) {
  return weighted_sq_norm(residual(map, x, y), w);
}

double j_from_residual(const Vector& r, const Weights& w, double eps, double p) {
  check_p(p);
  check_sizes(r.size(), w.size(), "weights");
  const auto wa = w.values().array();
  double value = (wa * r.array().square()).sum() + eps * eps * wa.sum();
  if (p < 2.0) value += (2.0 - p) / p * wa.pow(p / (p - 2.0)).sum();
  return 0.5 * p * value;
}

double eval_J(const ResidualMap& map, const Vector& x, const Vector& y, const Weights& w,
              double eps, double p) {
  return j_from_residual(residual(map, x, y), w, eps, p);
}

double f_eps_from_residual(const Vector& r, double eps, double p) {
  check_p(p);
  return (r.array().square() + eps * eps).pow(0.5 * p).sum();
}

double eval_f_eps(const ResidualMap& map, const Vector& x, const Vector& y, double eps, double p) {
  return f_eps_from_residual(residual(map, x, y), eps, p);
}

Weights optimal_weights(const Vector& r, double eps, double p) {
  check_p(p);
  if (!(eps > 0.0)) raise(ErrorCode::NonPositiveEps, "optimal weights need eps > 0");
  return Weights((r.array().square() + eps * eps).pow(0.5 * (p - 2.0)).matrix());
}

EpsilonUpdate update_epsilon(const Vector& r, double eps_n, double eps_tilde) {
  if (r.size() == 0) raise(ErrorCode::EmptyResidual, "cannot update eps from an empty residual");
  if (!(eps_n >= 0.0)) raise(ErrorCode::InvalidConfig, "eps_n must be nonnegative");
  EpsilonUpdate u;
  u.n_min = r.cwiseAbs().minCoeff();
  u.m_max = r.cwiseAbs().maxCoeff();
  u.next_eps = std::min({std::max(u.n_min, eps_tilde), eps_n, u.m_max});
  return u;
}

Vector grad_J_x(const ResidualMap& map, const Vector& x, const Vector& y, const Weights& w,
                double p) {
  if (!map.has_jacobian()) raise(ErrorCode::JacobianUnavailable, "grad_J_x needs a Jacobian");
  const Vector r = residual(map, x, y);
  check_sizes(r.size(), w.size(), "weights");
  const Matrix jac = map.jacobian(x);
  return p * (jac.transpose() * w.values().cwiseProduct(r));
}

Vector grad_f_eps(const ResidualMap& map, const Vector& x, const Vector& y, double eps, double p) {
  check_p(p);
  if (!map.has_jacobian()) raise(ErrorCode::JacobianUnavailable, "grad_f_eps needs a Jacobian");
  const Vector r = residual(map, x, y);
  Vector coeff(r.size());
  for (Index i = 0; i < r.size(); ++i) {
    const double s = r[i] * r[i] + eps * eps;
    // s == 0 only when r_i == 0 and eps == 0; that term contributes nothing.
    coeff[i] = s > 0.0 ? std::pow(s, 0.5 * (p - 2.0)) * r[i] : 0.0;
  }
  return p * (map.jacobian(x).transpose() * coeff);
}

double lp_norm_pow(const Vector& v, double p) {
  if (!(p >= 1.0)) raise(ErrorCode::InvalidP, "lp norm needs p >= 1");
  return v.array().abs().pow(p).sum();
}

double lp_norm(const Vector& v, double p) {
  if (!(p >= 1.0)) raise(ErrorCode::InvalidP, "lp norm needs p >= 1");
  if (p == 2.0) return v.norm();
  if (p == 1.0) return v.lpNorm<1>();
  return std::pow(lp_norm_pow(v, p), 1.0 / p);
}

double weighted_l2_norm(const Vector& v, const Weights& w) {
  return std::sqrt(weighted_sq_norm(v, w));
}

}  // namespace nlirls
