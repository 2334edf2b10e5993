#pragma once

#include "nlirls/model.hpp"

namespace nlirls {

/// A(x) - y, with dimension and finiteness checks.
Vector residual(const ResidualMap& map, const Vector& x, const Vector& y);

/// sum_i w_i r_i^2
double weighted_sq_norm(const Vector& r, const Weights& w);

/// sum_i w_i (A_i(x) - y_i)^2
double weighted_sq_residual(const ResidualMap& map, const Vector& x, const Vector& y,
                            const Weights& w);

/// Auxiliary functional evaluated from a residual vector:
///
///   J = p/2 * [ sum_i w_i r_i^2 + sum_i ( eps^2 w_i + (2-p)/p * w_i^(p/(p-2)) ) ].
///
/// For p = 2 the last term is defined as zero. eps = 0 is allowed.
double j_from_residual(const Vector& r, const Weights& w, double eps, double p);

double eval_J(const ResidualMap& map, const Vector& x, const Vector& y, const Weights& w,
              double eps, double p);

/// eps-perturbed lp residual sum_i (r_i^2 + eps^2)^(p/2).
double f_eps_from_residual(const Vector& r, double eps, double p);

double eval_f_eps(const ResidualMap& map, const Vector& x, const Vector& y, double eps, double p);

/// Minimizer of J(x, ., eps) over positive weights: w_i = (r_i^2 + eps^2)^((p-2)/2).
Weights optimal_weights(const Vector& r, double eps, double p);

struct EpsilonUpdate {
  double n_min = 0.0;  ///< min_i |r_i|
  double m_max = 0.0;  ///< max_i |r_i|
  double next_eps = 0.0;
};

/// next_eps = min( max(n_min, eps_tilde), eps_n, m_max ).
EpsilonUpdate update_epsilon(const Vector& r, double eps_n, double eps_tilde);

/// Gradient of J in x: p * sum_i w_i r_i grad A_i(x).
Vector grad_J_x(const ResidualMap& map, const Vector& x, const Vector& y, const Weights& w,
                double p);

/// Gradient of f_eps: p * sum_i (r_i^2 + eps^2)^((p-2)/2) r_i grad A_i(x).
Vector grad_f_eps(const ResidualMap& map, const Vector& x, const Vector& y, double eps, double p);

double lp_norm(const Vector& v, double p);

/// (sum_i |v_i|^p)
double lp_norm_pow(const Vector& v, double p);

double weighted_l2_norm(const Vector& v, const Weights& w);

}  // namespace nlirls
