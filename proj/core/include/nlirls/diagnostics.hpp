#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nlirls/model.hpp"

namespace nlirls {

struct BccEstimate {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  int num_samples = 0;
  double p = 1.0;
};

/// Extremes of ||A(x*) - A(z)||_p / ||x* - z||_2 over the samples z.
BccEstimate estimate_bcc(const ResidualMap& map, const Vector& x_star,
                         const std::vector<Vector>& samples, double p);

/// R* = J0^(1/p)/alpha + ||A(x*) - y||_p/alpha + ||x*||_2.
double compute_R_star_bound(double j0, double alpha, double lp_residual_at_xstar,
                            double xstar_norm, double p);

/// R^ = (J0^(1/p) + 3 ||A(0) - y||_p) / alpha.
double compute_R_hat(double j0, double alpha, double lp_residual_at_zero, double p);

using ScalarObjective = std::function<double(const Vector&)>;

/// Symmetrized central-difference Hessian with step h.
Matrix finite_difference_hessian(const ScalarObjective& objective, const Vector& x, double h);

/// Smallest eigenvalue of a symmetric matrix.
double smallest_eigenvalue(const Matrix& symmetric);

/// Minimum over the center and num_probes random points of the ball of the
/// smallest Hessian eigenvalue (finite differences, step 1e-5 * radius).
double probe_strong_convexity(const ScalarObjective& objective, const Vector& x_center,
                              double radius, int num_probes, std::uint64_t seed = 0);

struct Uscc1Check {
  /// (J(x^n,w^n,eps_n) - J(x^{n+1},w^n,eps_n)) / ||x^n - x^{n+1}||^2 per kept step.
  std::vector<double> ratios;
  /// Trace index n of each ratio.
  std::vector<int> steps;
  int skipped = 0;
  /// Running minimum of the ratios (the empirical constant); +inf if none.
  double c_empirical = 0.0;
};

Uscc1Check check_uscc1_on_trace(const SolveReport& report, const ResidualMap& map, const Vector& y,
                                double p);

/// Smallest L with |g(z_t) - t g(x_a) - (1-t) g(x_b)| <= L t(1-t) ||x_a - x_b||^2 on
/// the grid, where g = ||A(.) - y||^2_w and z_t = t x_a + (1-t) x_b.
double check_lipcond(const ResidualMap& map, const Vector& y, const Weights& w, const Vector& x_a,
                     const Vector& x_b, const std::vector<double>& t_grid);

struct DecayConstants {
  double mu = 0.0;
  double nu = 0.0;
  double c_hat = 0.0;
  double beta = 0.0;
  int m = 0;
  double p = 1.0;
  bool contraction = false;  ///< mu < 1
};

/// mu = 2^(1+2/p) (m^2+1) beta^2 / C^,  nu = 2^(1+2/p) (m^2+1-2^(-2/p)) / C^.
DecayConstants compute_mu_nu(double p, int m, double beta, double c_hat);

struct DecayFit {
  double mu_empirical = 0.0;  ///< NaN when no_decay
  double plateau = 0.0;
  bool no_decay = false;
  int points_used = 0;
};

/// Geometric fit of E^n -> plateau. The consecutive decrements d_n = E^n - E^{n+1}
/// of E^n = c mu^n + E_inf are c (1-mu) mu^n, so log d_n is fitted linearly over
/// the longest run of decreasing E; the plateau is extrapolated from the last one.
DecayFit fit_error_decay(const std::vector<double>& errors);

/// Same with E^n = ||x^n - x_star||^2 taken from the trace.
DecayFit fit_error_decay(const SolveReport& report, const Vector& x_star);

/// Checks samplewise: whenever a challenger is no better than z in the weighted
/// norm with weights w(z, eps), it is also no better in f_eps (slack 1e-10).
bool verify_feps_characterization(const ResidualMap& map, const Vector& y, const Vector& z,
                                  double eps, double p, const std::vector<Vector>& challengers);

/// sum_i w_i a_i a_i^T for the rows a_i of a.
Matrix weighted_gram(const Matrix& a, const Weights& w);

}  // namespace nlirls
