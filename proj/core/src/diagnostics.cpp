#include "nlirls/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "nlirls/functional.hpp"
#include "nlirls/rng.hpp"

namespace nlirls {

namespace {

double checked(double v) {
  if (!std::isfinite(v)) raise(ErrorCode::NonFiniteEvaluation, "objective returned a non-finite value");
  return v;
}

}  // namespace

BccEstimate estimate_bcc(const ResidualMap& map, const Vector& x_star,
                         const std::vector<Vector>& samples, double p) {
  if (samples.empty()) raise(ErrorCode::DegenerateSample, "no samples given");
  const Vector a_star = map.eval(x_star);
  BccEstimate est;
  est.p = p;
  est.alpha_hat = std::numeric_limits<double>::infinity();
  est.beta_hat = 0.0;
  for (const Vector& z : samples) {
    const double dist = (x_star - z).norm();
    if (dist < 1e-14) raise(ErrorCode::DegenerateSample, "sample coincides with x_star");
    const double ratio = lp_norm(a_star - map.eval(z), p) / dist;
    est.alpha_hat = std::min(est.alpha_hat, ratio);
    est.beta_hat = std::max(est.beta_hat, ratio);
  }
  est.num_samples = static_cast<int>(samples.size());
  return est;
}

double compute_R_star_bound(double j0, double alpha, double lp_residual_at_xstar,
                            double xstar_norm, double p) {
  if (!(alpha > 0.0)) raise(ErrorCode::NonPositiveAlpha, "alpha must be positive");
  return std::pow(j0, 1.0 / p) / alpha + lp_residual_at_xstar / alpha + xstar_norm;
}

double compute_R_hat(double j0, double alpha, double lp_residual_at_zero, double p) {
  if (!(alpha > 0.0)) raise(ErrorCode::NonPositiveAlpha, "alpha must be positive");
  return (std::pow(j0, 1.0 / p) + 3.0 * lp_residual_at_zero) / alpha;
}

Matrix finite_difference_hessian(const ScalarObjective& objective, const Vector& x, double h) {
  if (!(h > 0.0)) raise(ErrorCode::InvalidConfig, "Hessian step must be positive");
  const Index k = x.size();
  Matrix hess(k, k);
  Vector z = x;
  auto f = [&](Index i, double si, Index j, double sj) {
    z = x;
    z[i] += si * h;
    z[j] += sj * h;
    return checked(objective(z));
  };
  for (Index i = 0; i < k; ++i) {
    for (Index j = i; j < k; ++j) {
      const double v =
          (f(i, 1, j, 1) - f(i, 1, j, -1) - f(i, -1, j, 1) + f(i, -1, j, -1)) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

double smallest_eigenvalue(const Matrix& symmetric) {
  const Matrix sym = 0.5 * (symmetric + symmetric.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) raise(ErrorCode::NonFiniteEvaluation, "eigensolver failed");
  return solver.eigenvalues()[0];
}

double probe_strong_convexity(const ScalarObjective& objective, const Vector& x_center,
                              double radius, int num_probes, std::uint64_t seed) {
  if (!(radius > 0.0)) raise(ErrorCode::InvalidConfig, "probe radius must be positive");
  if (num_probes < 0) raise(ErrorCode::InvalidConfig, "num_probes must be nonnegative");
  const double h = 1e-5 * radius;
  double c = smallest_eigenvalue(finite_difference_hessian(objective, x_center, h));
  Rng rng(seed);
  for (int i = 0; i < num_probes; ++i) {
    const Vector z = x_center + rng.point_in_ball(x_center.size(), radius);
    c = std::min(c, smallest_eigenvalue(finite_difference_hessian(objective, z, h)));
  }
  return c;
}

Uscc1Check check_uscc1_on_trace(const SolveReport& report, const ResidualMap& map, const Vector& y,
                                double p) {
  if (report.iterates.size() < 2) raise(ErrorCode::TraceTooShort, "need at least two iterates");
  Uscc1Check out;
  out.c_empirical = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n + 1 < report.iterates.size(); ++n) {
    const IrlsState& a = report.iterates[n];
    const IrlsState& b = report.iterates[n + 1];
    const double dx2 = (a.x - b.x).squaredNorm();
    if (std::sqrt(dx2) < 1e-14) {
      ++out.skipped;
      continue;
    }
    // eps and w are shared, so only the weighted residual terms differ.
    const double drop = 0.5 * p *
                        (weighted_sq_residual(map, a.x, y, a.w) - weighted_sq_residual(map, b.x, y, a.w));
    const double ratio = drop / dx2;
    out.ratios.push_back(ratio);
    out.steps.push_back(a.n);
    out.c_empirical = std::min(out.c_empirical, ratio);
  }
  return out;
}

double check_lipcond(const ResidualMap& map, const Vector& y, const Weights& w, const Vector& x_a,
                     const Vector& x_b, const std::vector<double>& t_grid) {
  const double d2 = (x_a - x_b).squaredNorm();
  if (d2 < 1e-28) raise(ErrorCode::DegeneratePair, "x_a and x_b coincide");
  const double ga = weighted_sq_residual(map, x_a, y, w);
  const double gb = weighted_sq_residual(map, x_b, y, w);
  double l = 0.0;
  for (double t : t_grid) {
    if (!(t > 0.0 && t < 1.0)) raise(ErrorCode::InvalidConfig, "t_grid values must lie in (0, 1)");
    const Vector z = t * x_a + (1.0 - t) * x_b;
    const double gz = weighted_sq_residual(map, z, y, w);
    const double lhs = std::abs(t * (gz - ga) + (1.0 - t) * (gz - gb));
    l = std::max(l, lhs / (t * (1.0 - t) * d2));
  }
  return l;
}

DecayConstants compute_mu_nu(double p, int m, double beta, double c_hat) {
  if (!(c_hat > 0.0)) raise(ErrorCode::NonPositiveCHat, "C^ must be positive");
  if (!(p >= 1.0 && p <= 2.0)) raise(ErrorCode::InvalidP, "p must lie in [1, 2]");
  const double lead = std::pow(2.0, 1.0 + 2.0 / p);
  const double mm = static_cast<double>(m) * m + 1.0;
  DecayConstants d;
  d.p = p;
  d.m = m;
  d.beta = beta;
  d.c_hat = c_hat;
  d.mu = lead * mm * beta * beta / c_hat;
  d.nu = lead * (mm - std::pow(2.0, -2.0 / p)) / c_hat;
  d.contraction = d.mu < 1.0;
  return d;
}

DecayFit fit_error_decay(const std::vector<double>& errors) {
  if (errors.size() < 4) raise(ErrorCode::TraceTooShort, "need at least four error values");
  DecayFit fit;
  fit.plateau = errors.back();

  // Longest run of decrements that are clearly above rounding noise; later runs win ties.
  const std::size_t n = errors.size() - 1;
  std::vector<double> d(n);
  std::vector<bool> good(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = errors[i] - errors[i + 1];
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(errors[i]), std::abs(errors[i + 1]));
    good[i] = d[i] > noise;
  }
  std::size_t best_start = 0, best_len = 0;
  for (std::size_t i = 0; i < n;) {
    if (!good[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && good[j]) ++j;
    if (j - i >= best_len) {
      best_start = i;
      best_len = j - i;
    }
    i = j;
  }

  if (best_len < 2) {
    fit.no_decay = true;
    fit.mu_empirical = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  // Least squares for log d_i = a + i log mu.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = best_start; i < best_start + best_len; ++i) {
    const double xi = static_cast<double>(i);
    const double yi = std::log(d[i]);
    sx += xi;
    sy += yi;
    sxx += xi * xi;
    sxy += xi * yi;
  }
  const double cnt = static_cast<double>(best_len);
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  const double mu = std::exp(slope);
  fit.points_used = static_cast<int>(best_len) + 1;
  if (!(mu < 1.0)) {
    fit.no_decay = true;
    fit.mu_empirical = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  fit.mu_empirical = mu;
  const std::size_t last = best_start + best_len - 1;
  fit.plateau = errors[last + 1] - d[last] * mu / (1.0 - mu);
  return fit;
}

DecayFit fit_error_decay(const SolveReport& report, const Vector& x_star) {
  std::vector<double> errors;
  errors.reserve(report.iterates.size());
  for (const IrlsState& s : report.iterates) {
    if (s.x.size() != x_star.size()) raise(ErrorCode::DimensionMismatch, "x_star size differs from iterates");
    errors.push_back((s.x - x_star).squaredNorm());
  }
  return fit_error_decay(errors);
}

bool verify_feps_characterization(const ResidualMap& map, const Vector& y, const Vector& z,
                                  double eps, double p, const std::vector<Vector>& challengers) {
  if (!(eps > 0.0)) raise(ErrorCode::NonPositiveEps, "eps must be positive");
  const Vector rz = residual(map, z, y);
  const Weights w = optimal_weights(rz, eps, p);
  const double wz = weighted_sq_norm(rz, w);
  const double fz = f_eps_from_residual(rz, eps, p);
  for (const Vector& c : challengers) {
    const Vector rc = residual(map, c, y);
    if (weighted_sq_norm(rc, w) >= wz && fz > f_eps_from_residual(rc, eps, p) + 1e-10) return false;
  }
  return true;
}

Matrix weighted_gram(const Matrix& a, const Weights& w) {
  if (a.rows() != w.size()) raise(ErrorCode::DimensionMismatch, "one weight per row expected");
  return a.transpose() * w.values().asDiagonal() * a;
}

}  // namespace nlirls
