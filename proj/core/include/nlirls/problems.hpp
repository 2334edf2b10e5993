#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlirls/model.hpp"

namespace nlirls {

/// A : R -> R^2, x -> (x, x^2).
class Simple1DMap final : public ResidualMap {
 public:
  Simple1DMap();
  Vector eval(const Vector& x) const override;
  bool has_jacobian() const noexcept override { return true; }
  Matrix jacobian(const Vector& x) const override;
};

/// A(x) = M x.
class LinearMap final : public ResidualMap {
 public:
  explicit LinearMap(Matrix m);
  const Matrix& matrix() const noexcept { return m_; }
  Vector eval(const Vector& x) const override;
  bool has_jacobian() const noexcept override { return true; }
  Matrix jacobian(const Vector& x) const override;

 private:
  Matrix m_;
};

/// A(z) = A1 z + rho ||z - z_ref||^2 A2 z with A2 the all-ones m x N matrix.
class PerturbedRipMap final : public ResidualMap {
 public:
  PerturbedRipMap(Matrix a1, double rho, Vector z_ref);
  const Matrix& a1() const noexcept { return a1_; }
  double rho() const noexcept { return rho_; }
  const Vector& z_ref() const noexcept { return z_ref_; }
  Vector eval(const Vector& z) const override;
  bool has_jacobian() const noexcept override { return true; }
  Matrix jacobian(const Vector& z) const override;

 private:
  Matrix a1_;
  double rho_;
  Vector z_ref_;
};

/// A(x)_i = <a_i, x>^2 with a_i the rows of the measurement matrix.
class PhaseRetrievalMap final : public ResidualMap {
 public:
  explicit PhaseRetrievalMap(Matrix rows);
  const Matrix& measurements() const noexcept { return a_; }
  Vector eval(const Vector& x) const override;
  bool has_jacobian() const noexcept override { return true; }
  Matrix jacobian(const Vector& x) const override;

 private:
  Matrix a_;
};

/// Parent map on R^N seen through the zero padding of x in R^k onto a support.
class RestrictedMap final : public ResidualMap {
 public:
  RestrictedMap(MapPtr parent, std::vector<Index> support);
  const std::vector<Index>& support() const noexcept { return support_; }
  Vector pad(const Vector& x) const;
  Vector eval(const Vector& x) const override;
  bool has_jacobian() const noexcept override { return parent_->has_jacobian(); }
  Matrix jacobian(const Vector& x) const override;

 private:
  MapPtr parent_;
  std::vector<Index> support_;
};

MapPtr make_simple_1d();
MapPtr make_linear(Matrix m);
/// A1 has i.i.d. N(0, 1/m) entries drawn from the seed. Requires m <= N.
MapPtr make_perturbed_rip(Index n, Index m, double rho, const Vector& z_ref, std::uint64_t seed);
/// Measurement vectors with i.i.d. standard normal entries.
MapPtr make_phase_retrieval(Index n, Index m, std::uint64_t seed);
MapPtr restrict_to_support(MapPtr parent, const std::vector<Index>& support);

struct DecaySparseSpec {
  Index n = 1;
  Index k = 1;
  double kappa = 1.0;
  double norm = 1.0;

  void validate() const;
};

struct SparseVector {
  Vector x;
  std::vector<Index> support;  ///< ascending
};

/// Support uniform without replacement, magnitudes kappa^(j-1), random signs,
/// rescaled to the target l2 norm.
SparseVector make_sparse_vector(const DecaySparseSpec& spec, std::uint64_t seed);

struct NoiseSpec {
  double alpha_p = 0.0;
  double amplitude_std = 1.0;
  bool scale_to_measurement_norm = true;

  void validate() const;
};

/// y + b .* g with b_i ~ Bernoulli(alpha_p), g_i ~ N(0, amplitude_std^2). The
/// noise vector is rescaled to l2 norm ||y|| when requested (and nonzero).
Vector add_bernoulli_gaussian_noise(const Vector& y, const NoiseSpec& spec, std::uint64_t seed);

enum class Family { Simple1D, PerturbedRip, PhaseRetrieval };

std::string_view to_string(Family f) noexcept;
std::optional<Family> family_from_string(std::string_view name) noexcept;

struct InstanceParams {
  Index n = 20;
  Index m = 12;
  Index k = 1;
  double kappa = 1.0;
  /// Target ||x_star||; when unset 0.015 for PerturbedRip and 1 for PhaseRetrieval.
  std::optional<double> norm;
  double rho = 0.0;
  /// Data of the 1-D family.
  Vector y_1d = (Vector(2) << 0.0, 0.9).finished();
};

struct ProblemInstance {
  /// Unset for instances not produced by make_instance (e.g. a hand-written linear problem).
  std::optional<Family> family;
  MapPtr map;
  Vector y;
  /// Ground truth on the ambient space; empty for the 1-D family.
  Vector x_star;
  std::vector<Index> support;
  std::uint64_t seed = 0;
  bool noiseless = true;
  std::map<std::string, std::string> meta;

  /// map restricted to support (the map itself when support is empty).
  MapPtr restricted_map() const;
  /// x_star on the support.
  Vector restricted_x_star() const;
};

ProblemInstance make_instance(Family family, const InstanceParams& params,
                              const std::optional<NoiseSpec>& noise, std::uint64_t seed);

}  // namespace nlirls
