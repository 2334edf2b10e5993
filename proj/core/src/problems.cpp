#include "nlirls/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "nlirls/rng.hpp"

namespace nlirls {

namespace {

// Independent streams carved out of one instance seed.
constexpr std::uint64_t kStreamMap = 1;
constexpr std::uint64_t kStreamSignal = 2;
constexpr std::uint64_t kStreamNoise = 3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix gaussian_matrix(Index rows, Index cols, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Matrix a(rows, cols);
  // Row-major fill so the draw order matches the serialized layout.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = scale * rng.normal();
  return a;
}

const MapPtr& non_null(const MapPtr& parent) {
  if (!parent) raise(ErrorCode::InvalidConfig, "null parent map");
  return parent;
}

}  // namespace

Simple1DMap::Simple1DMap() : ResidualMap(1, 2) {}

Vector Simple1DMap::eval(const Vector& x) const {
  check_input(x);
  return (Vector(2) << x[0], x[0] * x[0]).finished();
}

Matrix Simple1DMap::jacobian(const Vector& x) const {
  check_input(x);
  return (Matrix(2, 1) << 1.0, 2.0 * x[0]).finished();
}

LinearMap::LinearMap(Matrix m) : ResidualMap(m.cols(), m.rows()), m_(std::move(m)) {}

Vector LinearMap::eval(const Vector& x) const {
  check_input(x);
  return m_ * x;
}

Matrix LinearMap::jacobian(const Vector& x) const {
  check_input(x);
  return m_;
}

PerturbedRipMap::PerturbedRipMap(Matrix a1, double rho, Vector z_ref)
    : ResidualMap(a1.cols(), a1.rows()), a1_(std::move(a1)), rho_(rho), z_ref_(std::move(z_ref)) {
  if (z_ref_.size() != a1_.cols()) raise(ErrorCode::DimensionMismatch, "z_ref size must equal N");
  if (!(rho_ >= 0.0)) raise(ErrorCode::InvalidConfig, "rho must be nonnegative");
}

Vector PerturbedRipMap::eval(const Vector& z) const {
  check_input(z);
  Vector out = a1_ * z;
  if (rho_ != 0.0) out.array() += rho_ * (z - z_ref_).squaredNorm() * z.sum();
  return out;
}

Matrix PerturbedRipMap::jacobian(const Vector& z) const {
  check_input(z);
  Matrix jac = a1_;
  if (rho_ != 0.0) {
    // d/dz [ s(z) * sum(z) ] = s(z) 1^T + sum(z) * 2 (z - z_ref)^T, same for every row.
    const double s = (z - z_ref_).squaredNorm();
    const Eigen::RowVectorXd row =
        Eigen::RowVectorXd::Constant(z.size(), s) + 2.0 * z.sum() * (z - z_ref_).transpose();
    jac.rowwise() += rho_ * row;
  }
  return jac;
}

PhaseRetrievalMap::PhaseRetrievalMap(Matrix rows)
    : ResidualMap(rows.cols(), rows.rows()), a_(std::move(rows)) {}

Vector PhaseRetrievalMap::eval(const Vector& x) const {
  check_input(x);
  return (a_ * x).array().square().matrix();
}

Matrix PhaseRetrievalMap::jacobian(const Vector& x) const {
  check_input(x);
  const Vector ax = a_ * x;
  return (2.0 * ax).asDiagonal() * a_;
}

RestrictedMap::RestrictedMap(MapPtr parent, std::vector<Index> support)
    : ResidualMap(static_cast<Index>(support.size()), non_null(parent)->dim_out()),
      parent_(std::move(parent)),
      support_(std::move(support)) {
  std::vector<Index> sorted = support_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= parent_->dim_in()) {
      raise(ErrorCode::IndexOutOfRange, "support index " + std::to_string(sorted[i]) +
                                            " outside [0, " + std::to_string(parent_->dim_in()) + ")");
    }
    if (i > 0 && sorted[i] == sorted[i - 1]) {
      raise(ErrorCode::IndexOutOfRange, "duplicate support index " + std::to_string(sorted[i]));
    }
  }
}

Vector RestrictedMap::pad(const Vector& x) const {
  check_input(x);
  Vector z = Vector::Zero(parent_->dim_in());
  for (std::size_t i = 0; i < support_.size(); ++i) z[support_[i]] = x[static_cast<Index>(i)];
  return z;
}

Vector RestrictedMap::eval(const Vector& x) const { return parent_->eval(pad(x)); }

Matrix RestrictedMap::jacobian(const Vector& x) const {
  const Matrix full = parent_->jacobian(pad(x));
  Matrix out(full.rows(), dim_in());
  for (std::size_t i = 0; i < support_.size(); ++i) out.col(static_cast<Index>(i)) = full.col(support_[i]);
  return out;
}

MapPtr make_simple_1d() { return std::make_shared<Simple1DMap>(); }

MapPtr make_linear(Matrix m) { return std::make_shared<LinearMap>(std::move(m)); }

MapPtr make_perturbed_rip(Index n, Index m, double rho, const Vector& z_ref, std::uint64_t seed) {
  if (n < 1 || m < 1 || m > n) {
    raise(ErrorCode::InvalidDims, "perturbed RIP map needs 1 <= m <= N, got N=" + std::to_string(n) +
                                      ", m=" + std::to_string(m));
  }
  return std::make_shared<PerturbedRipMap>(
      gaussian_matrix(m, n, 1.0 / std::sqrt(static_cast<double>(m)), seed), rho, z_ref);
}

MapPtr make_phase_retrieval(Index n, Index m, std::uint64_t seed) {
  if (n < 1 || m < 1) raise(ErrorCode::InvalidDims, "phase retrieval needs N, m >= 1");
  return std::make_shared<PhaseRetrievalMap>(gaussian_matrix(m, n, 1.0, seed));
}

MapPtr restrict_to_support(MapPtr parent, const std::vector<Index>& support) {
  return std::make_shared<RestrictedMap>(std::move(parent), support);
}

void DecaySparseSpec::validate() const {
  if (n < 1 || k < 1 || k > n) raise(ErrorCode::InvalidDims, "sparse spec needs 1 <= k <= N");
  if (!(kappa > 0.0 && kappa <= 1.0)) raise(ErrorCode::InvalidConfig, "kappa must lie in (0, 1]");
  if (!(norm > 0.0)) raise(ErrorCode::InvalidConfig, "target norm must be positive");
}

SparseVector make_sparse_vector(const DecaySparseSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  // Partial Fisher-Yates: the first k entries are a uniform k-subset in draw order.
  std::vector<Index> perm(static_cast<std::size_t>(spec.n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index j = 0; j < spec.k; ++j) {
    const auto pick = j + static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.n - j)));
    std::swap(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(pick)]);
  }
  SparseVector out;
  out.x = Vector::Zero(spec.n);
  double mag = 1.0;
  for (Index j = 0; j < spec.k; ++j, mag *= spec.kappa) {
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    out.x[perm[static_cast<std::size_t>(j)]] = sign * mag;
  }
  out.x *= spec.norm / out.x.norm();
  out.support.assign(perm.begin(), perm.begin() + spec.k);
  std::sort(out.support.begin(), out.support.end());
  return out;
}

void NoiseSpec::validate() const {
  if (!(alpha_p >= 0.0 && alpha_p <= 1.0)) raise(ErrorCode::InvalidConfig, "alpha_p must lie in [0, 1]");
  if (!(amplitude_std > 0.0)) raise(ErrorCode::InvalidConfig, "amplitude_std must be positive");
}

Vector add_bernoulli_gaussian_noise(const Vector& y, const NoiseSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Vector noise(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    // Always draw both variates so the stream layout does not depend on alpha_p.
    const bool hit = rng.bernoulli(spec.alpha_p);
    const double g = spec.amplitude_std * rng.normal();
    noise[i] = hit ? g : 0.0;
  }
  if (spec.scale_to_measurement_norm) {
    const double nn = noise.norm();
    if (nn > 0.0) noise *= y.norm() / nn;
  }
  return y + noise;
}

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Simple1D: return "Simple1D";
    case Family::PerturbedRip: return "PerturbedRip";
    case Family::PhaseRetrieval: return "PhaseRetrieval";
  }
  return "unknown";
}

std::optional<Family> family_from_string(std::string_view name) noexcept {
  if (name == "Simple1D") return Family::Simple1D;
  if (name == "PerturbedRip") return Family::PerturbedRip;
  if (name == "PhaseRetrieval") return Family::PhaseRetrieval;
  return std::nullopt;
}

MapPtr ProblemInstance::restricted_map() const {
  if (support.empty()) return map;
  return restrict_to_support(map, support);
}

Vector ProblemInstance::restricted_x_star() const {
  if (support.empty()) return x_star;
  Vector out(static_cast<Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) out[static_cast<Index>(i)] = x_star[support[i]];
  return out;
}

ProblemInstance make_instance(Family family, const InstanceParams& params,
                              const std::optional<NoiseSpec>& noise, std::uint64_t seed) {
  ProblemInstance inst;
  inst.family = family;
  inst.seed = seed;
  inst.meta["family"] = std::string(to_string(family));
  inst.meta["rng"] = std::string(Rng::kName);

  if (family == Family::Simple1D) {
    if (params.y_1d.size() != 2) raise(ErrorCode::DimensionMismatch, "1-D data must have size 2");
    inst.map = make_simple_1d();
    inst.y = params.y_1d;
    inst.noiseless = false;  // no ground truth
    inst.meta["k"] = "1";
    inst.meta["m"] = "2";
  } else {
    const double norm = params.norm.value_or(family == Family::PerturbedRip ? 0.015 : 1.0);
    const SparseVector sv =
        make_sparse_vector({params.n, params.k, params.kappa, norm}, derive_seed(seed, kStreamSignal));
    inst.x_star = sv.x;
    inst.support = sv.support;
    if (family == Family::PerturbedRip) {
      inst.map = make_perturbed_rip(params.n, params.m, params.rho, inst.x_star,
                                    derive_seed(seed, kStreamMap));
      inst.meta["rho"] = fmt(params.rho);
    } else {
      inst.map = make_phase_retrieval(params.n, params.m, derive_seed(seed, kStreamMap));
    }
    inst.y = inst.map->eval(inst.x_star);
    inst.meta["N"] = std::to_string(params.n);
    inst.meta["m"] = std::to_string(params.m);
    inst.meta["k"] = std::to_string(params.k);
    inst.meta["kappa"] = fmt(params.kappa);
    inst.meta["norm"] = fmt(norm);
  }

  if (noise) {
    inst.y = add_bernoulli_gaussian_noise(inst.y, *noise, derive_seed(seed, kStreamNoise));
    inst.noiseless = inst.noiseless && noise->alpha_p == 0.0;
    inst.meta["alpha_p"] = fmt(noise->alpha_p);
    inst.meta["noise_scaling"] = noise->scale_to_measurement_norm ? "whole_vector_l2" : "none";
  }
  inst.meta["noiseless"] = inst.noiseless ? "true" : "false";
  return inst;
}

}  // namespace nlirls
