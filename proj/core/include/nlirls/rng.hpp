#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

#include "nlirls/model.hpp"

namespace nlirls {

/// SplitMix64: a counter-based 64-bit generator. The n-th output is a fixed
/// bijective mix of (seed + n * golden_gamma), so streams are reproducible
/// from the seed alone and independent streams are obtained by hashing a
/// stream id into the seed (see derive_seed).
///
/// Gaussian and uniform draws are implemented here rather than through
/// <random> distributions so that generated instances do not depend on the
/// standard library vendor.
class Rng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::string_view kName = "splitmix64";

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;
  bool bernoulli(double probability) noexcept;

  Vector normal_vector(Index n);
  /// Uniformly distributed point in the closed Euclidean ball of given radius.
  Vector point_in_ball(Index n, double radius);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Finalizer of SplitMix64; a good 64-bit avalanche hash.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Seed of an independent stream derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// FNV-1a over bytes, finalized with mix64.
std::uint64_t hash_string(std::string_view text) noexcept;

}  // namespace nlirls
