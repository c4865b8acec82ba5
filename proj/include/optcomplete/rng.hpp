#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "optcomplete/types.hpp"

namespace optcomplete {

/// Deterministic counter-style generator. Streams are keyed by up to three
/// 64-bit words (seed, iteration, row), so any sampled object can be
/// regenerated independently of draw order. Same keys -> same sequence on
/// every platform; std::random distributions are deliberately avoided.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t key0, std::uint64_t key1 = 0,
                      std::uint64_t key2 = 0)
      : state_(mix(mix(mix(0x9E3779B97F4A7C15ull ^ key0) ^ key1) ^ key2)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  /// Uniform in [0, bound); bound >= 1. Rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (cosine branch only; u1 in (0,1]).
  double next_normal() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

/// Uniform sample of `count` distinct values from [0, universe), ascending.
/// Floyd's algorithm: O(count) draws regardless of universe size.
inline std::vector<Index> sample_without_replacement(SplitMix64& rng,
                                                     Index universe,
                                                     Index count) {
  if (count < 0 || count > universe)
    throw std::invalid_argument("sample_without_replacement: count out of range");
  if (count == universe) {
    std::vector<Index> all(static_cast<std::size_t>(universe));
    for (Index v = 0; v < universe; ++v) all[static_cast<std::size_t>(v)] = v;
    return all;
  }
  std::unordered_set<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(count) * 2);
  for (Index j = universe - count; j < universe; ++j) {
    const Index t = static_cast<Index>(
        rng.next_below(static_cast<std::uint64_t>(j) + 1));
    chosen.insert(chosen.count(t) ? j : t);
  }
  std::vector<Index> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Uniform random permutation of [0, size) by Fisher-Yates.
inline std::vector<Index> random_permutation(SplitMix64& rng, Index size) {
  std::vector<Index> perm(static_cast<std::size_t>(size));
  for (Index v = 0; v < size; ++v) perm[static_cast<std::size_t>(v)] = v;
  for (Index i = size - 1; i > 0; --i) {
    const Index j = static_cast<Index>(
        rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

/// Stream tags keep independent random uses from colliding on one seed.
namespace stream {
inline constexpr std::uint64_t factor_u = 0x55aa01;
inline constexpr std::uint64_t factor_v = 0x55aa02;
inline constexpr std::uint64_t extra_z = 0x55aa03;
inline constexpr std::uint64_t noise = 0x55aa04;
inline constexpr std::uint64_t mask = 0x55aa05;
inline constexpr std::uint64_t shuffle = 0x55aa06;
inline constexpr std::uint64_t split = 0x55aa07;
inline constexpr std::uint64_t warm_start = 0x55aa08;
inline constexpr std::uint64_t plan_rows = 0x55aa09;
inline constexpr std::uint64_t plan_cols = 0x55aa0a;
}  // namespace stream

}  // namespace optcomplete
