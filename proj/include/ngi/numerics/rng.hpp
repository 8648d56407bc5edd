// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace ngi {

/// Counter-based generator (Philox-4x32-10). The k-th draw of a
/// (seed, stream) pair depends only on (seed, stream, k), so per-pixel or
/// per-parameter streams give results independent of thread scheduling.
class Rng {
 public:
  Rng() = default;
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
      : seed_(seed), stream_(stream), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  /// 64 random bits; advances the counter by one.
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 24 bits of resolution.
  float uniform_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Independent generator for a sub-stream, e.g. one per pixel.
  Rng split(std::uint64_t sub_stream) const;

  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  // Each Philox block yields two draws; the cache only avoids recomputation.
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  std::array<std::uint32_t, 4> cache_{};
};

/// Stateless 64-bit mixer used to derive seeds for sub-tasks.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace ngi
