// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace mvbind {

/// SplitMix64 step; used to expand a 64-bit seed into generator state.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent child seed for a named consumer, so one user seed
/// can feed many subsystems without their streams overlapping.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// xoshiro256** generator. All randomness in the engine flows through this
/// type so that runs are bit-reproducible across standard libraries (the
/// std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform double in [0, 1) with 53 bits of randomness.
  double uniform();

  /// Uniform integer in [0, bound) without modulo bias. bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller; caches the second variate.
  double normal();

  bool operator==(const Rng& other) const = default;

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mvbind
