// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace mvvt {

/// Counter-based random stream. Every draw is a pure function of
/// (seed, counter), so a stream replays identically regardless of how the
/// surrounding code is scheduled, and substreams can be forked without
/// sharing state.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(uint64_t seed) : seed_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() {
    uint64_t z = seed_ + counter_ * 0x9e3779b97f4a7c15ull;
    ++counter_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_uniform();
  }

  /// Standard normal via Box-Muller.
  double next_normal();

  /// Normal(0, std) truncated to [-trunc*std, +trunc*std] by rejection.
  double next_trunc_normal(double std, double trunc);

  /// Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

  /// Derives an independent substream; the parent stream is not advanced.
  RngStream fork(uint64_t stream_id) const;

  /// Stable 64-bit mix of several ids, for deriving seeds from keys.
  static uint64_t mix(uint64_t a, uint64_t b);

 private:
  uint64_t seed_ = 0;
  uint64_t counter_ = 0;
};

/// FNV-1a over a byte string; used to fold names into seed derivations.
uint64_t hash_str(const char* s);

}  // namespace mvvt
