// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/rng.hpp"

#include <cmath>
#include <numbers>

namespace mvvt {

double RngStream::next_normal() {
  // Box-Muller; u1 is kept away from zero so log() stays finite.
  double u1 = next_uniform();
  double u2 = next_uniform();
  if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::next_trunc_normal(double std, double trunc) {
  for (;;) {
    double z = next_normal();
    if (z >= -trunc && z <= trunc) return z * std;
  }
}

RngStream RngStream::fork(uint64_t stream_id) const {
  return RngStream(mix(seed_, stream_id));
}

uint64_t RngStream::mix(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t hash_str(const char* s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (; *s; ++s) {
    h ^= static_cast<unsigned char>(*s);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace mvvt
