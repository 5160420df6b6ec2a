// Copyright 2026 The dxgate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DXGATE_RNG_HPP
#define DXGATE_RNG_HPP

#include <array>
#include <cstdint>

namespace dxgate {

// xoshiro256++ with splitmix64 seeding and hand-rolled samplers.
// Results are reproducible for a given seed regardless of platform,
// standard library, or thread count; keyed substreams make parallel
// per-position/per-trial sampling order-independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Derives a decorrelated seed for a named substream.
  static std::uint64_t mix_key(std::uint64_t seed, std::uint64_t key);

  static Rng keyed(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix_key(seed, stream));
  }
  static Rng keyed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return Rng(mix_key(mix_key(seed, a), b));
  }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_unit();
  // Uniform on (0, 1); safe as a log() argument.
  double next_open_unit();
  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound);

  // Standard normal via the Marsaglia polar method (one spare cached).
  double next_normal();
  // Gamma(shape, scale) via Marsaglia-Tsang; shape may be any positive real.
  double next_gamma(double shape, double scale);

 private:
  std::array<std::uint64_t, 4> state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace dxgate

#endif  // DXGATE_RNG_HPP
