// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace dpcluster {

namespace detail {

// SplitMix64 finalizer; used only to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seeded stream of uniform variates. Not thread safe; derive a substream per
/// worker before fanning out.
///
/// Satisfies UniformRandomBitGenerator so it can drive std distributions.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(detail::mix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent stream number `index` derived from this source's seed. Does
  /// not consume from this stream.
  RandomSource substream(std::uint64_t index) const {
    return RandomSource(detail::mix64(seed_ ^ detail::mix64(index + 0x5851f42d4c957f2dULL)));
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53; }

  /// Uniform integer in [0, n). `n` must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dpcluster
