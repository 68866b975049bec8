// Copyright 2026 The lossguard Authors
// SPDX-License-Identifier: Apache-2.0
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

#ifndef LOSSGUARD_RNG_H_
#define LOSSGUARD_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace lossguard {

// SplitMix64 finalizer; used to turn structured stream ids into seeds.
std::uint64_t Mix64(std::uint64_t x);

// Folds a sequence of words into one seed. Distinct sequences give
// independent-looking streams, so (seed, repeat, epoch, client) can name a
// stream without any shared generator state.
std::uint64_t DeriveSeed(std::initializer_list<std::uint64_t> words);

// Seeded random source with platform-independent output. The standard
// distributions are implementation-defined, so every draw here is built
// directly on the raw 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform01();

  // Uniform in the open interval (lo, hi), lo < hi.
  double UniformOpen(double lo, double hi);

  // Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t UniformIndex(std::uint64_t n);

  // Standard normal via Box-Muller (one value per call, no caching).
  double Normal();

  // Fisher-Yates shuffle of `items`.
  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(UniformIndex(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lossguard

#endif  // LOSSGUARD_RNG_H_
