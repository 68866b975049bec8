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

#include "lossguard/rng.h"

#include <cmath>
#include <numbers>

#include "lossguard/error.h"

namespace lossguard {

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) h = Mix64(h ^ Mix64(w));
  return h;
}

double Rng::Uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::UniformOpen(double lo, double hi) {
  // Midpoints of the 2^53 grid cells never touch either end.
  const double u =
      (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::uint64_t Rng::UniformIndex(std::uint64_t n) {
  Require(n > 0, "UniformIndex: n must be positive");
  // Rejection keeps the draw unbiased for any n.
  const std::uint64_t limit = -n % n;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x >= limit) return x % n;
  }
}

double Rng::Normal() {
  const double u1 = UniformOpen(0.0, 1.0);
  const double u2 = Uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace lossguard
