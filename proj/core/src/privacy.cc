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

#include "lossguard/privacy.h"

#include <cmath>

#include "lossguard/error.h"

namespace lossguard {

LdpConfig::LdpConfig(double epsilon, double sensitivity)
    : epsilon_(epsilon), sensitivity_(sensitivity) {
  Require(epsilon > 0.0 && std::isfinite(epsilon),
          "LdpConfig: epsilon must be positive");
  Require(sensitivity > 0.0 && std::isfinite(sensitivity),
          "LdpConfig: sensitivity must be positive");
}

double LaplaceScale(const LdpConfig& config) {
  return config.sensitivity() / config.epsilon();
}

double LaplaceFromUniform(double b, double u) {
  if (u == 0.0) return 0.0;
  const double sign = u > 0.0 ? 1.0 : -1.0;
  return -b * sign * std::log1p(-2.0 * std::fabs(u));
}

double LaplaceSample(double b, Rng& rng) {
  Require(b > 0.0, "LaplaceSample: scale must be positive");
  return LaplaceFromUniform(b, rng.UniformOpen(-0.5, 0.5));
}

double PerturbLoss(double loss, const LdpConfig& config, Rng& rng) {
  Require(std::isfinite(loss), "PerturbLoss: loss must be finite");
  return loss + LaplaceSample(LaplaceScale(config), rng);
}

}  // namespace lossguard
