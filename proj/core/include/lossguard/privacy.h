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

#ifndef LOSSGUARD_PRIVACY_H_
#define LOSSGUARD_PRIVACY_H_

#include "lossguard/rng.h"

namespace lossguard {

// Pure epsilon-DP Laplace mechanism parameters (delta is always zero).
class LdpConfig {
 public:
  // Throws ContractViolation unless epsilon > 0 and sensitivity > 0.
  LdpConfig(double epsilon, double sensitivity);

  // epsilon = 1, sensitivity = 1e-4.
  static LdpConfig Default() { return LdpConfig(1.0, 1e-4); }

  double epsilon() const { return epsilon_; }
  double sensitivity() const { return sensitivity_; }
  double delta() const { return 0.0; }

 private:
  double epsilon_;
  double sensitivity_;
};

// b = sensitivity / epsilon.
double LaplaceScale(const LdpConfig& config);

// Inverse CDF of Laplace(0, b) at u - 1/2, for u in (-1/2, 1/2):
// -b * sign(u) * ln(1 - 2|u|).
double LaplaceFromUniform(double b, double u);

// One Laplace(0, b) draw from the rng stream.
double LaplaceSample(double b, Rng& rng);

// loss + Laplace noise. The result is not clamped and may be negative.
double PerturbLoss(double loss, const LdpConfig& config, Rng& rng);

}  // namespace lossguard

#endif  // LOSSGUARD_PRIVACY_H_
