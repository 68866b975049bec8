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

#ifndef LOSSGUARD_DEFENSE_H_
#define LOSSGUARD_DEFENSE_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lossguard {

// What the server sees from one client in one round.
struct LossReport {
  std::size_t client_id = 0;
  double noisy_loss = 0.0;
};

// Result of an eliminator. Both id lists are sorted ascending and together
// partition the round's clients. `retained` is never empty.
struct EliminationOutcome {
  std::vector<std::size_t> eliminated;
  std::vector<std::size_t> retained;
  std::map<std::string, double> diagnostics;
};

enum class DefenseKind { kNone, kFixedFraction, kLargestGap, kZScore, kKMeans };

std::string_view DefenseKindName(DefenseKind kind);
std::optional<DefenseKind> ParseDefenseKind(std::string_view name);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::kNone;
  double fixed_fraction = 0.2;
  double zscore_threshold = 1.0;
  // Only flag reports above the mean instead of using |z|.
  bool zscore_one_sided = false;
  double kmeans_guard = 1.0;
  std::size_t kmeans_max_iters = 100;
};

// Validates ranges; throws ContractViolation.
void ValidateDefenseConfig(const DefenseConfig& config);

// Drops the round(fraction * n) highest reports (round half up). Equal losses
// eliminate the lower client id first.
EliminationOutcome EliminateFixedFraction(std::span<const LossReport> reports,
                                          double fraction);

// Sorts the losses, finds the widest consecutive gap (the highest one on
// ties) and drops everything above it. Fewer than two reports retains all
// and sets diagnostics["insufficient_reports"].
EliminationOutcome EliminateLargestGap(std::span<const LossReport> reports);

// Drops reports whose population z-score exceeds the threshold in absolute
// value (or, one-sided, from above). Nothing is dropped when sigma < 1e-12,
// and a z-score within 1e-9 of the threshold counts as not exceeding it.
EliminationOutcome EliminateZScore(std::span<const LossReport> reports,
                                   double threshold, bool one_sided = false);

// Two-cluster Lloyd iteration on the losses, seeded at (min, max). The high
// cluster is dropped only when the centroid gap exceeds
// guard * max(pooled within-cluster sd, 1e-12).
EliminationOutcome EliminateKMeans(std::span<const LossReport> reports,
                                   double guard = 1.0,
                                   std::size_t max_iters = 100);

// Dispatches on config.kind. kNone retains everyone.
EliminationOutcome Eliminate(std::span<const LossReport> reports,
                             const DefenseConfig& config);

// Attacker detection quality; "malicious" is the positive class and
// "eliminated" the positive prediction.
struct DetectionScore {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

DetectionScore ScoreDetection(const EliminationOutcome& outcome,
                              std::span<const std::size_t> malicious_ids);

}  // namespace lossguard

#endif  // LOSSGUARD_DEFENSE_H_
