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

#include "lossguard/defense.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "lossguard/error.h"

namespace lossguard {
namespace {

constexpr double kSigmaFloor = 1e-12;

// A z-score must clear the threshold by this much to count. Some inputs sit
// exactly on it (two reports always give |z| = 1), and without the margin
// rounding noise would decide them.
constexpr double kZMargin = 1e-9;

void CheckReports(std::span<const LossReport> reports, const char* who) {
  Require(!reports.empty(), std::string(who) + ": no reports");
  std::set<std::size_t> seen;
  for (const auto& r : reports) {
    Require(std::isfinite(r.noisy_loss),
            std::string(who) + ": non-finite loss from client " +
                std::to_string(r.client_id));
    Require(seen.insert(r.client_id).second,
            std::string(who) + ": duplicate client id " +
                std::to_string(r.client_id));
  }
}

// Ascending by loss, then by client id.
std::vector<LossReport> SortedAscending(std::span<const LossReport> reports) {
  std::vector<LossReport> sorted(reports.begin(), reports.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.noisy_loss != b.noisy_loss) return a.noisy_loss < b.noisy_loss;
    return a.client_id < b.client_id;
  });
  return sorted;
}

// Builds the outcome from a per-report elimination mask and enforces the
// nonempty-retained rule.
EliminationOutcome MakeOutcome(std::span<const LossReport> reports,
                               std::vector<bool> eliminate,
                               std::map<std::string, double> diagnostics) {
  if (std::all_of(eliminate.begin(), eliminate.end(), [](bool e) { return e; })) {
    // Keep the lowest-loss client (lowest id on ties).
    std::size_t keep = 0;
    for (std::size_t i = 1; i < reports.size(); ++i) {
      const auto& a = reports[i];
      const auto& b = reports[keep];
      if (a.noisy_loss < b.noisy_loss ||
          (a.noisy_loss == b.noisy_loss && a.client_id < b.client_id)) {
        keep = i;
      }
    }
    eliminate[keep] = false;
    diagnostics["retained_fallback"] = 1.0;
  }
  EliminationOutcome out;
  out.diagnostics = std::move(diagnostics);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    (eliminate[i] ? out.eliminated : out.retained).push_back(reports[i].client_id);
  }
  std::sort(out.eliminated.begin(), out.eliminated.end());
  std::sort(out.retained.begin(), out.retained.end());
  return out;
}

EliminationOutcome RetainAll(std::span<const LossReport> reports,
                             std::map<std::string, double> diagnostics = {}) {
  return MakeOutcome(reports, std::vector<bool>(reports.size(), false),
                     std::move(diagnostics));
}

// Eliminates every report whose loss is strictly greater than `cut`.
EliminationOutcome EliminateAbove(std::span<const LossReport> reports,
                                  double cut,
                                  std::map<std::string, double> diagnostics) {
  std::vector<bool> mask(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    mask[i] = reports[i].noisy_loss > cut;
  }
  return MakeOutcome(reports, std::move(mask), std::move(diagnostics));
}

}  // namespace

std::string_view DefenseKindName(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::kNone:
      return "none";
    case DefenseKind::kFixedFraction:
      return "fixed_fraction";
    case DefenseKind::kLargestGap:
      return "largest_gap";
    case DefenseKind::kZScore:
      return "zscore";
    case DefenseKind::kKMeans:
      return "kmeans";
  }
  return "none";
}

std::optional<DefenseKind> ParseDefenseKind(std::string_view name) {
  for (auto kind : {DefenseKind::kNone, DefenseKind::kFixedFraction,
                    DefenseKind::kLargestGap, DefenseKind::kZScore,
                    DefenseKind::kKMeans}) {
    if (DefenseKindName(kind) == name) return kind;
  }
  return std::nullopt;
}

void ValidateDefenseConfig(const DefenseConfig& config) {
  Require(config.fixed_fraction >= 0.0 && config.fixed_fraction < 1.0,
          "defense: fixed_fraction must lie in [0, 1)");
  Require(config.zscore_threshold > 0.0 && std::isfinite(config.zscore_threshold),
          "defense: zscore_threshold must be positive");
  Require(config.kmeans_guard >= 0.0 && std::isfinite(config.kmeans_guard),
          "defense: kmeans_guard must be non-negative");
  Require(config.kmeans_max_iters > 0, "defense: kmeans_max_iters must be positive");
}

EliminationOutcome EliminateFixedFraction(std::span<const LossReport> reports,
                                          double fraction) {
  CheckReports(reports, "EliminateFixedFraction");
  Require(fraction >= 0.0 && fraction < 1.0,
          "EliminateFixedFraction: fraction must lie in [0, 1)");
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(reports.size()) + 0.5));

  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (reports[a].noisy_loss != reports[b].noisy_loss) {
      return reports[a].noisy_loss > reports[b].noisy_loss;
    }
    return reports[a].client_id < reports[b].client_id;
  });
  std::vector<bool> mask(reports.size(), false);
  for (std::size_t i = 0; i < count; ++i) mask[order[i]] = true;
  return MakeOutcome(reports, std::move(mask),
                     {{"eliminate_count", static_cast<double>(count)}});
}

EliminationOutcome EliminateLargestGap(std::span<const LossReport> reports) {
  CheckReports(reports, "EliminateLargestGap");
  if (reports.size() < 2) return RetainAll(reports, {{"insufficient_reports", 1.0}});

  const auto sorted = SortedAscending(reports);
  double best_gap = -1.0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double gap = sorted[i + 1].noisy_loss - sorted[i].noisy_loss;
    if (gap >= best_gap) {  // >= so the highest index wins ties
      best_gap = gap;
      best_index = i;
    }
  }
  if (best_gap <= 0.0) return RetainAll(reports, {{"max_gap", 0.0}});
  return EliminateAbove(reports, sorted[best_index].noisy_loss,
                        {{"max_gap", best_gap},
                         {"cut_loss", sorted[best_index].noisy_loss}});
}

EliminationOutcome EliminateZScore(std::span<const LossReport> reports,
                                   double threshold, bool one_sided) {
  CheckReports(reports, "EliminateZScore");
  Require(threshold > 0.0, "EliminateZScore: threshold must be positive");
  if (reports.size() < 2) return RetainAll(reports, {{"insufficient_reports", 1.0}});

  // Summing in sorted order makes the statistics independent of input order.
  const auto sorted = SortedAscending(reports);
  const double n = static_cast<double>(sorted.size());
  double sum = 0.0;
  for (const auto& r : sorted) sum += r.noisy_loss;
  const double mean = sum / n;
  double ss = 0.0;
  for (const auto& r : sorted) ss += (r.noisy_loss - mean) * (r.noisy_loss - mean);
  const double sigma = std::sqrt(ss / n);

  std::map<std::string, double> diag{{"mean", mean}, {"sigma", sigma}};
  if (sigma < kSigmaFloor) return RetainAll(reports, std::move(diag));

  std::vector<bool> mask(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const double z = (reports[i].noisy_loss - mean) / sigma;
    mask[i] = (one_sided ? z : std::fabs(z)) > threshold + kZMargin;
  }
  return MakeOutcome(reports, std::move(mask), std::move(diag));
}

EliminationOutcome EliminateKMeans(std::span<const LossReport> reports,
                                   double guard, std::size_t max_iters) {
  CheckReports(reports, "EliminateKMeans");
  Require(guard >= 0.0, "EliminateKMeans: guard must be non-negative");
  Require(max_iters > 0, "EliminateKMeans: max_iters must be positive");
  if (reports.size() < 2) return RetainAll(reports, {{"insufficient_reports", 1.0}});

  const auto sorted = SortedAscending(reports);
  const std::size_t n = sorted.size();
  double low = sorted.front().noisy_loss;
  double high = sorted.back().noisy_loss;

  // In one dimension the assignment is a split point: sorted[0, split) go to
  // the low centroid. Equidistant points join the low cluster.
  auto assign = [&](double c_low, double c_high) {
    std::size_t split = 0;
    while (split < n && std::fabs(sorted[split].noisy_loss - c_low) <=
                            std::fabs(sorted[split].noisy_loss - c_high)) {
      ++split;
    }
    return split;
  };
  auto mean_of = [&](std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += sorted[i].noisy_loss;
    return s / static_cast<double>(end - begin);
  };

  std::size_t split = assign(low, high);
  std::size_t iters = 0;
  while (iters < max_iters) {
    ++iters;
    if (split == 0 || split == n) break;  // all points equal
    low = mean_of(0, split);
    high = mean_of(split, n);
    const std::size_t next = assign(low, high);
    if (next == split) break;
    split = next;
  }

  std::map<std::string, double> diag{{"iterations", static_cast<double>(iters)}};
  if (split == 0 || split == n) {
    diag["centroid_low"] = diag["centroid_high"] = sorted.front().noisy_loss;
    diag["guard_passed"] = 0.0;
    return RetainAll(reports, std::move(diag));
  }
  low = mean_of(0, split);
  high = mean_of(split, n);
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = i < split ? low : high;
    sse += (sorted[i].noisy_loss - c) * (sorted[i].noisy_loss - c);
  }
  const double pooled_sd =
      std::sqrt(sse / static_cast<double>(std::max<std::size_t>(n - 2, 1)));
  const bool guard_passed = (high - low) > guard * std::max(pooled_sd, 1e-12);

  diag["centroid_low"] = low;
  diag["centroid_high"] = high;
  diag["pooled_sd"] = pooled_sd;
  diag["guard_passed"] = guard_passed ? 1.0 : 0.0;
  if (!guard_passed) return RetainAll(reports, std::move(diag));

  std::vector<bool> mask(reports.size(), false);
  const double cut = sorted[split - 1].noisy_loss;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    mask[i] = reports[i].noisy_loss > cut;
  }
  return MakeOutcome(reports, std::move(mask), std::move(diag));
}

EliminationOutcome Eliminate(std::span<const LossReport> reports,
                             const DefenseConfig& config) {
  switch (config.kind) {
    case DefenseKind::kNone:
      CheckReports(reports, "Eliminate");
      return RetainAll(reports);
    case DefenseKind::kFixedFraction:
      return EliminateFixedFraction(reports, config.fixed_fraction);
    case DefenseKind::kLargestGap:
      return EliminateLargestGap(reports);
    case DefenseKind::kZScore:
      return EliminateZScore(reports, config.zscore_threshold,
                             config.zscore_one_sided);
    case DefenseKind::kKMeans:
      return EliminateKMeans(reports, config.kmeans_guard,
                             config.kmeans_max_iters);
  }
  return RetainAll(reports);
}

DetectionScore ScoreDetection(const EliminationOutcome& outcome,
                              std::span<const std::size_t> malicious_ids) {
  const std::set<std::size_t> truth(malicious_ids.begin(), malicious_ids.end());
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t id : outcome.eliminated) (truth.count(id) ? tp : fp)++;
  for (std::size_t id : outcome.retained) (truth.count(id) ? fn : tn)++;
  Require(tp + fn == truth.size(),
          "ScoreDetection: malicious id outside the round's clients");

  const double total = static_cast<double>(tp + fp + fn + tn);
  DetectionScore s;
  s.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 1.0;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
  s.f1 = s.precision + s.recall > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

}  // namespace lossguard
