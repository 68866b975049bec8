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

#ifndef LOSSGUARD_METRICS_H_
#define LOSSGUARD_METRICS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "lossguard/data.h"
#include "lossguard/nn.h"

namespace lossguard {

struct RecallResult {
  double value = 1.0;
  bool class_absent = false;
};

struct EvalResult {
  double accuracy = 0.0;
  double mean_ce_loss = 0.0;
  std::vector<double> per_class_recall;
  // Classes with no test samples; their recall is reported as 1.0.
  std::vector<std::size_t> absent_classes;
};

double SparseCategoricalAccuracy(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> labels);

double TestCrossEntropy(const ModelParams& model, const Dataset& test_set);

RecallResult SourceClassRecall(std::span<const std::size_t> predictions,
                               std::span<const std::size_t> labels,
                               std::size_t source_class);

EvalResult Evaluate(const ModelParams& model, const Dataset& test_set);

}  // namespace lossguard

#endif  // LOSSGUARD_METRICS_H_
