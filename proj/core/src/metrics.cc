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

#include "lossguard/metrics.h"

#include "lossguard/error.h"

namespace lossguard {

double SparseCategoricalAccuracy(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> labels) {
  Require(predictions.size() == labels.size(),
          "SparseCategoricalAccuracy: length mismatch");
  Require(!labels.empty(), "SparseCategoricalAccuracy: no samples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double TestCrossEntropy(const ModelParams& model, const Dataset& test_set) {
  Require(test_set.size() > 0, "TestCrossEntropy: empty test set");
  return SoftmaxCrossEntropy(Forward(model, test_set.features), test_set.labels)
      .mean_loss;
}

RecallResult SourceClassRecall(std::span<const std::size_t> predictions,
                               std::span<const std::size_t> labels,
                               std::size_t source_class) {
  Require(predictions.size() == labels.size(),
          "SourceClassRecall: length mismatch");
  std::size_t positives = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != source_class) continue;
    ++positives;
    hits += predictions[i] == source_class;
  }
  if (positives == 0) return {1.0, true};
  return {static_cast<double>(hits) / static_cast<double>(positives), false};
}

EvalResult Evaluate(const ModelParams& model, const Dataset& test_set) {
  Require(test_set.size() > 0, "Evaluate: empty test set");
  const Matrix logits = Forward(model, test_set.features);
  const auto predictions = ArgmaxRows(logits);

  EvalResult out;
  out.accuracy = SparseCategoricalAccuracy(predictions, test_set.labels);
  out.mean_ce_loss = SoftmaxCrossEntropy(logits, test_set.labels).mean_loss;
  const std::size_t classes = model.num_classes();
  out.per_class_recall.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto recall = SourceClassRecall(predictions, test_set.labels, c);
    out.per_class_recall[c] = recall.value;
    if (recall.class_absent) out.absent_classes.push_back(c);
  }
  return out;
}

}  // namespace lossguard
