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

#ifndef LOSSGUARD_NN_H_
#define LOSSGUARD_NN_H_

#include <cstddef>
#include <span>
#include <vector>

#include "lossguard/matrix.h"
#include "lossguard/rng.h"

namespace lossguard {

// One affine layer: weight is out x in, bias is out x 1.
struct Layer {
  Matrix weight;
  Matrix bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Parameters of a fully connected ReLU network. dims is the layer size
// chain, e.g. {784, 64, 10}; layers[k].weight is dims[k+1] x dims[k].
struct ModelParams {
  std::vector<std::size_t> dims;
  std::vector<Layer> layers;

  std::size_t input_dim() const { return dims.front(); }
  std::size_t num_classes() const { return dims.back(); }
  std::size_t ParameterCount() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct Batch {
  Matrix inputs;                    // n x d
  std::vector<std::size_t> labels;  // n entries, each < C
};

struct LossAndGrad {
  double mean_loss = 0.0;
  Matrix grad_logits;
};

struct BackwardResult {
  ModelParams gradients;
  double mean_loss = 0.0;
};

// Model with all-zero parameters; the starting point of accumulators.
ModelParams ZeroModel(std::span<const std::size_t> dims);

// Glorot-uniform weights, zero biases.
ModelParams InitModel(std::span<const std::size_t> dims, Rng& rng);

// Throws ContractViolation unless the layer shapes agree with dims.
void ValidateModel(const ModelParams& model);

// Logits (n x C). Hidden layers use ReLU; the output layer is affine.
Matrix Forward(const ModelParams& model, const Matrix& inputs);

// Row-wise softmax with max subtraction.
Matrix Softmax(const Matrix& logits);

// Mean cross-entropy over rows and its gradient (softmax - onehot) / n.
LossAndGrad SoftmaxCrossEntropy(const Matrix& logits,
                                std::span<const std::size_t> labels);

// Gradient of the mean cross-entropy with respect to every parameter.
BackwardResult Backward(const ModelParams& model, const Batch& batch);

// p <- p - lr * g, element-wise. lr must be non-negative.
ModelParams SgdStep(const ModelParams& model, const ModelParams& gradients,
                    double lr);

// Argmax of each logit row; ties resolve to the lowest class index.
std::vector<std::size_t> ArgmaxRows(const Matrix& logits);
std::vector<std::size_t> Predict(const ModelParams& model,
                                 const Matrix& inputs);

// Visits every scalar parameter in a fixed order (layer, weight then bias,
// row-major). Used by averaging and by finite-difference checks.
template <typename Fn>
void ForEachParameter(ModelParams& model, Fn&& fn) {
  for (auto& layer : model.layers) {
    for (double& w : layer.weight.values()) fn(w);
    for (double& b : layer.bias.values()) fn(b);
  }
}

template <typename Fn>
void ForEachParameter(const ModelParams& model, Fn&& fn) {
  for (const auto& layer : model.layers) {
    for (double w : layer.weight.values()) fn(w);
    for (double b : layer.bias.values()) fn(b);
  }
}

}  // namespace lossguard

#endif  // LOSSGUARD_NN_H_
