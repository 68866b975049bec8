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

#include "lossguard/nn.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "lossguard/error.h"

namespace lossguard {
namespace {

// out = in * W^T + b, row by row.
Matrix Affine(const Layer& layer, const Matrix& in) {
  const std::size_t n = in.rows();
  const std::size_t out_dim = layer.weight.rows();
  const std::size_t in_dim = layer.weight.cols();
  Matrix out(n, out_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = in.row(i);
    auto y = out.row(i);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const auto w = layer.weight.row(o);
      double acc = layer.bias(o, 0);
      for (std::size_t j = 0; j < in_dim; ++j) acc += w[j] * x[j];
      y[o] = acc;
    }
  }
  return out;
}

void ReluInPlace(Matrix& m) {
  for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
}

void CheckInputs(const ModelParams& model, const Matrix& inputs) {
  Require(!model.dims.empty() && inputs.cols() == model.input_dim(),
          "Forward: input has " + std::to_string(inputs.cols()) +
              " columns, model expects " +
              std::to_string(model.dims.empty() ? 0 : model.input_dim()));
}

}  // namespace

std::size_t ModelParams::ParameterCount() const {
  std::size_t count = 0;
  for (const auto& layer : layers) count += layer.weight.size() + layer.bias.size();
  return count;
}

ModelParams ZeroModel(std::span<const std::size_t> dims) {
  Require(dims.size() >= 2, "model needs at least an input and output size");
  ModelParams model;
  model.dims.assign(dims.begin(), dims.end());
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    Require(dims[k] > 0 && dims[k + 1] > 0, "layer sizes must be positive");
    model.layers.push_back({Matrix(dims[k + 1], dims[k]), Matrix(dims[k + 1], 1)});
  }
  return model;
}

ModelParams InitModel(std::span<const std::size_t> dims, Rng& rng) {
  ModelParams model = ZeroModel(dims);
  for (auto& layer : model.layers) {
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double fan_out = static_cast<double>(layer.weight.rows());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : layer.weight.values()) w = rng.Uniform(-limit, limit);
  }
  return model;
}

void ValidateModel(const ModelParams& model) {
  Require(model.dims.size() >= 2 && model.layers.size() + 1 == model.dims.size(),
          "model: layer count does not match dims");
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& layer = model.layers[k];
    Require(layer.weight.rows() == model.dims[k + 1] &&
                layer.weight.cols() == model.dims[k],
            "model: layer " + std::to_string(k) + " weight shape mismatch");
    Require(layer.bias.rows() == model.dims[k + 1] && layer.bias.cols() == 1,
            "model: layer " + std::to_string(k) + " bias shape mismatch");
  }
}

Matrix Forward(const ModelParams& model, const Matrix& inputs) {
  CheckInputs(model, inputs);
  Matrix act = inputs;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    act = Affine(model.layers[k], act);
    if (k + 1 < model.layers.size()) ReluInPlace(act);
  }
  return act;
}

Matrix Softmax(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    auto p = probs.row(i);
    const double max = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      p[c] = std::exp(z[c] - max);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
  }
  return probs;
}

LossAndGrad SoftmaxCrossEntropy(const Matrix& logits,
                                std::span<const std::size_t> labels) {
  Require(logits.rows() == labels.size() && !labels.empty(),
          "SoftmaxCrossEntropy: need one label per logit row");
  const std::size_t n = logits.rows();
  const std::size_t classes = logits.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossAndGrad out{0.0, Matrix(n, classes)};
  for (std::size_t i = 0; i < n; ++i) {
    Require(labels[i] < classes, "SoftmaxCrossEntropy: label " +
                                     std::to_string(labels[i]) +
                                     " out of range");
    const auto z = logits.row(i);
    const double max = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - max);
    const double log_sum = std::log(sum);
    // -log softmax(z)[label], computed in log space.
    out.mean_loss += (log_sum - (z[labels[i]] - max)) * inv_n;
    auto g = out.grad_logits.row(i);
    for (std::size_t c = 0; c < classes; ++c) {
      g[c] = std::exp(z[c] - max - log_sum) * inv_n;
    }
    g[labels[i]] -= inv_n;
  }
  return out;
}

BackwardResult Backward(const ModelParams& model, const Batch& batch) {
  CheckInputs(model, batch.inputs);
  const std::size_t depth = model.layers.size();

  // activations[k] feeds layer k; pre[k] is layer k's affine output.
  std::vector<Matrix> activations;
  std::vector<Matrix> pre;
  activations.reserve(depth);
  pre.reserve(depth);
  activations.push_back(batch.inputs);
  for (std::size_t k = 0; k < depth; ++k) {
    pre.push_back(Affine(model.layers[k], activations.back()));
    if (k + 1 < depth) {
      Matrix a = pre.back();
      ReluInPlace(a);
      activations.push_back(std::move(a));
    }
  }

  auto [loss, delta] = SoftmaxCrossEntropy(pre.back(), batch.labels);
  BackwardResult result{ZeroModel(model.dims), loss};
  const std::size_t n = batch.inputs.rows();

  for (std::size_t k = depth; k-- > 0;) {
    const Layer& layer = model.layers[k];
    Layer& grad = result.gradients.layers[k];
    const Matrix& a = activations[k];
    const std::size_t out_dim = layer.weight.rows();
    const std::size_t in_dim = layer.weight.cols();

    for (std::size_t i = 0; i < n; ++i) {
      const auto d = delta.row(i);
      const auto x = a.row(i);
      for (std::size_t o = 0; o < out_dim; ++o) {
        if (d[o] == 0.0) continue;
        auto gw = grad.weight.row(o);
        for (std::size_t j = 0; j < in_dim; ++j) gw[j] += d[o] * x[j];
        grad.bias(o, 0) += d[o];
      }
    }
    if (k == 0) break;

    Matrix prev(n, in_dim);
    const Matrix& z_prev = pre[k - 1];
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = delta.row(i);
      auto p = prev.row(i);
      for (std::size_t o = 0; o < out_dim; ++o) {
        if (d[o] == 0.0) continue;
        const auto w = layer.weight.row(o);
        for (std::size_t j = 0; j < in_dim; ++j) p[j] += d[o] * w[j];
      }
      const auto z = z_prev.row(i);
      for (std::size_t j = 0; j < in_dim; ++j) {
        if (z[j] <= 0.0) p[j] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return result;
}

ModelParams SgdStep(const ModelParams& model, const ModelParams& gradients,
                    double lr) {
  Require(lr >= 0.0 && std::isfinite(lr), "SgdStep: lr must be >= 0");
  Require(model.dims == gradients.dims &&
              model.layers.size() == gradients.layers.size(),
          "SgdStep: gradient shape does not match model");
  ModelParams next = model;
  for (std::size_t k = 0; k < next.layers.size(); ++k) {
    auto& layer = next.layers[k];
    const auto& g = gradients.layers[k];
    Require(layer.weight.SameShape(g.weight) && layer.bias.SameShape(g.bias),
            "SgdStep: gradient shape does not match model");
    auto w = layer.weight.values();
    auto gw = g.weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
    auto b = layer.bias.values();
    auto gb = g.bias.values();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }
  return next;
}

std::vector<std::size_t> ArgmaxRows(const Matrix& logits) {
  std::vector<std::size_t> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    // max_element returns the first maximum, which is the tie-break we want.
    out[i] = static_cast<std::size_t>(
        std::max_element(z.begin(), z.end()) - z.begin());
  }
  return out;
}

std::vector<std::size_t> Predict(const ModelParams& model,
                                 const Matrix& inputs) {
  return ArgmaxRows(Forward(model, inputs));
}

}  // namespace lossguard
