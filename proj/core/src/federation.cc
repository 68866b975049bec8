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

#include "lossguard/federation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lossguard/error.h"
#include "lossguard/metrics.h"

namespace lossguard {
namespace {

// Stream tags, one per independent use of randomness within a repeat.
enum StreamTag : std::uint64_t {
  kPartitionStream = 1,
  kMaliciousStream = 2,
  kInitStream = 3,
  kSelectionStream = 4,
  kClientStream = 5,
};

}  // namespace

std::string_view LossWindowName(LossWindow window) {
  switch (window) {
    case LossWindow::kAllEpochs:
      return "all_epochs";
    case LossWindow::kFinalEpoch:
      return "final_epoch";
    case LossWindow::kFirstEpoch:
      return "first_epoch";
    case LossWindow::kInitial:
      return "initial";
  }
  return "all_epochs";
}

std::optional<LossWindow> ParseLossWindow(std::string_view name) {
  for (auto w : {LossWindow::kAllEpochs, LossWindow::kFinalEpoch,
                 LossWindow::kFirstEpoch, LossWindow::kInitial}) {
    if (LossWindowName(w) == name) return w;
  }
  return std::nullopt;
}

void ValidateFederationConfig(const FederationConfig& config) {
  Require(config.total_clients > 0, "config: total_clients must be positive");
  Require(config.clients_per_round > 0,
          "config: clients_per_round must be positive");
  Require(config.clients_per_round <= config.total_clients,
          "config: clients_per_round exceeds total_clients");
  Require(config.global_epochs > 0, "config: global_epochs must be positive");
  Require(config.batch_size > 0, "config: batch_size must be positive");
  Require(config.repeats > 0, "config: repeats must be positive");
  Require(config.client_lr > 0.0 && std::isfinite(config.client_lr),
          "config: client_lr must be positive");
  Require(config.malicious_fraction >= 0.0 && config.malicious_fraction <= 0.5,
          "config: malicious_fraction must lie in [0, 0.5]");
  for (std::size_t h : config.hidden_layers) {
    Require(h > 0, "config: hidden layer sizes must be positive");
  }
  ValidateDefenseConfig(config.defense);
}

std::vector<std::size_t> SelectClients(Rng& round_rng,
                                       std::size_t total_clients,
                                       std::size_t k) {
  Require(k <= total_clients, "SelectClients: k=" + std::to_string(k) +
                                  " exceeds total=" +
                                  std::to_string(total_clients));
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  std::vector<std::size_t> ids(total_clients);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(
                                  round_rng.UniformIndex(total_clients - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

LocalFit TrainLocally(const ModelParams& global_model, const Dataset& data,
                      std::size_t epochs, double lr, std::size_t batch_size,
                      Rng& rng, LossWindow window) {
  Require(data.size() > 0, "local training: empty shard");
  Require(batch_size > 0, "local training: batch_size must be positive");
  LocalFit fit{global_model, 0.0};
  if (epochs == 0 || window == LossWindow::kInitial) {
    fit.raw_loss =
        SoftmaxCrossEntropy(Forward(global_model, data.features), data.labels)
            .mean_loss;
  }
  if (epochs == 0) return fit;

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  double window_loss = 0.0;
  std::size_t window_epochs = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.Shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Batch batch{data.features.SelectRows(idx), {}};
      batch.labels.reserve(idx.size());
      for (std::size_t i : idx) batch.labels.push_back(data.labels[i]);

      auto [grads, loss] = Backward(fit.weights, batch);
      fit.weights = SgdStep(fit.weights, grads, lr);
      loss_sum += loss * static_cast<double>(idx.size());
    }
    const bool counted = window == LossWindow::kAllEpochs ||
                         (window == LossWindow::kFirstEpoch && epoch == 0) ||
                         (window == LossWindow::kFinalEpoch && epoch + 1 == epochs);
    if (counted) {
      window_loss += loss_sum / static_cast<double>(n);
      ++window_epochs;
    }
  }
  if (window != LossWindow::kInitial) {
    fit.raw_loss = window_loss / static_cast<double>(window_epochs);
  }
  return fit;
}

ClientUpdate LocalTrain(const ModelParams& global_model,
                        const ClientShard& shard, std::size_t client_epochs,
                        double lr, std::size_t batch_size,
                        const LdpConfig& ldp, Rng& client_rng,
                        LossWindow window) {
  LocalFit fit = TrainLocally(global_model, shard.data, client_epochs, lr,
                              batch_size, client_rng, window);
  const double noisy = PerturbLoss(fit.raw_loss, ldp, client_rng);
  return {shard.client_id, std::move(fit.weights), noisy};
}

ModelParams FedAvg(std::span<const ClientUpdate> updates) {
  Require(!updates.empty(), "FedAvg: no updates");
  std::vector<const ClientUpdate*> ordered;
  ordered.reserve(updates.size());
  for (const auto& u : updates) {
    Require(u.weights.dims == updates.front().weights.dims,
            "FedAvg: model dims differ between updates");
    ValidateModel(u.weights);
    ordered.push_back(&u);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->client_id < b->client_id; });

  ModelParams sum = ZeroModel(updates.front().weights.dims);
  for (const auto* u : ordered) {
    for (std::size_t k = 0; k < sum.layers.size(); ++k) {
      auto w = sum.layers[k].weight.values();
      auto uw = u->weights.layers[k].weight.values();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += uw[i];
      auto b = sum.layers[k].bias.values();
      auto ub = u->weights.layers[k].bias.values();
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += ub[i];
    }
  }
  const double count = static_cast<double>(updates.size());
  ForEachParameter(sum, [count](double& p) { p /= count; });
  return sum;
}

ServerStepResult ServerStep(std::span<const ClientUpdate> updates,
                            const DefenseConfig& defense) {
  Require(!updates.empty(), "ServerStep: no updates");
  std::vector<LossReport> reports;
  reports.reserve(updates.size());
  for (const auto& u : updates) reports.push_back({u.client_id, u.noisy_loss});

  EliminationOutcome outcome = Eliminate(reports, defense);
  std::vector<ClientUpdate> kept;
  kept.reserve(outcome.retained.size());
  for (const auto& u : updates) {
    if (std::binary_search(outcome.retained.begin(), outcome.retained.end(),
                           u.client_id)) {
      kept.push_back(u);
    }
  }
  return {FedAvg(kept), std::move(outcome)};
}

std::vector<std::size_t> ModelDims(const FederationConfig& config,
                                   const Dataset& train) {
  std::vector<std::size_t> dims{train.dim()};
  dims.insert(dims.end(), config.hidden_layers.begin(),
              config.hidden_layers.end());
  dims.push_back(train.num_classes);
  return dims;
}

Federation::Federation(const FederationConfig& config, const Dataset& train,
                       Dataset test, std::size_t repeat)
    : config_(config), run_seed_(config.seed), repeat_(repeat),
      test_(std::move(test)) {
  ValidateFederationConfig(config_);
  Require(train.size() > 0 && test_.size() > 0,
          "Federation: train and test sets must be nonempty");
  Require(test_.dim() == train.dim(),
          "Federation: train and test feature sizes differ");
  if (config_.malicious_fraction > 0.0) {
    ValidatePoisonSpec(config_.poison, train.num_classes);
  }

  shards_ = Partition(train, config_.total_clients,
                      DeriveSeed({run_seed_, repeat_, kPartitionStream}));
  shards_ = MarkMalicious(std::move(shards_), config_.malicious_fraction,
                          DeriveSeed({run_seed_, repeat_, kMaliciousStream}));
  for (auto& shard : shards_) {
    if (shard.is_malicious) shard = PoisonLabels(std::move(shard), config_.poison);
  }

  Rng init_rng(DeriveSeed({run_seed_, repeat_, kInitStream}));
  model_ = InitModel(ModelDims(config_, train), init_rng);
}

std::uint64_t Federation::SelectionSeed(std::size_t epoch) const {
  return DeriveSeed({run_seed_, repeat_, kSelectionStream, epoch});
}

std::uint64_t Federation::ClientSeed(std::size_t epoch,
                                     std::size_t client_id) const {
  return DeriveSeed({run_seed_, repeat_, kClientStream, epoch, client_id});
}

std::vector<std::size_t> Federation::MaliciousIds() const {
  std::vector<std::size_t> ids;
  for (const auto& s : shards_) {
    if (s.is_malicious) ids.push_back(s.client_id);
  }
  return ids;
}

RoundRecord Federation::RunRound(std::size_t epoch) {
  RoundRecord record;
  record.epoch = epoch;

  Rng selection_rng(SelectionSeed(epoch));
  record.selected =
      SelectClients(selection_rng, config_.total_clients, config_.clients_per_round);

  // Client side. Each client has its own stream, so order does not matter.
  std::vector<ClientUpdate> updates;
  updates.reserve(record.selected.size());
  for (std::size_t id : record.selected) {
    Rng client_rng(ClientSeed(epoch, id));
    updates.push_back(LocalTrain(model_, shards_[id], config_.client_epochs,
                                 config_.client_lr, config_.batch_size,
                                 config_.ldp, client_rng, config_.loss_window));
  }

  // Server side: sees only the updates.
  auto step = ServerStep(updates, config_.defense);
  model_ = std::move(step.model);
  record.eliminated = step.outcome.eliminated;

  // Harness side: ground truth and evaluation.
  std::vector<std::size_t> truth;
  for (std::size_t id : record.selected) {
    if (shards_[id].is_malicious) truth.push_back(id);
  }
  record.detection = ScoreDetection(step.outcome, truth);

  const EvalResult eval = Evaluate(model_, test_);
  record.accuracy = eval.accuracy;
  record.test_loss = eval.mean_ce_loss;
  record.source_recall = eval.per_class_recall.at(config_.poison.source_class);
  return record;
}

void Summarize(ExperimentReport& report) {
  report.epoch_means.clear();
  if (report.runs.empty()) return;
  const std::size_t epochs = report.runs.front().size();
  const double repeats = static_cast<double>(report.runs.size());
  double det_acc = 0.0;
  double det_f1 = 0.0;
  std::size_t rounds = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    EpochMean m;
    m.epoch = report.runs.front()[e].epoch;
    for (const auto& run : report.runs) {
      const RoundRecord& r = run.at(e);
      m.accuracy += r.accuracy;
      m.test_loss += r.test_loss;
      m.source_recall += r.source_recall;
      m.detection.accuracy += r.detection.accuracy;
      m.detection.precision += r.detection.precision;
      m.detection.recall += r.detection.recall;
      m.detection.f1 += r.detection.f1;
      m.eliminated_count += static_cast<double>(r.eliminated.size());
      m.selected_count += static_cast<double>(r.selected.size());
      det_acc += r.detection.accuracy;
      det_f1 += r.detection.f1;
      ++rounds;
    }
    m.accuracy /= repeats;
    m.test_loss /= repeats;
    m.source_recall /= repeats;
    m.detection.accuracy /= repeats;
    m.detection.precision /= repeats;
    m.detection.recall /= repeats;
    m.detection.f1 /= repeats;
    m.eliminated_count /= repeats;
    m.selected_count /= repeats;
    report.epoch_means.push_back(m);
  }
  report.mean_det_accuracy = det_acc / static_cast<double>(rounds);
  report.mean_det_f1 = det_f1 / static_cast<double>(rounds);
}

ExperimentReport RunExperiment(const FederationConfig& config,
                               const Dataset& train, const Dataset& test) {
  ValidateFederationConfig(config);
  ExperimentReport report;
  report.config = config;
  for (std::size_t repeat = 0; repeat < config.repeats; ++repeat) {
    Federation federation(config, train, test, repeat);
    std::vector<RoundRecord> run;
    run.reserve(config.global_epochs);
    for (std::size_t epoch = 1; epoch <= config.global_epochs; ++epoch) {
      run.push_back(federation.RunRound(epoch));
    }
    report.runs.push_back(std::move(run));
  }
  Summarize(report);
  return report;
}

}  // namespace lossguard
