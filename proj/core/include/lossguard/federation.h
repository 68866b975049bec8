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

#ifndef LOSSGUARD_FEDERATION_H_
#define LOSSGUARD_FEDERATION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lossguard/data.h"
#include "lossguard/defense.h"
#include "lossguard/nn.h"
#include "lossguard/privacy.h"
#include "lossguard/rng.h"

namespace lossguard {

// Which local epochs contribute to the loss a client reports.
enum class LossWindow {
  kAllEpochs,   // sample-weighted mean over every local epoch
  kFinalEpoch,  // mean over the last local epoch only
  kFirstEpoch,  // mean over the first local epoch only
  kInitial,     // loss of the received global model, before any step
};

std::string_view LossWindowName(LossWindow window);
std::optional<LossWindow> ParseLossWindow(std::string_view name);

// Defaults are the desk-scale configuration: 50 clients, 10 per round,
// 15 global epochs of 5 local epochs each.
struct FederationConfig {
  std::size_t total_clients = 50;
  std::size_t clients_per_round = 10;
  std::size_t global_epochs = 15;
  std::size_t client_epochs = 5;
  double client_lr = 1.5;
  std::size_t batch_size = 32;
  LossWindow loss_window = LossWindow::kInitial;
  double malicious_fraction = 0.0;
  PoisonSpec poison;
  DefenseConfig defense;
  LdpConfig ldp = LdpConfig::Default();
  std::vector<std::size_t> hidden_layers = {32};
  std::uint64_t seed = 1;
  std::size_t repeats = 3;
};

void ValidateFederationConfig(const FederationConfig& config);

// Everything a client sends back. There is deliberately no raw loss and no
// malicious flag here: this is the whole server-visible surface.
struct ClientUpdate {
  std::size_t client_id = 0;
  ModelParams weights;
  double noisy_loss = 0.0;
};

// Client-side result of local SGD before any noise is added.
struct LocalFit {
  ModelParams weights;
  double raw_loss = 0.0;
};

struct RoundRecord {
  std::size_t epoch = 0;  // 1-based
  std::vector<std::size_t> selected;
  std::vector<std::size_t> eliminated;
  double accuracy = 0.0;
  double test_loss = 0.0;
  double source_recall = 0.0;
  DetectionScore detection;
};

// Per-epoch arithmetic means across repeats.
struct EpochMean {
  std::size_t epoch = 0;
  double accuracy = 0.0;
  double test_loss = 0.0;
  double source_recall = 0.0;
  DetectionScore detection;
  double eliminated_count = 0.0;
  double selected_count = 0.0;
};

struct ExperimentReport {
  FederationConfig config;
  std::vector<std::vector<RoundRecord>> runs;  // [repeat][epoch - 1]
  std::vector<EpochMean> epoch_means;
  // Means over every round of every repeat.
  double mean_det_accuracy = 0.0;
  double mean_det_f1 = 0.0;

  const EpochMean& final_epoch() const { return epoch_means.back(); }
};

// Uniform sample of k distinct ids from [0, total), returned sorted.
std::vector<std::size_t> SelectClients(Rng& round_rng,
                                       std::size_t total_clients,
                                       std::size_t k);

// Mini-batch SGD on `data` starting from `global_model`. Each epoch visits a
// fresh seeded permutation. raw_loss is the sample-weighted mean of the
// pre-step batch losses over the epochs selected by `window`, or the loss of
// the untouched model when epochs == 0.
LocalFit TrainLocally(const ModelParams& global_model, const Dataset& data,
                      std::size_t epochs, double lr, std::size_t batch_size,
                      Rng& rng, LossWindow window = LossWindow::kAllEpochs);

// TrainLocally followed by Laplace perturbation of the loss.
ClientUpdate LocalTrain(const ModelParams& global_model,
                        const ClientShard& shard, std::size_t client_epochs,
                        double lr, std::size_t batch_size,
                        const LdpConfig& ldp, Rng& client_rng,
                        LossWindow window = LossWindow::kAllEpochs);

// Unweighted element-wise mean, accumulated in ascending client id order.
ModelParams FedAvg(std::span<const ClientUpdate> updates);

struct ServerStepResult {
  ModelParams model;
  EliminationOutcome outcome;
};

// The server's half of a round: run the eliminator over the reported losses
// and average the retained updates.
ServerStepResult ServerStep(std::span<const ClientUpdate> updates,
                            const DefenseConfig& defense);

// One simulated deployment: fixed shards, a fixed attacker set and a global
// model that evolves round by round.
class Federation {
 public:
  Federation(const FederationConfig& config, const Dataset& train,
             Dataset test, std::size_t repeat);

  // select -> local train -> eliminate -> aggregate -> evaluate.
  RoundRecord RunRound(std::size_t epoch);

  const ModelParams& global_model() const { return model_; }
  const std::vector<ClientShard>& shards() const { return shards_; }
  std::vector<std::size_t> MaliciousIds() const;

  // Stream seeds. Exposed so tests can replay individual steps.
  std::uint64_t SelectionSeed(std::size_t epoch) const;
  std::uint64_t ClientSeed(std::size_t epoch, std::size_t client_id) const;

 private:
  FederationConfig config_;
  std::uint64_t run_seed_;
  std::size_t repeat_;
  Dataset test_;
  std::vector<ClientShard> shards_;
  ModelParams model_;
};

std::vector<std::size_t> ModelDims(const FederationConfig& config,
                                   const Dataset& train);

// Runs config.repeats independent federations (seed + repeat index) and
// averages their records per epoch.
ExperimentReport RunExperiment(const FederationConfig& config,
                               const Dataset& train, const Dataset& test);

// Recomputes epoch means and detection means from report.runs.
void Summarize(ExperimentReport& report);

}  // namespace lossguard

#endif  // LOSSGUARD_FEDERATION_H_
