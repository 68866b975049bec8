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

#ifndef LOSSGUARD_RUNNER_H_
#define LOSSGUARD_RUNNER_H_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lossguard/data.h"
#include "lossguard/federation.h"

namespace lossguard {

// Gaussian-blob data; the test split is drawn from the same class means with
// an independent seed.
struct SyntheticSource {
  std::size_t num_classes = 10;
  std::size_t per_class = 200;
  std::size_t dim = 64;
  double separation = 6.0;
  std::size_t test_per_class = 100;
};

struct IdxSource {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
};

struct ExperimentSpec {
  std::variant<SyntheticSource, IdxSource> dataset;
  FederationConfig federation;
  std::filesystem::path output_dir = "lossguard_out";
  std::vector<double> sweep;
};

// Strict JSON config parsing. Unknown keys, wrong types and out-of-range
// values raise ConfigError naming the key and, when it can be found, the
// line. Missing keys take the desk-scale defaults.
ExperimentSpec ParseConfigText(std::string_view text);
ExperimentSpec ParseConfig(const std::filesystem::path& path);

// The fully resolved spec as JSON; ParseConfigText accepts it back.
std::string ResolvedConfigJson(const ExperimentSpec& spec);

struct DataSplit {
  Dataset train;
  Dataset test;
};

DataSplit LoadData(const ExperimentSpec& spec);

// Floats are written with 9 significant digits.
std::string FormatFloat(double value);

// "0.0,0.1,0.25" -> {0.0, 0.1, 0.25}; throws ConfigError.
std::vector<double> ParseFractionList(std::string_view text);

void WriteRoundsCsv(std::ostream& out, const ExperimentReport& report);
void WriteSummaryJson(std::ostream& out, const ExperimentSpec& spec,
                      const ExperimentReport& report);

struct SweepRow {
  double malicious_fraction = 0.0;
  bool defense_on = false;
  double final_accuracy = 0.0;
  double final_source_recall = 0.0;
  double mean_det_accuracy = 0.0;
  double mean_det_f1 = 0.0;
};

SweepRow MakeSweepRow(const ExperimentReport& report, bool defense_on);
void WriteSweepCsv(std::ostream& out, std::span<const SweepRow> rows);

// `run`: one experiment, rounds.csv + summary.json under spec.output_dir.
// Returns the process exit status.
int CmdRun(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

// `sweep`: every fraction in spec.sweep with the defense off and on, one
// report set per run plus sweep.csv.
int CmdSweep(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

}  // namespace lossguard

#endif  // LOSSGUARD_RUNNER_H_
