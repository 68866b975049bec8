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

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lossguard/error.h"
#include "lossguard/runner.h"
#include "lossguard/version.h"

namespace {

lossguard::ExperimentSpec LoadSpec(const std::string& config_path,
                                   const std::string& out_dir,
                                   std::optional<std::uint64_t> seed) {
  lossguard::ExperimentSpec spec = lossguard::ParseConfig(config_path);
  if (!out_dir.empty()) spec.output_dir = out_dir;
  if (seed) spec.federation.seed = *seed;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lossguard: federated learning poisoning and loss-based "
               "client elimination simulator"};
  app.set_version_flag("--version", std::string(lossguard::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string fractions;

  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides config)");
  run->add_option("--seed", seed, "Master seed (overrides config)");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run a malicious-fraction sweep with the defense off and on");
  sweep->add_option("--config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--fractions", fractions,
                    "Comma-separated fractions, e.g. 0.0,0.1,0.2");
  sweep->add_option("--out", out_dir, "Output directory (overrides config)");
  sweep->add_option("--seed", seed, "Master seed (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    lossguard::ExperimentSpec spec = LoadSpec(config_path, out_dir, seed);
    if (*run) return lossguard::CmdRun(spec, std::cout, std::cerr);
    if (!fractions.empty()) spec.sweep = lossguard::ParseFractionList(fractions);
    return lossguard::CmdSweep(spec, std::cout, std::cerr);
  } catch (const lossguard::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
