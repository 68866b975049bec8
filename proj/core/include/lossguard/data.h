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

#ifndef LOSSGUARD_DATA_H_
#define LOSSGUARD_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lossguard/matrix.h"

namespace lossguard {

// Labeled samples with features normalized into [0, 1].
struct Dataset {
  Matrix features;  // n x d
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  // New dataset holding the listed samples, in order.
  Dataset Subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// A client's private data. `is_malicious` is ground truth for scoring only;
// nothing on the server side of the federation reads it.
struct ClientShard {
  std::size_t client_id = 0;
  Dataset data;
  bool is_malicious = false;
};

// Targeted label flip: every `source_class` label becomes `target_class`.
struct PoisonSpec {
  std::size_t source_class = 5;
  std::size_t target_class = 3;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Reads an IDX image/label file pair. Pixels are scaled by 1/255 and
// num_classes is max(label) + 1 (10 for an empty set). Throws IngestError.
Dataset LoadIdx(const std::filesystem::path& images_path,
                const std::filesystem::path& labels_path);

// Gaussian blobs, one per class, with unit in-class spread measured in the
// raw space. Class means sit on scaled orthogonal axes (or, when there are
// more classes than dimensions, on deterministic random points) at pairwise
// distance >= separation. Raw points are mapped into [0, 1] by an affine map
// that sends raw 0 to 0 and clamps, so background coordinates stay sparse.
Dataset Synthesize(std::size_t num_classes, std::size_t per_class,
                   std::size_t dim, double separation, std::uint64_t seed);

// Raw-space class means used by Synthesize (num_classes x dim).
Matrix SyntheticClassMeans(std::size_t num_classes, std::size_t dim,
                           double separation);

// Seeded shuffle split into num_clients contiguous chunks whose sizes differ
// by at most one. Client ids are 0..num_clients-1.
std::vector<ClientShard> Partition(const Dataset& dataset,
                                   std::size_t num_clients,
                                   std::uint64_t seed);

// Index-level form of Partition: the sample indices owned by each client.
std::vector<std::vector<std::size_t>> PartitionIndices(std::size_t n,
                                                       std::size_t num_clients,
                                                       std::uint64_t seed);

// Flags exactly round(fraction * shards.size()) shards, drawn uniformly
// without replacement. For a fixed seed the flagged sets are nested as the
// fraction grows. fraction must lie in [0, 0.5].
std::vector<ClientShard> MarkMalicious(std::vector<ClientShard> shards,
                                       double malicious_fraction,
                                       std::uint64_t seed);

// Applies the label flip to a flagged shard; features are untouched.
ClientShard PoisonLabels(ClientShard shard, const PoisonSpec& spec);

void ValidatePoisonSpec(const PoisonSpec& spec, std::size_t num_classes);

}  // namespace lossguard

#endif  // LOSSGUARD_DATA_H_
