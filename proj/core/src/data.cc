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

#include "lossguard/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "lossguard/error.h"
#include "lossguard/rng.h"

namespace lossguard {
namespace {

// Half-width of the raw-space margin kept around the class means before the
// affine map into [0, 1]; points further out are clamped.
constexpr double kSpreadMargin = 4.0;

// Seed for the class-mean layout when classes outnumber dimensions. Fixed so
// that train and test sets drawn with different seeds share their means.
constexpr std::uint64_t kMeanLayoutSeed = 0x5eed0fc1a55e5ULL;

std::vector<unsigned char> ReadAll(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IngestError(IngestError::Kind::kOpen, path.string(), 0,
                      "cannot open file");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t ReadBigEndian32(const std::vector<unsigned char>& bytes,
                              std::size_t offset, const std::string& path) {
  if (bytes.size() < offset + 4) {
    throw IngestError(IngestError::Kind::kTruncated, path, bytes.size(),
                      "header ends early");
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) |
         std::uint32_t{bytes[offset + 3]};
}

void ExpectMagic(std::uint32_t got, std::uint32_t want,
                 const std::string& path) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "bad magic number 0x%08x (expected 0x%08x)",
                  got, want);
    throw IngestError(IngestError::Kind::kBadMagic, path, 0, buf);
  }
}

}  // namespace

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.SelectRows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  out.num_classes = num_classes;
  return out;
}

Dataset LoadIdx(const std::filesystem::path& images_path,
                const std::filesystem::path& labels_path) {
  const std::string img_name = images_path.string();
  const std::string lbl_name = labels_path.string();
  const auto images = ReadAll(images_path);
  const auto labels = ReadAll(labels_path);

  ExpectMagic(ReadBigEndian32(images, 0, img_name), kIdxImagesMagic, img_name);
  ExpectMagic(ReadBigEndian32(labels, 0, lbl_name), kIdxLabelsMagic, lbl_name);

  const std::uint64_t image_count = ReadBigEndian32(images, 4, img_name);
  const std::uint64_t label_count = ReadBigEndian32(labels, 4, lbl_name);
  const std::uint64_t rows = ReadBigEndian32(images, 8, img_name);
  const std::uint64_t cols = ReadBigEndian32(images, 12, img_name);
  if (image_count != label_count) {
    throw IngestError(IngestError::Kind::kCountMismatch, lbl_name, 4,
                      "label count " + std::to_string(label_count) +
                          " does not match image count " +
                          std::to_string(image_count) + " in " + img_name);
  }

  constexpr std::size_t kImageHeader = 16;
  constexpr std::size_t kLabelHeader = 8;
  const std::uint64_t pixels = rows * cols;
  if (images.size() < kImageHeader + image_count * pixels) {
    throw IngestError(IngestError::Kind::kTruncated, img_name, images.size(),
                      "expected " +
                          std::to_string(kImageHeader + image_count * pixels) +
                          " bytes");
  }
  if (labels.size() < kLabelHeader + label_count) {
    throw IngestError(IngestError::Kind::kTruncated, lbl_name, labels.size(),
                      "expected " + std::to_string(kLabelHeader + label_count) +
                          " bytes");
  }

  Dataset out;
  out.features = Matrix(image_count, pixels);
  auto values = out.features.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = images[kImageHeader + i] / 255.0;
  }
  out.labels.resize(label_count);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < label_count; ++i) {
    out.labels[i] = labels[kLabelHeader + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = label_count == 0 ? 10 : max_label + 1;
  return out;
}

Matrix SyntheticClassMeans(std::size_t num_classes, std::size_t dim,
                           double separation) {
  Matrix means(num_classes, dim);
  if (num_classes <= dim) {
    // Scaled orthogonal axes: every pair is exactly `separation` apart.
    for (std::size_t c = 0; c < num_classes; ++c) {
      means(c, c) = separation / std::sqrt(2.0);
    }
    return means;
  }
  Rng rng(kMeanLayoutSeed);
  for (double& v : means.values()) v = rng.Normal();
  double min_dist = INFINITY;
  for (std::size_t a = 0; a < num_classes; ++a) {
    for (std::size_t b = a + 1; b < num_classes; ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = means(a, j) - means(b, j);
        d2 += d * d;
      }
      min_dist = std::min(min_dist, std::sqrt(d2));
    }
  }
  // Rescale so the closest pair sits exactly at `separation`.
  const double scale = min_dist > 0.0 ? separation / min_dist : 1.0;
  for (double& v : means.values()) v *= scale;
  return means;
}

Dataset Synthesize(std::size_t num_classes, std::size_t per_class,
                   std::size_t dim, double separation, std::uint64_t seed) {
  Require(num_classes > 0 && per_class > 0 && dim > 0,
          "Synthesize: counts must be positive");
  Require(separation > 0.0, "Synthesize: separation must be positive");

  const Matrix means = SyntheticClassMeans(num_classes, dim, separation);
  const auto [lo_it, hi_it] =
      std::minmax_element(means.values().begin(), means.values().end());
  const double lo = std::min(0.0, *lo_it);
  const double span = (*hi_it + kSpreadMargin) - lo;

  Rng rng(seed);
  const std::size_t n = num_classes * per_class;
  Dataset out;
  out.num_classes = num_classes;
  out.features = Matrix(n, dim);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % num_classes;
    out.labels[i] = c;
    auto x = out.features.row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      const double raw = means(c, j) + rng.Normal();
      x[j] = std::clamp((raw - lo) / span, 0.0, 1.0);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> PartitionIndices(std::size_t n,
                                                       std::size_t num_clients,
                                                       std::uint64_t seed) {
  Require(num_clients > 0, "Partition: need at least one client");
  Require(num_clients <= n, "Partition: " + std::to_string(num_clients) +
                                " clients but only " + std::to_string(n) +
                                " samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.Shuffle(order);

  const std::size_t base = n / num_clients;
  const std::size_t extra = n % num_clients;
  std::vector<std::vector<std::size_t>> chunks(num_clients);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < num_clients; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    chunks[c].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return chunks;
}

std::vector<ClientShard> Partition(const Dataset& dataset,
                                   std::size_t num_clients,
                                   std::uint64_t seed) {
  const auto chunks = PartitionIndices(dataset.size(), num_clients, seed);
  std::vector<ClientShard> shards(num_clients);
  for (std::size_t c = 0; c < num_clients; ++c) {
    shards[c].client_id = c;
    shards[c].data = dataset.Subset(chunks[c]);
  }
  return shards;
}

std::vector<ClientShard> MarkMalicious(std::vector<ClientShard> shards,
                                       double malicious_fraction,
                                       std::uint64_t seed) {
  Require(malicious_fraction >= 0.0 && malicious_fraction <= 0.5,
          "MarkMalicious: fraction must lie in [0, 0.5]");
  const auto count = static_cast<std::size_t>(
      std::floor(malicious_fraction * static_cast<double>(shards.size()) + 0.5));
  std::vector<std::size_t> order(shards.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.Shuffle(order);
  for (auto& shard : shards) shard.is_malicious = false;
  for (std::size_t i = 0; i < count; ++i) shards[order[i]].is_malicious = true;
  return shards;
}

void ValidatePoisonSpec(const PoisonSpec& spec, std::size_t num_classes) {
  Require(spec.source_class != spec.target_class,
          "PoisonSpec: source and target class must differ");
  Require(spec.source_class < num_classes && spec.target_class < num_classes,
          "PoisonSpec: class index out of range");
}

ClientShard PoisonLabels(ClientShard shard, const PoisonSpec& spec) {
  Require(shard.is_malicious, "PoisonLabels: shard is not flagged malicious");
  ValidatePoisonSpec(spec, shard.data.num_classes);
  for (auto& label : shard.data.labels) {
    if (label == spec.source_class) label = spec.target_class;
  }
  return shard;
}

}  // namespace lossguard
