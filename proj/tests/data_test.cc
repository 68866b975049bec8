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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "lossguard/error.h"

namespace lossguard {
namespace {

namespace fs = std::filesystem;
using Bytes = std::vector<unsigned char>;

void PutBigEndian32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

Bytes ImageFile(std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                std::uint32_t cols, const Bytes& pixels) {
  Bytes out;
  PutBigEndian32(out, magic);
  PutBigEndian32(out, count);
  PutBigEndian32(out, rows);
  PutBigEndian32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

Bytes LabelFile(std::uint32_t magic, std::uint32_t count, const Bytes& labels) {
  Bytes out;
  PutBigEndian32(out, magic);
  PutBigEndian32(out, count);
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

class IdxTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lossguard_idx_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path Write(const std::string& name, const Bytes& bytes) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    return path;
  }

  IngestError::Kind LoadKind(const Bytes& images, const Bytes& labels) {
    try {
      LoadIdx(Write("img", images), Write("lbl", labels));
    } catch (const IngestError& e) {
      last_error_ = e.what();
      last_path_ = e.path();
      last_offset_ = e.offset();
      return e.kind();
    }
    ADD_FAILURE() << "expected IngestError";
    return IngestError::Kind::kOpen;
  }

  fs::path dir_;
  std::string last_error_;
  std::string last_path_;
  std::uint64_t last_offset_ = 0;
};

TEST_F(IdxTest, EmptyFilesGiveEmptyDataset) {
  const Dataset d = LoadIdx(Write("img", ImageFile(0x803, 0, 28, 28, {})),
                            Write("lbl", LabelFile(0x801, 0, {})));
  EXPECT_EQ(d.size(), 0u);
  EXPECT_EQ(d.features.rows(), 0u);
}

TEST_F(IdxTest, HandBuiltFixtureDecodes) {
  // Two 2x2 images followed by two labels; bytes written out by hand.
  const Bytes images = {0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x02,
                        0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02,
                        0,    255,  51,   102,  255,  0,    204,  153};
  const Bytes labels = {0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x02, 7, 2};
  const Dataset d = LoadIdx(Write("img", images), Write("lbl", labels));
  ASSERT_EQ(d.size(), 2u);
  ASSERT_EQ(d.dim(), 4u);
  const std::vector<double> want = {0.0, 1.0, 0.2, 0.4, 1.0, 0.0, 0.8, 0.6};
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_DOUBLE_EQ(d.features.values()[i], want[i]);
  }
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{7, 2}));
  EXPECT_EQ(d.num_classes, 8u);
}

TEST_F(IdxTest, WrongLabelMagicIsReported) {
  EXPECT_EQ(LoadKind(ImageFile(0x803, 1, 1, 1, {9}), LabelFile(0x803, 1, {0})),
            IngestError::Kind::kBadMagic);
  EXPECT_NE(last_error_.find("magic"), std::string::npos);
  EXPECT_NE(last_path_.find("lbl"), std::string::npos);
  EXPECT_EQ(last_offset_, 0u);
}

TEST_F(IdxTest, WrongImageMagicIsReported) {
  EXPECT_EQ(LoadKind(ImageFile(0x801, 1, 1, 1, {9}), LabelFile(0x801, 1, {0})),
            IngestError::Kind::kBadMagic);
  EXPECT_NE(last_path_.find("img"), std::string::npos);
}

TEST_F(IdxTest, TruncatedPixelsAreReported) {
  EXPECT_EQ(LoadKind(ImageFile(0x803, 2, 2, 2, {1, 2, 3, 4, 5}),
                     LabelFile(0x801, 2, {0, 1})),
            IngestError::Kind::kTruncated);
  EXPECT_NE(last_path_.find("img"), std::string::npos);
  EXPECT_EQ(last_offset_, 21u);
}

TEST_F(IdxTest, TruncatedHeaderIsReported) {
  const Bytes images = {0x00, 0x00, 0x08, 0x03, 0x00, 0x00};
  EXPECT_EQ(LoadKind(images, LabelFile(0x801, 0, {})),
            IngestError::Kind::kTruncated);
}

TEST_F(IdxTest, TruncatedLabelsAreReported) {
  EXPECT_EQ(LoadKind(ImageFile(0x803, 2, 1, 1, {1, 2}), LabelFile(0x801, 2, {0})),
            IngestError::Kind::kTruncated);
  EXPECT_NE(last_path_.find("lbl"), std::string::npos);
}

TEST_F(IdxTest, CountMismatchIsReported) {
  EXPECT_EQ(LoadKind(ImageFile(0x803, 2, 1, 1, {1, 2}), LabelFile(0x801, 3, {0, 1, 2})),
            IngestError::Kind::kCountMismatch);
  EXPECT_NE(last_error_.find("@"), std::string::npos);
}

TEST_F(IdxTest, MissingFileIsReported) {
  EXPECT_THROW(LoadIdx(dir_ / "absent", dir_ / "absent2"), IngestError);
}

TEST(SynthesizeTest, OneSamplePerClass) {
  const Dataset d = Synthesize(2, 1, 5, 6.0, 1);
  EXPECT_EQ(d.size(), 2u);
  std::multiset<std::size_t> labels(d.labels.begin(), d.labels.end());
  EXPECT_EQ(labels, (std::multiset<std::size_t>{0, 1}));
  EXPECT_EQ(d.num_classes, 2u);
}

TEST(SynthesizeTest, SameSeedIsBitIdentical) {
  EXPECT_EQ(Synthesize(4, 30, 8, 5.0, 99), Synthesize(4, 30, 8, 5.0, 99));
  EXPECT_NE(Synthesize(4, 30, 8, 5.0, 99), Synthesize(4, 30, 8, 5.0, 100));
}

TEST(SynthesizeTest, FeaturesInUnitIntervalAndClassesBalanced) {
  const Dataset d = Synthesize(10, 50, 64, 6.0, 3);
  for (double v : d.features.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  std::vector<int> counts(10, 0);
  for (std::size_t label : d.labels) ++counts[label];
  for (int c : counts) EXPECT_EQ(c, 50);
}

TEST(SynthesizeTest, ClassMeansRespectSeparation) {
  for (auto [classes, dim] : {std::pair<std::size_t, std::size_t>{10, 64},
                              {12, 4}, {3, 3}}) {
    const Matrix means = SyntheticClassMeans(classes, dim, 6.0);
    double min_dist = INFINITY;
    for (std::size_t a = 0; a < classes; ++a) {
      for (std::size_t b = a + 1; b < classes; ++b) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          d2 += (means(a, j) - means(b, j)) * (means(a, j) - means(b, j));
        }
        min_dist = std::min(min_dist, std::sqrt(d2));
      }
    }
    EXPECT_GE(min_dist, 6.0 - 1e-9) << classes << "x" << dim;
  }
}

// Nearest-centroid classifier: centroids estimated from one draw, scored on
// an independent draw.
TEST(SynthesizeTest, NearestCentroidSeparatesWellSeparatedBlobs) {
  const std::size_t classes = 10;
  const std::size_t dim = 16;
  const Dataset fit = Synthesize(classes, 100, dim, 8.0, 21);
  const Dataset eval = Synthesize(classes, 100, dim, 8.0, 22);
  std::vector<std::vector<double>> centroid(classes, std::vector<double>(dim, 0.0));
  std::vector<double> count(classes, 0.0);
  for (std::size_t i = 0; i < fit.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) centroid[fit.labels[i]][j] += fit.features(i, j);
    count[fit.labels[i]] += 1.0;
  }
  for (std::size_t c = 0; c < classes; ++c) {
    for (double& v : centroid[c]) v /= count[c];
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < classes; ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        d += (eval.features(i, j) - centroid[c][j]) * (eval.features(i, j) - centroid[c][j]);
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    correct += best == eval.labels[i];
  }
  EXPECT_GT(static_cast<double>(correct) / eval.size(), 0.99);
}

TEST(SynthesizeTest, RejectsBadArguments) {
  EXPECT_THROW(Synthesize(0, 1, 1, 1.0, 1), ContractViolation);
  EXPECT_THROW(Synthesize(2, 1, 1, 0.0, 1), ContractViolation);
}

std::vector<std::size_t> ShardSizes(const std::vector<ClientShard>& shards) {
  std::vector<std::size_t> sizes;
  for (const auto& s : shards) sizes.push_back(s.data.size());
  return sizes;
}

TEST(PartitionTest, OneSamplePerClient) {
  const Dataset d = Synthesize(2, 5, 3, 4.0, 1);
  const auto shards = Partition(d, 10, 7);
  EXPECT_EQ(ShardSizes(shards), std::vector<std::size_t>(10, 1));
  for (std::size_t c = 0; c < 10; ++c) {
    EXPECT_EQ(shards[c].client_id, c);
    EXPECT_FALSE(shards[c].is_malicious);
  }
}

TEST(PartitionTest, UnevenSplitDiffersByAtMostOne) {
  const Dataset d = Synthesize(2, 5, 3, 4.0, 1);
  EXPECT_EQ(ShardSizes(Partition(d, 3, 7)), (std::vector<std::size_t>{4, 3, 3}));
}

TEST(PartitionTest, TooManyClientsThrows) {
  const Dataset d = Synthesize(2, 5, 3, 4.0, 1);
  EXPECT_THROW(Partition(d, 11, 7), ContractViolation);
}

TEST(PartitionTest, ShardsAreADisjointExactCover) {
  for (std::size_t n : {1u, 7u, 10u, 64u, 333u}) {
    for (std::size_t k : {1u, 2u, 3u, 7u, 50u}) {
      if (k > n) continue;
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto chunks = PartitionIndices(n, k, seed);
        ASSERT_EQ(chunks.size(), k);
        std::set<std::size_t> seen;
        std::size_t total = 0;
        std::size_t lo = n;
        std::size_t hi = 0;
        for (const auto& chunk : chunks) {
          seen.insert(chunk.begin(), chunk.end());
          total += chunk.size();
          lo = std::min(lo, chunk.size());
          hi = std::max(hi, chunk.size());
        }
        std::set<std::size_t> all;
        for (std::size_t i = 0; i < n; ++i) all.insert(i);
        EXPECT_EQ(seen, all);
        EXPECT_EQ(total, n);
        EXPECT_LE(hi - lo, 1u);
      }
    }
  }
}

TEST(PartitionTest, ShardContentsFollowIndices) {
  const Dataset d = Synthesize(3, 4, 2, 4.0, 5);
  const auto chunks = PartitionIndices(d.size(), 4, 9);
  const auto shards = Partition(d, 4, 9);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(shards[c].data, d.Subset(chunks[c]));
  }
}

std::size_t CountFlagged(const std::vector<ClientShard>& shards) {
  return std::count_if(shards.begin(), shards.end(),
                       [](const ClientShard& s) { return s.is_malicious; });
}

TEST(MarkMaliciousTest, ZeroFractionFlagsNobody) {
  const auto shards = Partition(Synthesize(10, 10, 4, 4.0, 1), 50, 2);
  EXPECT_EQ(CountFlagged(MarkMalicious(shards, 0.0, 3)), 0u);
}

TEST(MarkMaliciousTest, FiftyClientsAtTwentyPercentFlagsTen) {
  const auto shards = Partition(Synthesize(10, 10, 4, 4.0, 1), 50, 2);
  EXPECT_EQ(CountFlagged(MarkMalicious(shards, 0.2, 3)), 10u);
  EXPECT_EQ(CountFlagged(MarkMalicious(shards, 0.4, 3)), 20u);
  EXPECT_EQ(CountFlagged(MarkMalicious(shards, 0.5, 3)), 25u);
}

TEST(MarkMaliciousTest, SameSeedSameFlags) {
  const auto shards = Partition(Synthesize(10, 10, 4, 4.0, 1), 50, 2);
  const auto a = MarkMalicious(shards, 0.3, 17);
  const auto b = MarkMalicious(shards, 0.3, 17);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].is_malicious, b[i].is_malicious);
  }
}

TEST(MarkMaliciousTest, FlaggedSetsAreNestedAcrossFractions) {
  const auto shards = Partition(Synthesize(10, 10, 4, 4.0, 1), 50, 2);
  const auto small = MarkMalicious(shards, 0.1, 5);
  const auto large = MarkMalicious(shards, 0.4, 5);
  for (std::size_t i = 0; i < shards.size(); ++i) {
    if (small[i].is_malicious) EXPECT_TRUE(large[i].is_malicious);
  }
}

TEST(MarkMaliciousTest, FractionOutOfRangeThrows) {
  const auto shards = Partition(Synthesize(2, 5, 2, 4.0, 1), 5, 2);
  EXPECT_THROW(MarkMalicious(shards, 0.6, 1), ContractViolation);
  EXPECT_THROW(MarkMalicious(shards, -0.1, 1), ContractViolation);
}

ClientShard MaliciousShard(std::vector<std::size_t> labels) {
  ClientShard shard;
  shard.is_malicious = true;
  shard.data.features = Matrix(labels.size(), 2, 0.5);
  shard.data.labels = std::move(labels);
  shard.data.num_classes = 10;
  return shard;
}

TEST(PoisonLabelsTest, FlipsSourceToTarget) {
  const ClientShard out = PoisonLabels(MaliciousShard({5, 5, 3}), PoisonSpec{});
  EXPECT_EQ(out.data.labels, (std::vector<std::size_t>{3, 3, 3}));
}

TEST(PoisonLabelsTest, ShardWithoutSourceIsUnchanged) {
  const ClientShard in = MaliciousShard({0, 1, 3, 9});
  EXPECT_EQ(PoisonLabels(in, PoisonSpec{}).data, in.data);
}

TEST(PoisonLabelsTest, CountsAndFeaturesArePreserved) {
  auto shards = MarkMalicious(Partition(Synthesize(10, 40, 8, 5.0, 4), 20, 5), 0.5, 6);
  for (const ClientShard& shard : shards) {
    if (!shard.is_malicious) continue;
    const auto& before = shard.data.labels;
    const auto src = std::count(before.begin(), before.end(), 5u);
    const auto tgt = std::count(before.begin(), before.end(), 3u);
    const ClientShard after = PoisonLabels(shard, PoisonSpec{});
    const auto& labels = after.data.labels;
    EXPECT_EQ(std::count(labels.begin(), labels.end(), 5u), 0);
    EXPECT_EQ(std::count(labels.begin(), labels.end(), 3u), src + tgt);
    EXPECT_EQ(labels.size(), before.size());
    EXPECT_EQ(after.data.features, shard.data.features);
  }
}

TEST(PoisonLabelsTest, RejectsHonestShardAndBadSpec) {
  ClientShard honest = MaliciousShard({5});
  honest.is_malicious = false;
  EXPECT_THROW(PoisonLabels(honest, PoisonSpec{}), ContractViolation);
  EXPECT_THROW(PoisonLabels(MaliciousShard({5}), PoisonSpec{4, 4}), ContractViolation);
  EXPECT_THROW(PoisonLabels(MaliciousShard({5}), PoisonSpec{5, 10}), ContractViolation);
}

}  // namespace
}  // namespace lossguard
