// Copyright 2026 The HTD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "htd/data/batch.hpp"
#include "htd/data/io.hpp"
#include "htd/data/synthetic.hpp"

namespace htd::data {
namespace {

GeneratorConfig small_config() {
  GeneratorConfig cfg;
  cfg.schema.image_height = 16;
  cfg.schema.image_width = 16;
  cfg.actions.horizon = 4;
  cfg.actions.dream_horizon = 4;
  cfg.episode_length = 24;
  return cfg;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("htd_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(Synthetic, SameSeedGivesIdenticalEpisodes) {
  const auto cfg = small_config();
  const auto a = generate_synthetic_dataset(1, 7, cfg);
  const auto b = generate_synthetic_dataset(1, 7, cfg);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_TRUE(a[0] == b[0]);
  const auto c = generate_synthetic_dataset(1, 8, cfg);
  EXPECT_FALSE(a[0] == c[0]);
}

TEST(Synthetic, StreamsShareEpisodeLength) {
  const auto cfg = small_config();
  const auto eps = generate_synthetic_dataset(5, 3, cfg);
  ASSERT_EQ(eps.size(), 5u);
  for (const auto& ep : eps) {
    EXPECT_EQ(ep.length, cfg.episode_length);
    EXPECT_NO_THROW(validate_episode(ep, cfg.schema, cfg.actions));
  }
}

TEST(Synthetic, NonContactTactileStaysBelowNoiseFloor) {
  // Away from contact every cell is a single uniform draw in [0, noise), so the
  // frame maximum is bounded by the noise amplitude and far below the bump peak.
  auto cfg = small_config();
  const auto eps = generate_synthetic_dataset(12, 11, cfg);
  int non_contact = 0, contact = 0;
  for (const auto& ep : eps)
    for (int t = 0; t < ep.length; ++t) {
      float mx = 0;
      for (float v : row(ep.tactile, ModalitySchema::tactile_dim(), t)) mx = std::max(mx, v);
      if (!ep.in_contact(t)) {
        ++non_contact;
        EXPECT_LT(mx, cfg.tactile_noise);
        EXPECT_GE(mx, 0.0f);
      } else if (ep.phases[t] == Phase::kTransport) {
        ++contact;
        EXPECT_GT(mx, 0.25f * cfg.contact_peak);
      }
    }
  EXPECT_GT(non_contact, 0);
  EXPECT_GT(contact, 0);
}

TEST(Synthetic, RejectsBadScenarioWeights) {
  auto cfg = small_config();
  cfg.mix = {{"pinch", -1.0}, {"power", 2.0}};
  EXPECT_THROW(generate_synthetic_dataset(2, 1, cfg), std::invalid_argument);
  cfg.mix = {{"pinch", 0.0}, {"power", 0.0}};
  EXPECT_THROW(generate_synthetic_dataset(2, 1, cfg), std::invalid_argument);
  cfg.mix = {{"juggle", 1.0}};
  EXPECT_THROW(generate_synthetic_dataset(2, 1, cfg), std::invalid_argument);
  cfg.mix = {{"power", 1.0}, {"pinch", 0.0}};
  for (const auto& ep : generate_synthetic_dataset(20, 5, cfg)) EXPECT_EQ(ep.scenario, "power");
  EXPECT_THROW(generate_synthetic_dataset(0, 1, small_config()), std::invalid_argument);
}

TEST(DatasetIo, RoundTripIsBitExact) {
  const auto ds = make_synthetic_dataset(3, 7, small_config());
  const auto dir = scratch_dir("roundtrip");
  write_dataset(ds, dir);
  const auto back = read_dataset(dir);
  ASSERT_EQ(back.episodes.size(), ds.episodes.size());
  for (std::size_t i = 0; i < ds.episodes.size(); ++i) EXPECT_TRUE(back.episodes[i] == ds.episodes[i]);
  EXPECT_TRUE(back.stats == ds.stats);
  EXPECT_TRUE(back.schema == ds.schema);
  EXPECT_TRUE(back.layout == ds.layout);
  std::filesystem::remove_all(dir);
}

TEST(DatasetIo, RejectsEditedTactileShape) {
  const auto ds = make_synthetic_dataset(1, 7, small_config());
  const auto dir = scratch_dir("schema");
  auto manifest = write_dataset(ds, dir);
  manifest["tactile_per_hand"] = 1000;
  std::ofstream(dir / "manifest.json") << manifest.dump();
  EXPECT_THROW(read_dataset(dir), SchemaError);
  manifest["tactile_per_hand"] = 1062;
  manifest["schema_version"] = 99;
  std::ofstream(dir / "manifest.json") << manifest.dump();
  EXPECT_THROW(read_dataset(dir), SchemaError);
  std::filesystem::remove_all(dir);
}

TEST(DatasetIo, RejectsTruncatedBlob) {
  const auto ds = make_synthetic_dataset(1, 7, small_config());
  const auto dir = scratch_dir("truncated");
  write_dataset(ds, dir);
  const auto blob = dir / "ep_0.bin";
  std::filesystem::resize_file(blob, std::filesystem::file_size(blob) - 4);
  EXPECT_THROW(read_dataset(dir), IoError);
  std::filesystem::remove_all(dir);
}

TEST(DatasetIo, EmptyDatasetRoundTrips) {
  Dataset ds;
  ds.stats = compute_normalization({}, ds.schema, ds.actions);
  const auto dir = scratch_dir("empty");
  const auto manifest = write_dataset(ds, dir);
  EXPECT_TRUE(manifest.at("episodes").empty());
  const auto back = read_dataset(dir);
  EXPECT_TRUE(back.episodes.empty());
  std::filesystem::remove_all(dir);
}

TEST(Batch, BoundaryEpisodeHasOneSamplePosition) {
  EXPECT_EQ(valid_sample_count(8, 4, 4), 1);
  EXPECT_EQ(valid_sample_count(7, 4, 4), 0);
  EXPECT_EQ(valid_sample_count(24, 4, 4), 17);

  auto cfg = small_config();
  cfg.episode_length = 8;
  auto ds = make_synthetic_dataset(2, 1, cfg);
  const auto refs = valid_samples(ds.episodes, 4, 4);
  ASSERT_EQ(refs.size(), 2u);
  EXPECT_EQ(refs[0].t, 0);
  EXPECT_EQ(refs[1].t, 0);
  Rng rng(0);
  EXPECT_NO_THROW(sample_training_batch<float>(ds, 3, rng));
  ds.actions.horizon = 5;
  EXPECT_THROW(sample_training_batch<float>(ds, 3, rng), std::invalid_argument);
}

TEST(Batch, ShapesAndDeterminism) {
  const auto ds = make_synthetic_dataset(3, 7, small_config());
  Rng r1(42), r2(42);
  const auto a = sample_training_batch<float>(ds, 4, r1);
  const auto b = sample_training_batch<float>(ds, 4, r2);
  EXPECT_EQ(a.actions.shape(), (Shape{4, 4, 37}));
  EXPECT_EQ(a.future_force.shape(), (Shape{4, 4, 12}));
  EXPECT_EQ(a.future_tactile.shape(), (Shape{4, 4, 2, 1062}));
  EXPECT_EQ(a.obs.images.shape(), (Shape{4, 4, 3, 16, 16}));
  EXPECT_EQ(a.obs.tactile.shape(), (Shape{4, 2, 1062}));
  EXPECT_EQ(a.refs, b.refs);
  EXPECT_TRUE(a.actions == b.actions);
  EXPECT_TRUE(a.obs.images == b.obs.images);
}

TEST(Batch, TargetsComeFromTheSampledEpisode) {
  const auto ds = make_synthetic_dataset(2, 9, small_config());
  const auto batch = make_batch<double>(ds, {{1, 3}});
  const int A = ds.actions.total();
  const auto& ep = ds.episodes[1];
  for (int l = 0; l < 4; ++l)
    for (int c = 0; c < A; ++c) {
      const double raw = ep.action[(3 + 1 + l) * A + c];
      const double restored = batch.actions[l * A + c] * ds.stats.action.stddev[c] + ds.stats.action.mean[c];
      EXPECT_NEAR(restored, raw, 1e-6 * std::max(1.0, std::abs(raw)));
    }
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 2124; ++i)
      ASSERT_EQ(batch.future_tactile[k * 2124 + i], ep.tactile[(3 + 1 + k) * 2124 + i]);
}

TEST(Normalization, StdFloorAndInverse) {
  const auto st = compute_channel_stats({}, 3);
  for (float s : st.stddev) EXPECT_GE(s, ChannelStats::kStdFloor);
  std::vector<float> constant(30, 2.5f);
  const auto c = compute_channel_stats({&constant}, 3);
  EXPECT_FLOAT_EQ(c.stddev[0], ChannelStats::kStdFloor);
  EXPECT_FLOAT_EQ(c.normalize(2.5f, 0), 0.0f);
  const auto ds = make_synthetic_dataset(2, 4, small_config());
  for (std::size_t k = 0; k < ds.episodes[0].body.size(); ++k) {
    const float x = ds.episodes[0].body[k];
    const std::size_t ch = k % ds.schema.body_dim;
    const float back = ds.stats.body.denormalize(ds.stats.body.normalize(x, ch), ch);
    EXPECT_NEAR(back, x, 1e-6f * std::max(1.0f, std::abs(x)) + 1e-6f);
  }
}

}  // namespace
}  // namespace htd::data
