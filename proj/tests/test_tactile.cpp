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

#include <cmath>
#include <numeric>

#include "htd/tactile/encoder.hpp"
#include "htd/tactile/layout.hpp"

namespace htd::tactile {
namespace {

TEST(Layout, RegionSizesAndPatchCount) {
  const auto layout = RegionLayout::standard();
  EXPECT_EQ(layout.patch_count(), 17);
  std::vector<int> lengths;
  for (const auto& r : layout.regions()) lengths.push_back(r.length);
  EXPECT_EQ(lengths, (std::vector<int>{185, 185, 185, 185, 210, 112}));
}

TEST(Layout, EnumerationLandsInDocumentedSlices) {
  const auto layout = RegionLayout::standard();
  std::vector<float> raw(kTactilePerHand);
  std::iota(raw.begin(), raw.end(), 0.0f);
  const auto regions = decompose_hand_tactile(raw, layout);
  ASSERT_EQ(regions.size(), 6u);
  // Independent bookkeeping: walk patch areas in raw order.
  const std::vector<std::vector<int>> areas = {{35, 50, 100}, {35, 50, 100}, {35, 50, 100},
                                               {35, 50, 100}, {35, 50, 25, 100}, {112}};
  int cursor = 0, total = 0;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    ASSERT_EQ(regions[r].patches.size(), areas[r].size());
    for (std::size_t p = 0; p < areas[r].size(); ++p) {
      const auto& m = regions[r].patches[p];
      ASSERT_EQ(static_cast<int>(m.values.size()), areas[r][p]);
      for (int i = 0; i < areas[r][p]; ++i) ASSERT_EQ(m.values[i], static_cast<float>(cursor + i));
      cursor += areas[r][p];
      ++total;
    }
  }
  EXPECT_EQ(cursor, 1062);
  EXPECT_EQ(total, 17);
  EXPECT_EQ(reassemble_hand_tactile(regions, layout), raw);
}

TEST(Layout, ZerosAndWrongLength) {
  const auto layout = RegionLayout::standard();
  const auto regions = decompose_hand_tactile(std::vector<float>(1062, 0.0f), layout);
  for (const auto& r : regions)
    for (const auto& p : r.patches)
      for (float v : p.values) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(decompose_hand_tactile(std::vector<float>(1061), layout), std::invalid_argument);
}

struct EncoderFixture : ::testing::Test {
  Rng rng{5};
  ParameterSet<double> params;
  EncoderConfig cfg;
  TactileEncoder enc;

  void SetUp() override {
    cfg.latent_dim = 16;
    cfg.channels = 4;
    cfg.fusion_hidden = 16;
    enc = TactileEncoder::create(params, cfg, RegionLayout::standard(), rng);
  }

  Tensor<double> random_raw(int n) {
    Tensor<double> t({n, kTactilePerHand});
    for (auto& v : t.values()) v = rng.uniform();
    return t;
  }
};

TEST_F(EncoderFixture, BranchDepthFollowsPatchSize) {
  // thumb: tip 35, top 50, mid 25, pad 100 -> shallow, shallow, shallow, deep
  const auto& thumb = enc.region_encoder(0);
  ASSERT_EQ(thumb.region, Region::kThumb);
  ASSERT_EQ(thumb.branches.size(), 4u);
  EXPECT_FALSE(thumb.branches[0].deep);
  EXPECT_FALSE(thumb.branches[1].deep);
  EXPECT_FALSE(thumb.branches[2].deep);
  EXPECT_TRUE(thumb.branches[3].deep);
  EXPECT_TRUE(enc.region_encoder(5).branches[0].deep);  // palm 112
}

TEST_F(EncoderFixture, HandEmbeddingShapeOrderAndDeterminism) {
  const ag::ParamBinding<double> p(std::as_const(params));
  const auto raw = random_raw(3);
  const auto z = enc.encode_hand(p, raw).value();
  EXPECT_EQ(z.shape(), (Shape{3, 6, 16}));
  EXPECT_TRUE(enc.encode_hand(p, raw).value() == z);
  // Slot k must equal encode_region on the k-th anatomical region.
  const Region order[] = {Region::kThumb, Region::kIndex, Region::kMiddle, Region::kRing, Region::kPinky, Region::kPalm};
  for (int slot = 0; slot < 6; ++slot) {
    const auto zr = enc.encode_region(p, slot, enc.region_patches(raw, order[slot])).value();
    for (int n = 0; n < 3; ++n)
      for (int i = 0; i < 16; ++i) ASSERT_EQ(z[(n * 6 + slot) * 16 + i], zr[n * 16 + i]);
  }
}

TEST_F(EncoderFixture, ZeroHandMatchesZeroPatches) {
  const ag::ParamBinding<double> p(std::as_const(params));
  const Tensor<double> zero({1, kTactilePerHand});
  const auto z = enc.encode_hand(p, zero).value();
  for (int slot = 0; slot < 6; ++slot) {
    std::vector<Tensor<double>> patches;
    for (const auto& ps : RegionLayout::standard().region(kEncodeOrder[slot]).patches)
      patches.emplace_back(Shape{1, 1, ps.rows, ps.cols});
    const auto zr = enc.encode_region(p, slot, patches).value();
    for (int i = 0; i < 16; ++i) EXPECT_EQ(z[slot * 16 + i], zr[i]);
  }
}

TEST_F(EncoderFixture, RejectsMismatchedPatches) {
  const ag::ParamBinding<double> p(std::as_const(params));
  std::vector<Tensor<double>> wrong = {Tensor<double>({1, 1, 5, 7}), Tensor<double>({1, 1, 5, 10})};
  EXPECT_THROW(enc.encode_region(p, 1, wrong), ShapeError);
  wrong.emplace_back(Shape{1, 1, 9, 10});
  EXPECT_THROW(enc.encode_region(p, 1, wrong), ShapeError);
}

TEST_F(EncoderFixture, EmbeddingIsContinuousInInputs) {
  // Central differences along a random direction against a directional
  // derivative taken from two much smaller steps.
  const ag::ParamBinding<double> p(std::as_const(params));
  auto raw = random_raw(1);
  const int cell = 600;  // inside the pinky pad
  auto eval = [&](double eps) {
    auto x = raw;
    x[cell] += eps;
    return enc.encode_hand(p, x).value();
  };
  const auto base = eval(0.0);
  for (double eps : {1e-3, 1e-4}) {
    const auto up = eval(eps), down = eval(-eps);
    const auto up_small = eval(eps / 10), down_small = eval(-eps / 10);
    double num = 0, den = 0, change = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double d1 = (up[i] - down[i]) / (2 * eps);
      const double d2 = (up_small[i] - down_small[i]) / (2 * eps / 10);
      num += (d1 - d2) * (d1 - d2);
      den += d2 * d2;
      change = std::max(change, std::abs(up[i] - base[i]));
    }
    EXPECT_GT(den, 0.0);
    EXPECT_LT(std::sqrt(num / den), 1e-3);
    EXPECT_LT(change, 10 * eps);  // O(eps) response
  }
}

TEST_F(EncoderFixture, FreshTeacherMatchesStudent) {
  auto teacher = TeacherEncoderState<double>::from_student(params, 0.996);
  const ag::ParamBinding<double> p(std::as_const(params));
  const auto raw = random_raw(2);
  EXPECT_TRUE(teacher_encode(enc, teacher, raw) == enc.encode_hand(p, raw).value());
}

TEST_F(EncoderFixture, TeacherReceivesNoGradient) {
  auto teacher = TeacherEncoderState<double>::from_student(params, 0.996);
  const auto raw = random_raw(2);
  ag::ParamBinding<double> student(params);
  const auto target = ag::constant(teacher_encode(enc, teacher, raw));
  auto loss = ag::cosine_distance_mean(ag::reshape(enc.encode_hand(student, raw), {12, 16}),
                                       ag::reshape(target, {12, 16}), 1e-8);
  ag::backward(loss);
  EXPECT_GT(params.grad_squared_norm(), 0.0);
  EXPECT_EQ(teacher.params.grad_squared_norm(), 0.0);
}

TEST(Ema, HandEvaluatedUpdate) {
  ParameterSet<double> teacher, student;
  teacher.add("w", Tensor<double>({4}, 0.0));
  student.add("w", Tensor<double>({4}, 1.0));
  ema_update(teacher, student, 0.9);
  for (double v : teacher[0].value.values()) EXPECT_NEAR(v, 0.1, 1e-15);
}

TEST(Ema, FixedPointAndSlowLimit) {
  Rng rng(1);
  ParameterSet<double> student;
  student.add_normal("w", {32}, 1.0, rng);
  auto teacher = student;
  ema_update(teacher, student, 0.37);
  EXPECT_TRUE(teacher[0].value == student[0].value);

  ParameterSet<double> t2;
  t2.add("w", Tensor<double>({32}, 0.0));
  const double alpha = 1.0 - 1e-12;
  ema_update(t2, student, alpha);
  for (std::size_t i = 0; i < 32; ++i)
    EXPECT_LE(std::abs(t2[0].value[i]), 1e-12 * std::abs(student[0].value[i]) * (1 + 1e-3));
}

TEST(Ema, GeometricContraction) {
  Rng rng(2);
  ParameterSet<double> student, teacher;
  student.add_normal("w", {64}, 1.0, rng);
  teacher.add_normal("w", {64}, 1.0, rng);
  auto dist = [&] {
    double acc = 0;
    for (std::size_t i = 0; i < 64; ++i) acc += std::pow(teacher[0].value[i] - student[0].value[i], 2);
    return std::sqrt(acc);
  };
  const double d0 = dist();
  const double alpha = 0.996;
  for (int k = 1; k <= 100; ++k) {
    ema_update(teacher, student, alpha);
    EXPECT_NEAR(dist() / d0, std::pow(alpha, k), 1e-6 * std::pow(alpha, k));
  }
}

TEST(Ema, RejectsLayoutMismatch) {
  ParameterSet<double> a, b;
  a.add("w", Tensor<double>({3}));
  b.add("w", Tensor<double>({4}));
  EXPECT_THROW(ema_update(a, b, 0.5), std::invalid_argument);
  EXPECT_THROW(ema_update(a, a, 1.0), std::invalid_argument);
}

}  // namespace
}  // namespace htd::tactile
