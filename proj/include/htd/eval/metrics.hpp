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

// Scalar metrics over dreamed touch: force error, latent similarity and the
// contact-vs-free latent spread used to detect representation collapse.

#ifndef HTD_EVAL_METRICS_HPP_
#define HTD_EVAL_METRICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/core/tensor.hpp"
#include "htd/data/episode.hpp"
#include "htd/tactile/encoder.hpp"
#include "htd/training/trainer.hpp"

namespace htd::eval {

/// Mean absolute error per hand. Rows are timesteps of width 2J, left hand
/// in the first J columns.
inline std::array<double, tactile::kHands> force_mae(const Tensor<float>& predicted, const Tensor<float>& target) {
  if (predicted.shape() != target.shape() || predicted.rank() != 2 || predicted.dim(1) % 2 != 0)
    throw std::invalid_argument("force_mae: shapes " + shape_string(predicted.shape()) + " and " +
                                shape_string(target.shape()) + " must match as [N, 2J]");
  const int n = predicted.dim(0), joints = predicted.dim(1) / 2;
  std::array<double, tactile::kHands> out{};
  if (n == 0) return out;
  for (int r = 0; r < n; ++r)
    for (int h = 0; h < tactile::kHands; ++h)
      for (int j = 0; j < joints; ++j) {
        const std::size_t i = static_cast<std::size_t>(r) * predicted.dim(1) + h * joints + j;
        out[h] += std::abs(static_cast<double>(predicted[i]) - static_cast<double>(target[i]));
      }
  for (auto& v : out) v /= static_cast<double>(n) * joints;
  return out;
}

/// L2 similarity 1 / (1 + |a - b|), in (0, 1] and 1 only for identical inputs.
inline double latent_similarity(std::span<const float> predicted, std::span<const float> target) {
  if (predicted.size() != target.size())
    throw std::invalid_argument("latent_similarity: sizes " + std::to_string(predicted.size()) + " and " +
                                std::to_string(target.size()) + " differ");
  double sq = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = static_cast<double>(predicted[i]) - static_cast<double>(target[i]);
    sq += d * d;
  }
  return 1.0 / (1.0 + std::sqrt(sq));
}

/// Latents of the encoder that supplies the training targets: the EMA teacher,
/// or the student itself when the run used live targets. raw is [N, 1062];
/// the result is [N, 6, d_z].
inline Tensor<float> target_encoder_latents(const training::TrainState<float>& st, const Tensor<float>& raw) {
  const auto& enc = st.net.tactile_encoder();
  if (st.train.targets == training::TargetMode::kEmaTeacher) return tactile::teacher_encode(enc, st.teacher, raw);
  const ag::ParamBinding<float> frozen(st.student.tactile);
  return enc.encode_hand(frozen, raw).value();
}

/// Spread of target latents split by the per-hand contact label. Variances
/// are mean squared distances to the group centroid, summed over regions.
struct CollapseStats {
  std::size_t contact_frames = 0;
  std::size_t free_frames = 0;
  double contact_variance = 0;
  double free_variance = 0;
  double ratio = 0;  // contact_variance / free_variance
};

inline CollapseStats collapse_stats(const training::TrainState<float>& st, const data::Dataset& ds,
                                    int chunk_frames = 256) {
  const int d = st.net.tactile_encoder().latent_dim();
  const int width = tactile::kTactilePerHand;
  const int per_frame = tactile::kRegionsPerHand * d;
  // Welford-free two pass: collect latents, then centroids and spreads.
  std::vector<float> contact, free;
  std::vector<float> pending;
  std::vector<std::uint8_t> labels;
  auto flush = [&] {
    if (labels.empty()) return;
    const int n = static_cast<int>(labels.size());
    const auto z = target_encoder_latents(st, Tensor<float>({n, width}, pending));
    for (int i = 0; i < n; ++i) {
      auto& dst = labels[i] ? contact : free;
      dst.insert(dst.end(), z.data() + static_cast<std::size_t>(i) * per_frame,
                 z.data() + static_cast<std::size_t>(i + 1) * per_frame);
    }
    pending.clear();
    labels.clear();
  };
  for (const auto& ep : ds.episodes)
    for (int t = 0; t < ep.length; ++t)
      for (int h = 0; h < tactile::kHands; ++h) {
        const auto* src = ep.tactile.data() + (static_cast<std::size_t>(t) * tactile::kHands + h) * width;
        pending.insert(pending.end(), src, src + width);
        labels.push_back(ep.contact[2 * t + h]);
        if (static_cast<int>(labels.size()) == chunk_frames) flush();
      }
  flush();

  auto spread = [&](const std::vector<float>& z) {
    const std::size_t n = z.size() / per_frame;
    if (n == 0) return 0.0;
    std::vector<double> mean(per_frame, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < per_frame; ++k) mean[k] += z[i * per_frame + k];
    for (auto& m : mean) m /= static_cast<double>(n);
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < per_frame; ++k) {
        const double dv = z[i * per_frame + k] - mean[k];
        acc += dv * dv;
      }
    return acc / static_cast<double>(n);
  };
  CollapseStats out;
  out.contact_frames = contact.size() / per_frame;
  out.free_frames = free.size() / per_frame;
  if (out.contact_frames == 0 || out.free_frames == 0)
    throw std::invalid_argument("collapse_stats: dataset needs both contact and contact-free frames");
  out.contact_variance = spread(contact);
  out.free_variance = spread(free);
  out.ratio = out.contact_variance / std::max(out.free_variance, 1e-30);
  return out;
}

}  // namespace htd::eval

#endif  // HTD_EVAL_METRICS_HPP_
