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

#ifndef HTD_DATA_EPISODE_HPP_
#define HTD_DATA_EPISODE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/tactile/layout.hpp"

namespace htd::data {

inline constexpr int kSchemaVersion = 1;
inline constexpr int kImageViews = 4;

enum class ImageView { kHeadLeft = 0, kHeadRight, kWristLeft, kWristRight };

inline const char* view_name(int v) {
  static constexpr const char* names[] = {"head_left", "head_right", "wrist_left", "wrist_right"};
  return names[v];
}

/// Observation layout. Tactile width per hand is fixed at 1062.
struct ModalitySchema {
  int image_height = 64;
  int image_width = 64;
  int body_dim = 29;
  int hand_joints = 6;

  int image_size() const { return 3 * image_height * image_width; }
  int hand_dim() const { return 2 * hand_joints; }
  static constexpr int tactile_dim() { return tactile::kHands * tactile::kTactilePerHand; }

  void validate() const {
    if (image_height < 4 || image_width < 4) throw std::invalid_argument("images must be at least 4x4");
    if (body_dim < 1 || hand_joints < 1) throw std::invalid_argument("proprioception dims must be positive");
  }

  bool operator==(const ModalitySchema&) const = default;
};

enum class ActionModality { kEndEffector = 0, kTorso, kVelocity, kHand };
inline constexpr int kActionModalities = 4;

inline const char* action_modality_name(ActionModality m) {
  switch (m) {
    case ActionModality::kEndEffector: return "end_effector";
    case ActionModality::kTorso: return "torso";
    case ActionModality::kVelocity: return "velocity";
    case ActionModality::kHand: return "hand";
  }
  return "?";
}

/// Action vector layout: [end-effector 18 | torso 4 | velocity 3 | hand 2*J].
/// End-effector = per wrist (left, right): position xyz + 6-D rotation (two
/// basis columns). Torso = roll, pitch, yaw, height. Velocity = vx, vy, wz.
struct ActionSchema {
  int hand_joints = 6;
  int horizon = 8;        // action chunk length h
  int dream_horizon = 8;  // future touch length tau

  static constexpr int kEndEffectorDim = 18;
  static constexpr int kTorsoDim = 4;
  static constexpr int kVelocityDim = 3;

  int dim(ActionModality m) const {
    switch (m) {
      case ActionModality::kEndEffector: return kEndEffectorDim;
      case ActionModality::kTorso: return kTorsoDim;
      case ActionModality::kVelocity: return kVelocityDim;
      case ActionModality::kHand: return 2 * hand_joints;
    }
    return 0;
  }
  int offset(ActionModality m) const {
    int off = 0;
    for (int i = 0; i < static_cast<int>(m); ++i) off += dim(static_cast<ActionModality>(i));
    return off;
  }
  int total() const {
    int t = 0;
    for (int i = 0; i < kActionModalities; ++i) t += dim(static_cast<ActionModality>(i));
    return t;
  }

  void validate() const {
    if (horizon < 1 || dream_horizon < 1) throw std::invalid_argument("horizons must be >= 1");
    if (hand_joints < 1) throw std::invalid_argument("hand_joints must be >= 1");
  }
};

enum class Phase : std::uint8_t { kApproach = 0, kContact, kGrasp, kTransport, kRelease };

inline const char* phase_name(Phase p) {
  static constexpr const char* names[] = {"approach", "contact", "grasp", "transport", "release"};
  return names[static_cast<int>(p)];
}

/// One demonstration, stored field-major: every stream is a contiguous
/// [T x width] float array.
struct Episode {
  std::uint64_t seed = 0;
  std::string scenario;
  int length = 0;

  std::vector<float> images;        // T x 4 views x 3 x H x W (channel-planar)
  std::vector<float> body;          // T x body_dim
  std::vector<float> hand_proprio;  // T x 2J (left hand then right)
  std::vector<float> hand_force;    // T x 2J
  std::vector<float> tactile;       // T x 2 x 1062 (left hand then right)
  std::vector<float> action;        // T x action_dim

  std::vector<Phase> phases;          // T
  std::vector<std::uint8_t> contact;  // T x 2, per hand

  bool in_contact(int t) const { return contact[2 * t] || contact[2 * t + 1]; }

  bool operator==(const Episode&) const = default;
};

/// Widths of every per-timestep stream, derived from the schemas.
struct StreamWidths {
  int images, body, hand_proprio, hand_force, tactile, action;

  static StreamWidths of(const ModalitySchema& m, const ActionSchema& a) {
    return {kImageViews * m.image_size(), m.body_dim, m.hand_dim(), m.hand_dim(), ModalitySchema::tactile_dim(),
            a.total()};
  }
  std::size_t per_step() const {
    return static_cast<std::size_t>(images) + body + hand_proprio + hand_force + tactile + action;
  }
};

inline std::span<const float> row(const std::vector<float>& stream, int width, int t) {
  return std::span<const float>(stream).subspan(static_cast<std::size_t>(t) * width, width);
}

/// Throws unless every stream agrees with the episode length.
inline void validate_episode(const Episode& ep, const ModalitySchema& m, const ActionSchema& a) {
  const auto w = StreamWidths::of(m, a);
  const auto T = static_cast<std::size_t>(ep.length);
  auto check = [&](const std::vector<float>& v, int width, const char* name) {
    if (v.size() != T * width)
      throw std::invalid_argument(std::string("episode stream '") + name + "' has wrong length");
  };
  check(ep.images, w.images, "images");
  check(ep.body, w.body, "body");
  check(ep.hand_proprio, w.hand_proprio, "hand_proprio");
  check(ep.hand_force, w.hand_force, "hand_force");
  check(ep.tactile, w.tactile, "tactile");
  check(ep.action, w.action, "action");
  if (ep.phases.size() != T || ep.contact.size() != 2 * T)
    throw std::invalid_argument("episode labels have wrong length");
}

/// Per-channel statistics for one stream.
struct ChannelStats {
  std::vector<float> mean;
  std::vector<float> stddev;  // floored at kStdFloor

  static constexpr float kStdFloor = 1e-6f;

  bool operator==(const ChannelStats&) const = default;

  float normalize(float x, std::size_t c) const { return (x - mean[c]) / stddev[c]; }
  float denormalize(float x, std::size_t c) const { return x * stddev[c] + mean[c]; }
};

/// Statistics over the training split for every non-image stream.
struct NormalizationStats {
  ChannelStats body, hand_proprio, hand_force, tactile, action;

  bool operator==(const NormalizationStats&) const = default;
};

inline ChannelStats compute_channel_stats(const std::vector<const std::vector<float>*>& streams, int width) {
  std::vector<double> sum(width, 0.0), sq(width, 0.0);
  std::size_t rows = 0;
  for (const auto* s : streams) {
    const std::size_t n = s->size() / width;
    for (std::size_t r = 0; r < n; ++r)
      for (int c = 0; c < width; ++c) {
        const double v = (*s)[r * width + c];
        sum[c] += v;
        sq[c] += v * v;
      }
    rows += n;
  }
  ChannelStats st;
  st.mean.resize(width);
  st.stddev.resize(width);
  for (int c = 0; c < width; ++c) {
    const double m = rows ? sum[c] / rows : 0.0;
    const double var = rows ? std::max(0.0, sq[c] / rows - m * m) : 1.0;
    st.mean[c] = static_cast<float>(m);
    st.stddev[c] = std::max(static_cast<float>(std::sqrt(var)), ChannelStats::kStdFloor);
  }
  return st;
}

inline NormalizationStats compute_normalization(const std::vector<Episode>& episodes, const ModalitySchema& m,
                                                const ActionSchema& a) {
  const auto w = StreamWidths::of(m, a);
  auto collect = [&](auto member) {
    std::vector<const std::vector<float>*> out;
    for (const auto& ep : episodes) out.push_back(&(ep.*member));
    return out;
  };
  NormalizationStats s;
  s.body = compute_channel_stats(collect(&Episode::body), w.body);
  s.hand_proprio = compute_channel_stats(collect(&Episode::hand_proprio), w.hand_proprio);
  s.hand_force = compute_channel_stats(collect(&Episode::hand_force), w.hand_force);
  s.tactile = compute_channel_stats(collect(&Episode::tactile), w.tactile);
  s.action = compute_channel_stats(collect(&Episode::action), w.action);
  return s;
}

/// A dataset: schemas, episodes, and statistics.
struct Dataset {
  ModalitySchema schema;
  ActionSchema actions;
  tactile::RegionLayout layout = tactile::RegionLayout::standard();
  NormalizationStats stats;
  std::vector<Episode> episodes;
};

}  // namespace htd::data

#endif  // HTD_DATA_EPISODE_HPP_
