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

#ifndef HTD_POLICY_CONFIG_HPP_
#define HTD_POLICY_CONFIG_HPP_

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/data/episode.hpp"
#include "htd/tactile/encoder.hpp"

namespace htd::policy {

using data::ActionModality;

/// Training/architecture variants. Names are the CLI spellings.
enum class Variant {
  kNoTouch,      // no force or tactile input, no dreaming
  kNoDream,      // touch input, dream heads disabled
  kDreamRaw,     // force dreaming plus raw 2124-d tactile regression
  kDreamLatent,  // force dreaming plus EMA-supervised tactile latents
};

inline constexpr std::array<Variant, 4> kAllVariants = {Variant::kNoTouch, Variant::kNoDream, Variant::kDreamRaw,
                                                        Variant::kDreamLatent};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kNoTouch: return "no-touch";
    case Variant::kNoDream: return "no-dream";
    case Variant::kDreamRaw: return "dream-raw";
    case Variant::kDreamLatent: return "dream-latent";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : kAllVariants)
    if (s == variant_name(v)) return v;
  throw std::invalid_argument("unknown variant '" + s + "' (expected no-touch, no-dream, dream-raw, dream-latent)");
}

/// Decoder output positions, one contiguous span per action modality in
/// ActionModality order (end-effector, torso, velocity, hand).
struct OutputTokenLayout {
  std::array<int, data::kActionModalities> counts{4, 2, 2, 4};

  int count(ActionModality m) const { return counts[static_cast<int>(m)]; }
  int offset(ActionModality m) const {
    int off = 0;
    for (int i = 0; i < static_cast<int>(m); ++i) off += counts[i];
    return off;
  }
  int total() const {
    int t = 0;
    for (int c : counts) t += c;
    return t;
  }
  void validate() const {
    for (int c : counts)
      if (c < 1) throw std::invalid_argument("every action modality needs at least one output token");
  }
};

/// Input token kinds in sequence order.
enum class InputModality {
  kHeadLeft = 0, kHeadRight, kWristLeft, kWristRight, kBody, kHandProprio, kHandForce, kTactileLeft, kTactileRight
};
inline constexpr int kInputModalities = 9;

inline const char* input_modality_name(InputModality m) {
  static constexpr const char* names[] = {"head_left",    "head_right", "wrist_left",   "wrist_right", "body",
                                          "hand_proprio", "hand_force", "tactile_left", "tactile_right"};
  return names[static_cast<int>(m)];
}

struct PolicyConfig {
  data::ModalitySchema schema;
  data::ActionSchema actions;
  Variant variant = Variant::kDreamLatent;

  int width = 256;  // d
  int encoder_layers = 3;
  int decoder_layers = 3;
  int heads = 4;
  int ffn_width = 512;

  int image_tokens = 4;    // per view
  int state_tokens = 2;    // body, hand proprio, hand force
  int tactile_tokens = 4;  // per hand
  OutputTokenLayout outputs;

  std::array<int, 3> cnn_channels{16, 32, 32};
  int state_features = 4;  // feature sequence length from each state MLP
  int state_hidden = 64;
  tactile::EncoderConfig tactile;

  // Loss weights.
  double lambda_force = 1.0;
  double lambda_tactile = 1.0;
  double beta = 0.5;
  double huber_delta = 1.0;

  bool uses_touch() const { return variant != Variant::kNoTouch; }
  bool dreams() const { return variant == Variant::kDreamRaw || variant == Variant::kDreamLatent; }

  /// Token count per input modality; zero when the variant drops it.
  int tokens(InputModality m) const {
    switch (m) {
      case InputModality::kHeadLeft:
      case InputModality::kHeadRight:
      case InputModality::kWristLeft:
      case InputModality::kWristRight: return image_tokens;
      case InputModality::kBody:
      case InputModality::kHandProprio: return state_tokens;
      case InputModality::kHandForce: return uses_touch() ? state_tokens : 0;
      case InputModality::kTactileLeft:
      case InputModality::kTactileRight: return uses_touch() ? tactile_tokens : 0;
    }
    return 0;
  }
  int input_offset(InputModality m) const {
    int off = 0;
    for (int i = 0; i < static_cast<int>(m); ++i) off += tokens(static_cast<InputModality>(i));
    return off;
  }
  int input_token_count() const { return input_offset(InputModality::kTactileRight) + tokens(InputModality::kTactileRight); }
  int output_token_count() const { return outputs.total(); }

  void validate() const {
    schema.validate();
    actions.validate();
    tactile.validate();
    outputs.validate();
    if (actions.hand_joints != schema.hand_joints) throw std::invalid_argument("action and observation hand joints differ");
    if (width < 1 || heads < 1 || width % heads != 0) throw std::invalid_argument("width must be a positive multiple of heads");
    if (encoder_layers < 1 || decoder_layers < 1) throw std::invalid_argument("trunk needs at least one layer each");
    if (image_tokens < 1 || state_tokens < 1 || tactile_tokens < 1) throw std::invalid_argument("token counts must be >= 1");
    if (state_features < 1 || state_hidden < 1 || ffn_width < 1) throw std::invalid_argument("sizes must be positive");
    for (int c : cnn_channels)
      if (c < 1) throw std::invalid_argument("cnn channels must be positive");
    if (schema.image_height < 8 || schema.image_width < 8) throw std::invalid_argument("images must be at least 8x8");
    if (lambda_force < 0 || lambda_tactile < 0 || beta < 0) throw std::invalid_argument("loss weights must be >= 0");
    if (!(huber_delta > 0)) throw std::invalid_argument("huber delta must be > 0");
  }
};

}  // namespace htd::policy

#endif  // HTD_POLICY_CONFIG_HPP_
