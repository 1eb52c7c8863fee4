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

// Named configurations. "compact" is sized so that a few thousand steps run
// in minutes on one CPU core; "default" keeps the library defaults.

#ifndef HTD_TRAINING_PRESETS_HPP_
#define HTD_TRAINING_PRESETS_HPP_

#include <stdexcept>
#include <string>

#include "htd/data/synthetic.hpp"
#include "htd/policy/config.hpp"
#include "htd/training/trainer.hpp"

namespace htd::training {

struct Preset {
  policy::PolicyConfig policy;
  TrainConfig train;
  int episode_length = 40;
};

inline Preset compact_preset() {
  Preset p;
  auto& c = p.policy;
  c.schema.image_height = 16;
  c.schema.image_width = 16;
  c.actions.horizon = 4;
  c.actions.dream_horizon = 4;
  c.width = 32;
  c.heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.ffn_width = 64;
  c.image_tokens = 1;
  c.state_tokens = 1;
  c.tactile_tokens = 2;
  c.outputs.counts = {1, 1, 1, 1};
  c.cnn_channels = {4, 8, 8};
  c.state_features = 2;
  c.state_hidden = 16;
  c.tactile.latent_dim = 16;
  c.tactile.channels = 2;
  c.tactile.fusion_hidden = 32;
  p.train.batch_size = 16;
  p.train.learning_rate = 1e-3;
  return p;
}

inline Preset named_preset(const std::string& name) {
  if (name == "compact") return compact_preset();
  if (name == "default") return Preset{};
  throw std::invalid_argument("unknown preset '" + name + "' (expected compact or default)");
}

/// Generator settings that match a policy config's schemas.
inline data::GeneratorConfig generator_for(const policy::PolicyConfig& cfg, int episode_length) {
  data::GeneratorConfig g;
  g.schema = cfg.schema;
  g.actions = cfg.actions;
  g.episode_length = episode_length;
  return g;
}

}  // namespace htd::training

#endif  // HTD_TRAINING_PRESETS_HPP_
