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

// Small shared configurations for the unit tests.

#ifndef HTD_TESTS_FIXTURES_HPP_
#define HTD_TESTS_FIXTURES_HPP_

#include "htd/core/rng.hpp"
#include "htd/data/batch.hpp"
#include "htd/data/synthetic.hpp"
#include "htd/policy/config.hpp"

namespace htd::testing {

inline policy::PolicyConfig tiny_policy_config(policy::Variant variant = policy::Variant::kDreamLatent) {
  policy::PolicyConfig cfg;
  cfg.variant = variant;
  cfg.schema.image_height = 8;
  cfg.schema.image_width = 8;
  cfg.schema.body_dim = 5;
  cfg.schema.hand_joints = 2;
  cfg.actions.hand_joints = 2;
  cfg.actions.horizon = 2;
  cfg.actions.dream_horizon = 2;
  cfg.width = 8;
  cfg.heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.ffn_width = 8;
  cfg.image_tokens = 1;
  cfg.state_tokens = 1;
  cfg.tactile_tokens = 1;
  cfg.outputs.counts = {1, 1, 1, 1};
  cfg.cnn_channels = {2, 2, 2};
  cfg.state_features = 2;
  cfg.state_hidden = 4;
  cfg.tactile.latent_dim = 4;
  cfg.tactile.channels = 1;
  cfg.tactile.fusion_hidden = 4;
  return cfg;
}

/// Random observation matching a policy config.
template <class S>
data::Observation<S> random_observation(const policy::PolicyConfig& cfg, int batch, Rng& rng) {
  auto fill = [&](Shape shape, double lo, double hi) {
    Tensor<S> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<S>(rng.uniform(lo, hi));
    return t;
  };
  return {fill({batch, data::kImageViews, 3, cfg.schema.image_height, cfg.schema.image_width}, 0, 1),
          fill({batch, cfg.schema.body_dim}, -1, 1), fill({batch, cfg.schema.hand_dim()}, -1, 1),
          fill({batch, cfg.schema.hand_dim()}, -1, 1), fill({batch, 2, 1062}, 0, 1)};
}

/// Generator config matching a policy config's schemas.
inline data::GeneratorConfig generator_for(const policy::PolicyConfig& cfg, int episode_length) {
  data::GeneratorConfig g;
  g.schema = cfg.schema;
  g.actions = cfg.actions;
  g.episode_length = episode_length;
  return g;
}

}  // namespace htd::testing

#endif  // HTD_TESTS_FIXTURES_HPP_
