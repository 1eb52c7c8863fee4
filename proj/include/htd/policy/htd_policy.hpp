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

// The HTD network. Observations are tokenized per modality, fused by a
// transformer encoder, and a decoder driven by learnable queries emits a fixed
// set of output tokens. Action experts read only their own span of those
// tokens; dream experts read all of them.
//
// Parameters are split in two sets: `tactile` holds the region encoders (the
// part mirrored by the EMA teacher) and `trunk` holds everything else.

#ifndef HTD_POLICY_HTD_POLICY_HPP_
#define HTD_POLICY_HTD_POLICY_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "htd/core/autograd.hpp"
#include "htd/core/nn.hpp"
#include "htd/core/params.hpp"
#include "htd/data/batch.hpp"
#include "htd/policy/config.hpp"
#include "htd/tactile/encoder.hpp"

namespace htd::policy {

using ag::ParamBinding;
using ag::Var;

template <class S>
struct PolicyParams {
  ParameterSet<S> tactile;
  ParameterSet<S> trunk;

  template <class T>
  PolicyParams<T> cast() const {
    return {tactile.template cast<T>(), trunk.template cast<T>()};
  }
  void zero_grad() {
    tactile.zero_grad();
    trunk.zero_grad();
  }
};

template <class S>
struct DreamOutput {
  Var<S> force;        // [B, tau, 2J]
  Var<S> latents;      // [B, tau, 12, d_z]      (dream-latent)
  Var<S> raw_tactile;  // [B, tau, 2, 1062]      (dream-raw)
};

template <class S>
struct PolicyOutput {
  std::array<Var<S>, data::kActionModalities> actions;  // [B, h, dim(m)], ActionModality order
  DreamOutput<S> dream;                                 // empty unless the variant dreams
};

class HtdPolicy {
 public:
  template <class S>
  static HtdPolicy create(const PolicyConfig& cfg, PolicyParams<S>& params, Rng& rng) {
    cfg.validate();
    HtdPolicy p;
    p.cfg_ = cfg;
    p.encoder_ = tactile::TactileEncoder::create(params.tactile, cfg.tactile, tactile::RegionLayout::standard(), rng);

    auto& ps = params.trunk;
    const int d = cfg.width;
    int in_ch = 5;  // RGB plus two coordinate planes
    for (int i = 0; i < 3; ++i) {
      p.cnn_[i] = nn::Conv2d::create(ps, "vision.conv" + std::to_string(i), in_ch, cfg.cnn_channels[i], 3, 2, 1, rng);
      in_ch = cfg.cnn_channels[i];
    }
    p.vision_proj_ = nn::Linear::create(ps, "vision.proj", in_ch, d, rng);
    for (int v = 0; v < data::kImageViews; ++v)
      p.view_readout_[v] = nn::QueryReadout::create(ps, std::string("tokens.") + data::view_name(v), cfg.image_tokens, d,
                                                    cfg.heads, rng);
    const std::array<std::pair<const char*, int>, 3> states = {
        {{"body", cfg.schema.body_dim}, {"hand_proprio", cfg.schema.hand_dim()}, {"hand_force", cfg.schema.hand_dim()}}};
    for (int s = 0; s < 3; ++s) {
      const std::string name = std::string("tokens.") + states[s].first;
      p.state_mlp_[s] = nn::Mlp::create(ps, name + ".mlp", states[s].second, cfg.state_hidden, cfg.state_features * d, rng);
      p.state_readout_[s] = nn::QueryReadout::create(ps, name, cfg.state_tokens, d, cfg.heads, rng);
    }
    p.tactile_proj_ = nn::Linear::create(ps, "tokens.tactile.proj", cfg.tactile.latent_dim, d, rng);
    for (int h = 0; h < 2; ++h)
      p.tactile_readout_[h] = nn::QueryReadout::create(ps, h == 0 ? "tokens.tactile_left" : "tokens.tactile_right",
                                                       cfg.tactile_tokens, d, cfg.heads, rng);

    for (int l = 0; l < cfg.encoder_layers; ++l)
      p.encoder_layers_.push_back(
          nn::EncoderLayer::create(ps, "trunk.encoder" + std::to_string(l), d, cfg.heads, cfg.ffn_width, rng));
    p.decoder_queries_ = ps.add_normal("trunk.decoder.queries", {cfg.output_token_count(), d}, 1.0, rng);
    for (int l = 0; l < cfg.decoder_layers; ++l)
      p.decoder_layers_.push_back(
          nn::DecoderLayer::create(ps, "trunk.decoder" + std::to_string(l), d, cfg.heads, cfg.ffn_width, rng));

    const int h = cfg.actions.horizon, tau = cfg.actions.dream_horizon;
    for (int m = 0; m < data::kActionModalities; ++m) {
      const auto mod = static_cast<ActionModality>(m);
      const std::string name = std::string("expert.") + data::action_modality_name(mod);
      p.action_readout_[m] = nn::QueryReadout::create(ps, name, h, d, cfg.heads, rng);
      p.action_head_[m] = nn::Mlp::create(ps, name + ".head", d, cfg.ffn_width, cfg.actions.dim(mod), rng);
    }
    p.force_readout_ = nn::QueryReadout::create(ps, "dream.force", tau, d, cfg.heads, rng);
    p.force_head_ = nn::Mlp::create(ps, "dream.force.head", d, cfg.ffn_width, cfg.schema.hand_dim(), rng);
    p.latent_readout_ = nn::QueryReadout::create(ps, "dream.latent", tau, d, cfg.heads, rng);
    p.latent_head_ = nn::Mlp::create(ps, "dream.latent.head", d, cfg.ffn_width,
                                     2 * tactile::kRegionsPerHand * cfg.tactile.latent_dim, rng);
    p.raw_readout_ = nn::QueryReadout::create(ps, "dream.raw", tau, d, cfg.heads, rng);
    p.raw_head_ = nn::Mlp::create(ps, "dream.raw.head", d, cfg.ffn_width, data::ModalitySchema::tactile_dim(), rng);
    return p;
  }

  const PolicyConfig& config() const { return cfg_; }
  const tactile::TactileEncoder& tactile_encoder() const { return encoder_; }

  /// Tactile region embeddings for both hands: raw [B, 2, 1062] -> [B, 2, 6, d_z].
  template <class S>
  Var<S> embed_tactile(const ParamBinding<S>& tac, const Tensor<S>& raw) const {
    const int B = raw.dim(0);
    auto z = encoder_.encode_hand(tac, raw.reshaped({B * tactile::kHands, tactile::kTactilePerHand}));
    return ag::reshape(z, {B, tactile::kHands, tactile::kRegionsPerHand, encoder_.latent_dim()});
  }

  /// Cross-attention aggregation of one feature sequence into its tokens.
  template <class S>
  Var<S> tokenize(const ParamBinding<S>& trunk, InputModality m, const Var<S>& features) const {
    const int i = static_cast<int>(m);
    if (i <= static_cast<int>(InputModality::kWristRight)) return view_readout_[i](trunk, features);
    if (i <= static_cast<int>(InputModality::kHandForce))
      return state_readout_[i - static_cast<int>(InputModality::kBody)](trunk, features);
    return tactile_readout_[i - static_cast<int>(InputModality::kTactileLeft)](trunk, features);
  }

  /// Input token sequence [B, L_in, d] in InputModality order.
  template <class S>
  Var<S> observation_tokens(const ParamBinding<S>& tac, const ParamBinding<S>& trunk,
                            const data::Observation<S>& obs) const {
    const int B = obs.batch();
    const int d = cfg_.width;
    check_shape(obs.images.rank() == 5 && obs.images.dim(0) == B && obs.images.dim(1) == data::kImageViews &&
                    obs.images.dim(2) == 3 && obs.images.dim(3) == cfg_.schema.image_height &&
                    obs.images.dim(4) == cfg_.schema.image_width,
                "observation images " + shape_string(obs.images.shape()) + " do not match the schema");
    check_shape(obs.body.dim(1) == cfg_.schema.body_dim && obs.hand_proprio.dim(1) == cfg_.schema.hand_dim() &&
                    obs.hand_force.dim(1) == cfg_.schema.hand_dim(),
                "observation state widths do not match the schema");
    std::vector<Var<S>> parts;

    // Vision: one backbone over all views, then a readout per view.
    auto x = ag::constant(with_coordinates(obs.images));
    for (const auto& conv : cnn_) x = ag::gelu(conv(trunk, x));
    const int C = x.dim(1), cells = x.dim(2) * x.dim(3);
    auto feats = vision_proj_(trunk, ag::transpose_last2(ag::reshape(x, {B * data::kImageViews, C, cells})));
    feats = ag::reshape(feats, {B, data::kImageViews, cells, d});
    for (int v = 0; v < data::kImageViews; ++v) {
      auto view = ag::reshape(ag::slice(feats, 1, v, 1), {B, cells, d});
      parts.push_back(tokenize(trunk, static_cast<InputModality>(v), view));
    }

    // State modalities.
    const Tensor<S>* states[3] = {&obs.body, &obs.hand_proprio, &obs.hand_force};
    const int n_states = cfg_.uses_touch() ? 3 : 2;
    for (int s = 0; s < n_states; ++s) {
      auto f = ag::reshape(state_mlp_[s](trunk, ag::constant(*states[s])), {B, cfg_.state_features, d});
      parts.push_back(tokenize(trunk, static_cast<InputModality>(static_cast<int>(InputModality::kBody) + s), f));
    }

    // Tactile: region embeddings form each hand's feature sequence.
    if (cfg_.uses_touch()) {
      check_shape(obs.tactile.rank() == 3 && obs.tactile.dim(1) == tactile::kHands &&
                      obs.tactile.dim(2) == tactile::kTactilePerHand,
                  "observation tactile must be [B, 2, 1062]");
      auto z = tactile_proj_(trunk, embed_tactile(tac, obs.tactile));  // [B, 2, 6, d]
      for (int hand = 0; hand < tactile::kHands; ++hand) {
        auto seq = ag::reshape(ag::slice(z, 1, hand, 1), {B, tactile::kRegionsPerHand, d});
        parts.push_back(tokenize(trunk, hand == 0 ? InputModality::kTactileLeft : InputModality::kTactileRight, seq));
      }
    }
    return ag::concat(parts, 1);
  }

  /// Encoder-decoder trunk: observation -> decoder output tokens [B, L_out, d].
  template <class S>
  Var<S> decoder_tokens(const ParamBinding<S>& tac, const ParamBinding<S>& trunk,
                        const data::Observation<S>& obs) const {
    auto tokens = observation_tokens(tac, trunk, obs);
    const int B = tokens.dim(0);
    auto memory = ag::add_broadcast(tokens, ag::constant(nn::sinusoidal_positions<S>(tokens.dim(1), cfg_.width)));
    for (const auto& layer : encoder_layers_) memory = layer(trunk, memory);
    auto q = ag::add(trunk(decoder_queries_),
                     ag::constant(nn::sinusoidal_positions<S>(cfg_.output_token_count(), cfg_.width)));
    auto out = ag::repeat_batch(q, B);
    for (const auto& layer : decoder_layers_) out = layer(trunk, out, memory);
    return out;
  }

  /// One action expert, reading only its span of the decoder tokens.
  template <class S>
  Var<S> decode_action(const ParamBinding<S>& trunk, const Var<S>& dec, ActionModality m) const {
    const int i = static_cast<int>(m);
    auto span = ag::slice(dec, 1, cfg_.outputs.offset(m), cfg_.outputs.count(m));
    return action_head_[i](trunk, action_readout_[i](trunk, span));
  }

  template <class S>
  std::array<Var<S>, data::kActionModalities> decode_actions(const ParamBinding<S>& trunk, const Var<S>& dec) const {
    std::array<Var<S>, data::kActionModalities> out;
    for (int m = 0; m < data::kActionModalities; ++m) out[m] = decode_action(trunk, dec, static_cast<ActionModality>(m));
    return out;
  }

  /// Dream experts, each attending to every decoder token. Which heads run
  /// follows the variant; `all` forces every head (used by probes).
  template <class S>
  DreamOutput<S> decode_dreams(const ParamBinding<S>& trunk, const Var<S>& dec, bool all = false) const {
    DreamOutput<S> out;
    const int B = dec.dim(0), tau = cfg_.actions.dream_horizon;
    out.force = force_head_(trunk, force_readout_(trunk, dec));
    ++dream_calls_;
    if (all || cfg_.variant == Variant::kDreamLatent) {
      out.latents = ag::reshape(latent_head_(trunk, latent_readout_(trunk, dec)),
                                {B, tau, tactile::kHands * tactile::kRegionsPerHand, cfg_.tactile.latent_dim});
      ++dream_calls_;
    }
    if (all || cfg_.variant == Variant::kDreamRaw) {
      out.raw_tactile = ag::reshape(raw_head_(trunk, raw_readout_(trunk, dec)),
                                    {B, tau, tactile::kHands, tactile::kTactilePerHand});
      ++dream_calls_;
    }
    return out;
  }

  /// Full training-time forward pass.
  template <class S>
  PolicyOutput<S> forward(const ParamBinding<S>& tac, const ParamBinding<S>& trunk,
                          const data::Observation<S>& obs) const {
    auto dec = decoder_tokens(tac, trunk, obs);
    PolicyOutput<S> out;
    out.actions = decode_actions(trunk, dec);
    if (cfg_.dreams()) out.dream = decode_dreams(trunk, dec);
    return out;
  }

  /// Inference: action chunks only. No dream expert is evaluated.
  template <class S>
  std::array<Tensor<S>, data::kActionModalities> act(const PolicyParams<S>& params,
                                                     const data::Observation<S>& obs) const {
    const ParamBinding<S> tac(params.tactile), trunk(params.trunk);
    auto dec = decoder_tokens(tac, trunk, obs);
    std::array<Tensor<S>, data::kActionModalities> out;
    for (int m = 0; m < data::kActionModalities; ++m)
      out[m] = decode_action(trunk, dec, static_cast<ActionModality>(m)).value();
    return out;
  }

  /// Number of dream-head evaluations since construction or the last reset.
  std::size_t dream_calls() const { return dream_calls_; }
  void reset_dream_calls() { dream_calls_ = 0; }

 private:
  // [B, 4, 3, H, W] -> [B*4, 5, H, W]: RGB plus x/y coordinate planes in [-1, 1],
  // so spatial position survives the order-free token aggregation.
  template <class S>
  static Tensor<S> with_coordinates(const Tensor<S>& images) {
    const int N = images.dim(0) * images.dim(1), H = images.dim(3), W = images.dim(4);
    Tensor<S> out({N, 5, H, W});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int n = 0; n < N; ++n) {
      S* dst = out.data() + n * 5 * plane;
      std::copy_n(images.data() + n * 3 * plane, 3 * plane, dst);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          dst[3 * plane + y * W + x] = static_cast<S>(W > 1 ? 2.0 * x / (W - 1) - 1.0 : 0.0);
          dst[4 * plane + y * W + x] = static_cast<S>(H > 1 ? 2.0 * y / (H - 1) - 1.0 : 0.0);
        }
    }
    return out;
  }

  PolicyConfig cfg_;
  tactile::TactileEncoder encoder_;
  std::array<nn::Conv2d, 3> cnn_;
  nn::Linear vision_proj_;
  std::array<nn::QueryReadout, data::kImageViews> view_readout_;
  std::array<nn::Mlp, 3> state_mlp_;
  std::array<nn::QueryReadout, 3> state_readout_;
  nn::Linear tactile_proj_;
  std::array<nn::QueryReadout, 2> tactile_readout_;
  std::vector<nn::EncoderLayer> encoder_layers_;
  ParamId decoder_queries_ = 0;
  std::vector<nn::DecoderLayer> decoder_layers_;
  std::array<nn::QueryReadout, data::kActionModalities> action_readout_;
  std::array<nn::Mlp, data::kActionModalities> action_head_;
  nn::QueryReadout force_readout_, latent_readout_, raw_readout_;
  nn::Mlp force_head_, latent_head_, raw_head_;
  mutable std::size_t dream_calls_ = 0;
};

/// Convenience: builds parameters and the network together.
template <class S>
struct PolicyBundle {
  PolicyParams<S> params;
  HtdPolicy net;

  static PolicyBundle create(const PolicyConfig& cfg, std::uint64_t seed) {
    PolicyBundle b;
    Rng rng(seed);
    b.net = HtdPolicy::create(cfg, b.params, rng);
    return b;
  }
};

}  // namespace htd::policy

#endif  // HTD_POLICY_HTD_POLICY_HPP_
