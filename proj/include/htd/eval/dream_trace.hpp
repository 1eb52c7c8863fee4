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

// Open-loop dream rollout over a recorded episode. Every `stride` steps the
// predictor sees the recorded observation at t and dreams tau future steps;
// those are lined up against the recorded future forces and the teacher's
// latents of the recorded future tactile frames.

#ifndef HTD_EVAL_DREAM_TRACE_HPP_
#define HTD_EVAL_DREAM_TRACE_HPP_

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/data/batch.hpp"
#include "htd/eval/metrics.hpp"
#include "htd/training/trainer.hpp"

namespace htd::eval {

/// One dreamed chunk in raw units. force is [tau, 2J]; latents is
/// [tau, 12, d_z] or empty when the predictor does not dream latents.
struct DreamChunk {
  Tensor<float> force;
  Tensor<float> latents;
};

/// Dreams the chunk that follows timestep t of one episode.
using DreamPredictor = std::function<DreamChunk(const data::Dataset& ds, int episode, int t)>;

struct DreamTrace {
  int episode = 0;
  std::vector<int> steps;    // absolute timestep of every row
  std::vector<int> origins;  // observation timestep of the chunk that supplied the row
  Tensor<float> predicted_force;  // [N, 2J]
  Tensor<float> true_force;       // [N, 2J]
  Tensor<float> predicted_latents;  // [N, 12, d_z], empty without latent dreams
  Tensor<float> teacher_latents;    // [N, 12, d_z]
  std::array<double, tactile::kHands> mae{};
  std::vector<std::vector<double>> similarity;  // [12][N], empty without latent dreams

  int size() const { return static_cast<int>(steps.size()); }
  bool has_latents() const { return predicted_latents.size() > 0; }
};

/// Latent slot of (hand, region) in the 12-region layout.
inline int latent_slot(int hand, tactile::Region region) {
  return hand * tactile::kRegionsPerHand + tactile::encode_slot(region);
}

/// Raw future tactile rows of an episode at the given timesteps -> [N*2, 1062].
inline Tensor<float> tactile_frames(const data::Episode& ep, const std::vector<int>& steps) {
  const int w = tactile::kHands * tactile::kTactilePerHand;
  Tensor<float> out({static_cast<int>(steps.size()) * tactile::kHands, tactile::kTactilePerHand});
  for (std::size_t i = 0; i < steps.size(); ++i)
    std::copy_n(ep.tactile.data() + static_cast<std::size_t>(steps[i]) * w, w, out.data() + i * w);
  return out;
}

inline DreamTrace rollout_dream_trace(const DreamPredictor& predict, const training::TrainState<float>& targets,
                                      const data::Dataset& ds, int episode, int stride) {
  if (episode < 0 || episode >= static_cast<int>(ds.episodes.size()))
    throw std::out_of_range("rollout_dream_trace: no episode " + std::to_string(episode));
  if (stride < 1) throw std::invalid_argument("rollout_dream_trace: stride must be positive");
  const auto& ep = ds.episodes[episode];
  const int tau = ds.actions.dream_horizon, T = ep.length, fw = ds.schema.hand_dim();
  if (T <= tau)
    throw std::invalid_argument("rollout_dream_trace: episode " + std::to_string(episode) + " has " +
                                std::to_string(T) + " steps, needs more than tau = " + std::to_string(tau));

  // Most recent chunk wins: origin[s] ends up as the latest t covering s.
  std::vector<int> origin(T, -1);
  std::vector<DreamChunk> chunks(T);
  for (int t = 0; t + tau <= T - 1; t += stride) {
    chunks[t] = predict(ds, episode, t);
    if (chunks[t].force.shape() != Shape{tau, fw})
      throw std::invalid_argument("predictor force chunk has shape " + shape_string(chunks[t].force.shape()));
    for (int k = 1; k <= tau; ++k) origin[t + k] = t;
  }

  DreamTrace tr;
  tr.episode = episode;
  for (int s = 0; s < T; ++s)
    if (origin[s] >= 0) {
      tr.steps.push_back(s);
      tr.origins.push_back(origin[s]);
    }
  const int n = tr.size();
  tr.predicted_force = Tensor<float>({n, fw});
  tr.true_force = Tensor<float>({n, fw});
  const bool latents = chunks[tr.origins.front()].latents.size() > 0;
  const int d = targets.net.tactile_encoder().latent_dim();
  const int slots = tactile::kHands * tactile::kRegionsPerHand;
  if (latents) tr.predicted_latents = Tensor<float>({n, slots, d});
  for (int i = 0; i < n; ++i) {
    const int s = tr.steps[i], t = tr.origins[i], k = s - t - 1;
    const auto& c = chunks[t];
    std::copy_n(c.force.data() + static_cast<std::size_t>(k) * fw, fw, tr.predicted_force.data() + i * fw);
    std::copy_n(ep.hand_force.data() + static_cast<std::size_t>(s) * fw, fw, tr.true_force.data() + i * fw);
    if (latents) {
      if (c.latents.shape() != Shape{tau, slots, d})
        throw std::invalid_argument("predictor latent chunk has shape " + shape_string(c.latents.shape()));
      std::copy_n(c.latents.data() + static_cast<std::size_t>(k) * slots * d, slots * d,
                  tr.predicted_latents.data() + static_cast<std::size_t>(i) * slots * d);
    }
  }
  tr.teacher_latents = target_encoder_latents(targets, tactile_frames(ep, tr.steps)).reshaped({n, slots, d});
  tr.mae = force_mae(tr.predicted_force, tr.true_force);
  if (latents) {
    tr.similarity.assign(slots, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < slots; ++r) {
        const std::size_t off = (static_cast<std::size_t>(i) * slots + r) * d;
        tr.similarity[r][i] = latent_similarity({tr.predicted_latents.data() + off, static_cast<std::size_t>(d)},
                                                {tr.teacher_latents.data() + off, static_cast<std::size_t>(d)});
      }
  }
  return tr;
}

/// Predictor backed by a trained policy. Forces come back in raw units.
inline DreamPredictor policy_predictor(const training::TrainState<float>& st) {
  if (!st.config().dreams())
    throw std::invalid_argument(std::string("variant ") + policy::variant_name(st.config().variant) +
                                " has no dream heads");
  return [&st](const data::Dataset& ds, int episode, int t) {
    const auto obs = data::make_observation<float>(ds, {{static_cast<std::size_t>(episode), t}});
    const ag::ParamBinding<float> tac(st.student.tactile), trunk(st.student.trunk);
    const auto out = st.net.forward(tac, trunk, obs);
    DreamChunk c;
    const int tau = out.dream.force.shape()[1], fw = out.dream.force.shape()[2];
    c.force = out.dream.force.value().reshaped({tau, fw});
    for (int k = 0; k < tau; ++k)
      for (int j = 0; j < fw; ++j) c.force[k * fw + j] = ds.stats.hand_force.denormalize(c.force[k * fw + j], j);
    if (out.dream.latents.defined()) {
      const auto& z = out.dream.latents.value();
      c.latents = z.reshaped({z.dim(1), z.dim(2), z.dim(3)});
    }
    return c;
  };
}

/// Predictor that returns the recorded future: ground-truth forces and the
/// target encoder's latents of the recorded tactile frames.
inline DreamPredictor oracle_predictor(const training::TrainState<float>& targets) {
  return [&targets](const data::Dataset& ds, int episode, int t) {
    const auto& ep = ds.episodes[episode];
    const int tau = ds.actions.dream_horizon, fw = ds.schema.hand_dim();
    std::vector<int> steps;
    for (int k = 1; k <= tau; ++k) steps.push_back(t + k);
    DreamChunk c;
    c.force = Tensor<float>({tau, fw});
    std::copy_n(ep.hand_force.data() + static_cast<std::size_t>(t + 1) * fw, tau * fw, c.force.data());
    const int d = targets.net.tactile_encoder().latent_dim();
    c.latents = target_encoder_latents(targets, tactile_frames(ep, steps))
                    .reshaped({tau, tactile::kHands * tactile::kRegionsPerHand, d});
    return c;
  };
}

/// Predictor that dreams zero force and zero latents.
inline DreamPredictor zero_predictor(int latent_dim) {
  return [latent_dim](const data::Dataset& ds, int, int) {
    const int tau = ds.actions.dream_horizon;
    return DreamChunk{Tensor<float>({tau, ds.schema.hand_dim()}),
                      Tensor<float>({tau, tactile::kHands * tactile::kRegionsPerHand, latent_dim})};
  };
}

}  // namespace htd::eval

#endif  // HTD_EVAL_DREAM_TRACE_HPP_
