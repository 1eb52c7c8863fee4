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

#ifndef HTD_DATA_BATCH_HPP_
#define HTD_DATA_BATCH_HPP_

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/core/rng.hpp"
#include "htd/core/tensor.hpp"
#include "htd/data/episode.hpp"

namespace htd::data {

/// Batched policy inputs. Proprioception and force are normalized; images
/// and tactile stay in their native unit range.
template <class S>
struct Observation {
  Tensor<S> images;        // [B, 4, 3, H, W]
  Tensor<S> body;          // [B, body_dim]
  Tensor<S> hand_proprio;  // [B, 2J]
  Tensor<S> hand_force;    // [B, 2J]
  Tensor<S> tactile;       // [B, 2, 1062]

  int batch() const { return body.dim(0); }

  template <class T>
  Observation<T> cast() const {
    return {images.template cast<T>(), body.template cast<T>(), hand_proprio.template cast<T>(),
            hand_force.template cast<T>(), tactile.template cast<T>()};
  }
};

/// One sampled (episode, t) pair.
struct SampleRef {
  std::size_t episode = 0;
  int t = 0;
  bool operator==(const SampleRef&) const = default;
};

template <class S>
struct TrainingBatch {
  Observation<S> obs;
  Tensor<S> actions;         // [B, h, A] normalized a_{t+1..t+h}
  Tensor<S> future_force;    // [B, tau, 2J] normalized f_{t+1..t+tau}
  Tensor<S> future_tactile;  // [B, tau, 2, 1062] raw s_{t+1..t+tau}
  std::vector<SampleRef> refs;
  std::vector<std::uint8_t> contact;  // [B] contact label at t

  int size() const { return static_cast<int>(refs.size()); }

  template <class T>
  TrainingBatch<T> cast() const {
    return {obs.template cast<T>(), actions.template cast<T>(), future_force.template cast<T>(),
            future_tactile.template cast<T>(), refs, contact};
  }
};

/// Number of sample positions: t in [0, T - h - tau]. The last chunk target
/// sits at t + max(h, tau) <= T - 1.
inline int valid_sample_count(int T, int h, int tau) { return std::max(0, T - h - tau + 1); }

/// All valid (episode, t) pairs in episode order.
inline std::vector<SampleRef> valid_samples(const std::vector<Episode>& episodes, int h, int tau) {
  std::vector<SampleRef> refs;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const int n = valid_sample_count(episodes[e].length, h, tau);
    for (int t = 0; t < n; ++t) refs.push_back({e, t});
  }
  return refs;
}

namespace batch_detail {

template <class S>
void copy_normalized(const std::vector<float>& stream, int width, int t, const ChannelStats* stats, S* dst) {
  const float* src = stream.data() + static_cast<std::size_t>(t) * width;
  for (int c = 0; c < width; ++c) dst[c] = static_cast<S>(stats ? stats->normalize(src[c], c) : src[c]);
}

}  // namespace batch_detail

/// Fills only the observation tensors for the given timesteps.
template <class S>
Observation<S> make_observation(const Dataset& ds, const std::vector<SampleRef>& refs) {
  const auto w = StreamWidths::of(ds.schema, ds.actions);
  const int B = static_cast<int>(refs.size());
  Observation<S> o{Tensor<S>({B, kImageViews, 3, ds.schema.image_height, ds.schema.image_width}),
                   Tensor<S>({B, w.body}), Tensor<S>({B, w.hand_proprio}), Tensor<S>({B, w.hand_force}),
                   Tensor<S>({B, tactile::kHands, tactile::kTactilePerHand})};
  for (int b = 0; b < B; ++b) {
    const Episode& ep = ds.episodes.at(refs[b].episode);
    const int t = refs[b].t;
    if (t < 0 || t >= ep.length) throw std::out_of_range("sample timestep outside episode");
    batch_detail::copy_normalized<S>(ep.images, w.images, t, nullptr, o.images.data() + b * w.images);
    batch_detail::copy_normalized<S>(ep.body, w.body, t, &ds.stats.body, o.body.data() + b * w.body);
    batch_detail::copy_normalized<S>(ep.hand_proprio, w.hand_proprio, t, &ds.stats.hand_proprio,
                                     o.hand_proprio.data() + b * w.hand_proprio);
    batch_detail::copy_normalized<S>(ep.hand_force, w.hand_force, t, &ds.stats.hand_force,
                                     o.hand_force.data() + b * w.hand_force);
    batch_detail::copy_normalized<S>(ep.tactile, w.tactile, t, nullptr, o.tactile.data() + b * w.tactile);
  }
  return o;
}

/// Assembles a batch from explicit sample positions. Targets come from the
/// same episode as the observation.
template <class S>
TrainingBatch<S> make_batch(const Dataset& ds, const std::vector<SampleRef>& refs) {
  const int h = ds.actions.horizon;
  const int tau = ds.actions.dream_horizon;
  const auto w = StreamWidths::of(ds.schema, ds.actions);
  const int B = static_cast<int>(refs.size());
  TrainingBatch<S> batch;
  batch.obs = make_observation<S>(ds, refs);
  batch.actions = Tensor<S>({B, h, w.action});
  batch.future_force = Tensor<S>({B, tau, w.hand_force});
  batch.future_tactile = Tensor<S>({B, tau, tactile::kHands, tactile::kTactilePerHand});
  batch.refs = refs;
  for (int b = 0; b < B; ++b) {
    const Episode& ep = ds.episodes.at(refs[b].episode);
    const int t = refs[b].t;
    if (t + h + tau > ep.length) throw std::out_of_range("sample at t=" + std::to_string(t) + " runs past episode end");
    for (int l = 0; l < h; ++l)
      batch_detail::copy_normalized<S>(ep.action, w.action, t + 1 + l, &ds.stats.action,
                                       batch.actions.data() + (static_cast<std::size_t>(b) * h + l) * w.action);
    for (int k = 0; k < tau; ++k) {
      batch_detail::copy_normalized<S>(ep.hand_force, w.hand_force, t + 1 + k, &ds.stats.hand_force,
                                       batch.future_force.data() + (static_cast<std::size_t>(b) * tau + k) * w.hand_force);
      batch_detail::copy_normalized<S>(ep.tactile, w.tactile, t + 1 + k, nullptr,
                                       batch.future_tactile.data() + (static_cast<std::size_t>(b) * tau + k) * w.tactile);
    }
    batch.contact.push_back(ep.in_contact(t) ? 1 : 0);
  }
  return batch;
}

/// Uniform draw over all valid (episode, t) pairs, with replacement.
template <class S>
TrainingBatch<S> sample_training_batch(const Dataset& ds, int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const auto all = valid_samples(ds.episodes, ds.actions.horizon, ds.actions.dream_horizon);
  if (all.empty()) throw std::invalid_argument("no episode is long enough for h + tau");
  std::vector<SampleRef> refs(batch_size);
  for (auto& r : refs) r = all[rng.index(all.size())];
  return make_batch<S>(ds, refs);
}

}  // namespace htd::data

#endif  // HTD_DATA_BATCH_HPP_
