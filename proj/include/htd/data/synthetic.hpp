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

// Scripted contact demonstrations. Every episode walks through
// approach -> contact -> grasp -> transport -> release. A scalar contact
// intensity in [0, 1] drives tactile bumps on the touching patches, joint
// forces, and hand closure; intensity is exactly zero outside contact, so
// non-contact frames carry only the tactile noise floor.

#ifndef HTD_DATA_SYNTHETIC_HPP_
#define HTD_DATA_SYNTHETIC_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "htd/core/rng.hpp"
#include "htd/data/episode.hpp"
#include "htd/tactile/layout.hpp"

namespace htd::data {

struct ScenarioWeight {
  std::string label;
  double weight = 1.0;
};

/// Known scenario labels: "pinch", "power", "bimanual".
inline std::vector<ScenarioWeight> default_scenario_mix() {
  return {{"pinch", 1.0}, {"power", 1.0}, {"bimanual", 1.0}};
}

struct GeneratorConfig {
  ModalitySchema schema;
  ActionSchema actions;
  int episode_length = 40;
  float tactile_noise = 0.02f;  // uniform [0, noise) on every cell
  float contact_peak = 1.0f;    // bump amplitude at full intensity
  std::vector<ScenarioWeight> mix = default_scenario_mix();
};

namespace synth_detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3 - 2 * x);
}

struct PhaseBounds {
  int contact, grasp, transport, release;  // first timestep of each phase
};

inline PhaseBounds phase_bounds(int T, Rng& rng) {
  auto frac = [&](double base) { return base + rng.uniform(-0.03, 0.03); };
  PhaseBounds b;
  b.contact = std::max(1, static_cast<int>(std::round(T * frac(0.22))));
  b.grasp = std::max(b.contact + 1, static_cast<int>(std::round(T * frac(0.34))));
  b.transport = std::max(b.grasp + 1, static_cast<int>(std::round(T * frac(0.52))));
  b.release = std::max(b.transport + 1, static_cast<int>(std::round(T * frac(0.78))));
  b.release = std::min(b.release, T - 1);
  return b;
}

}  // namespace synth_detail

/// Contact intensity at timestep t: 0 before contact, ramps to 0.5 through the
/// contact phase, to 1 through grasp, holds during transport, and decays to 0
/// over the first half of release.
inline double contact_intensity(int t, int T, int contact, int grasp, int transport, int release) {
  if (t < contact) return 0.0;
  if (t < grasp) return 0.5 * (t - contact + 1) / static_cast<double>(grasp - contact);
  if (t < transport) return 0.5 + 0.5 * (t - grasp + 1) / static_cast<double>(transport - grasp);
  if (t < release) return 1.0;
  const double span = std::max(1.0, 0.5 * (T - release));
  return std::max(0.0, 1.0 - (t - release + 1) / span);
}

/// Maps hand joint j to the finger it actuates; the first two joints drive the thumb.
inline tactile::Region joint_finger(int j) {
  using tactile::Region;
  if (j < 2) return Region::kThumb;
  static constexpr Region fingers[] = {Region::kIndex, Region::kMiddle, Region::kRing, Region::kPinky};
  return fingers[(j - 2) % 4];
}

/// Which regions touch the object for a scenario, per hand (left, right).
struct ContactPlan {
  std::array<bool, 2> hands{false, false};
  std::vector<std::pair<tactile::Region, std::vector<int>>> patches;  // region -> patch indices
};

inline ContactPlan contact_plan(const std::string& scenario, Rng& rng) {
  using tactile::Region;
  ContactPlan plan;
  if (scenario == "pinch") {
    plan.hands[rng.index(2)] = true;
    plan.patches = {{Region::kThumb, {0}}, {Region::kIndex, {0}}};
  } else if (scenario == "power") {
    plan.hands[rng.index(2)] = true;
    plan.patches = {{Region::kThumb, {3}}, {Region::kIndex, {2}}, {Region::kMiddle, {2}},
                    {Region::kRing, {2}},  {Region::kPinky, {2}}, {Region::kPalm, {0}}};
  } else if (scenario == "bimanual") {
    plan.hands = {true, true};
    plan.patches = {{Region::kThumb, {3}}, {Region::kIndex, {1, 2}}, {Region::kMiddle, {2}}, {Region::kPalm, {0}}};
  } else {
    throw std::invalid_argument("unknown scenario label: " + scenario);
  }
  return plan;
}

namespace synth_detail {

inline void splat(float* img, int H, int W, int channel, double cy, double cx, double sigma, double amp,
                  std::size_t base) {
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
      float& px = img[base + (static_cast<std::size_t>(channel) * H + y) * W + x];
      px = static_cast<float>(std::min(1.0, px + amp * std::exp(-d2 / (2 * sigma * sigma))));
    }
}

// 6-D rotation encoding (first two columns) of Rz(yaw) * Ry(pitch).
inline std::array<double, 6> rot6(double yaw, double pitch) {
  const double cy = std::cos(yaw), sy = std::sin(yaw), cp = std::cos(pitch), sp = std::sin(pitch);
  // R = Rz Ry; columns c0 = (cy cp, sy cp, -sp), c1 = (-sy, cy, 0)
  return {cy * cp, sy * cp, -sp, -sy, cy, 0.0};
}

}  // namespace synth_detail

/// One episode from its own seed. Deterministic in (seed, scenario, config).
inline Episode generate_episode(std::uint64_t seed, const std::string& scenario, const GeneratorConfig& cfg) {
  using namespace synth_detail;
  const auto& m = cfg.schema;
  const auto& a = cfg.actions;
  const int T = cfg.episode_length;
  const int J = m.hand_joints;
  const int H = m.image_height, W = m.image_width;
  const auto widths = StreamWidths::of(m, a);
  const auto layout = tactile::RegionLayout::standard();

  Rng rng(seed);
  Episode ep;
  ep.seed = seed;
  ep.scenario = scenario;
  ep.length = T;
  ep.images.assign(static_cast<std::size_t>(T) * widths.images, 0.0f);
  ep.body.assign(static_cast<std::size_t>(T) * widths.body, 0.0f);
  ep.hand_proprio.assign(static_cast<std::size_t>(T) * widths.hand_proprio, 0.0f);
  ep.hand_force.assign(static_cast<std::size_t>(T) * widths.hand_force, 0.0f);
  ep.tactile.assign(static_cast<std::size_t>(T) * widths.tactile, 0.0f);
  ep.action.assign(static_cast<std::size_t>(T) * widths.action, 0.0f);
  ep.phases.assign(T, Phase::kApproach);
  ep.contact.assign(2 * static_cast<std::size_t>(T), 0);

  const ContactPlan plan = contact_plan(scenario, rng);
  const PhaseBounds pb = phase_bounds(T, rng);

  // Scene geometry (metres, robot frame: x forward, y left, z up).
  const std::array<double, 3> object0 = {rng.uniform(0.35, 0.55), rng.uniform(-0.2, 0.2), rng.uniform(0.0, 0.15)};
  const std::array<double, 3> goal = {rng.uniform(0.35, 0.55), rng.uniform(-0.25, 0.25), rng.uniform(0.05, 0.25)};
  std::array<std::array<double, 3>, 2> rest;
  rest[0] = {0.25, 0.22, 0.2};
  rest[1] = {0.25, -0.22, 0.2};
  const double walk_speed = rng.uniform(0.15, 0.4);
  const double height0 = rng.uniform(0.65, 0.78);
  const double bend = rng.uniform(0.05, 0.15);

  // Per-episode tactile bump placement and gains.
  struct Bump {
    int hand, offset, rows, cols;
    double cy, cx, gain;
  };
  std::vector<Bump> bumps;
  for (int hand = 0; hand < 2; ++hand) {
    if (!plan.hands[hand]) continue;
    for (const auto& [region, patch_ids] : plan.patches) {
      const auto& spec = layout.region(region);
      for (int pid : patch_ids) {
        const auto& p = spec.patches.at(pid);
        bumps.push_back({hand, p.offset, p.rows, p.cols, rng.uniform(0.25, 0.75) * (p.rows - 1),
                         rng.uniform(0.25, 0.75) * (p.cols - 1), rng.uniform(0.8, 1.2)});
      }
    }
  }
  std::vector<double> joint_gain(2 * J), joint_range(2 * J);
  for (int j = 0; j < 2 * J; ++j) {
    joint_gain[j] = rng.uniform(2.0, 5.0);
    joint_range[j] = rng.uniform(1.0, 1.5);
  }
  std::array<bool, 5> finger_touch{};  // by tactile::Region for fingers
  for (const auto& [region, ids] : plan.patches)
    if (region != tactile::Region::kPalm) finger_touch[static_cast<int>(region)] = true;

  // Fixed random projection from the scripted pose to body joint angles.
  constexpr int kPoseFeatures = 11;  // 2 wrists xyz + torso 4 + walking phase (sin, cos, speed)
  std::vector<double> body_map(static_cast<std::size_t>(m.body_dim) * kPoseFeatures);
  for (auto& v : body_map) v = rng.normal(0.0, 0.5);

  struct Pose {
    std::array<std::array<double, 3>, 2> wrist;
    std::array<double, 2> wrist_yaw;
    std::array<double, 4> torso;  // roll, pitch, yaw, height
    std::array<double, 3> vel;
    std::array<double, 2> closure;
    std::array<double, 3> object;
    double intensity;
  };

  auto pose_at = [&](int t) {
    Pose p{};
    const double I = contact_intensity(std::min(t, T - 1), T, pb.contact, pb.grasp, pb.transport, pb.release);
    p.intensity = I;
    const double reach = smoothstep(static_cast<double>(t) / pb.contact);
    const double carry = smoothstep(static_cast<double>(t - pb.transport) / std::max(1, pb.release - pb.transport));
    const double retreat = smoothstep(static_cast<double>(t - pb.release) / std::max(1, T - pb.release));
    std::array<double, 3> obj;
    for (int k = 0; k < 3; ++k) obj[k] = object0[k] + carry * (goal[k] - object0[k]);
    p.object = obj;
    for (int hand = 0; hand < 2; ++hand) {
      const double side = hand == 0 ? 1.0 : -1.0;
      for (int k = 0; k < 3; ++k) {
        if (plan.hands[hand]) {
          double target = obj[k] + (k == 1 && plan.hands[0] && plan.hands[1] ? side * 0.08 : 0.0);
          double pos = rest[hand][k] + reach * (target - rest[hand][k]);
          pos += retreat * (rest[hand][k] - target);
          p.wrist[hand][k] = pos;
        } else {
          p.wrist[hand][k] = rest[hand][k] + 0.02 * std::sin(0.3 * t + hand + k);
        }
      }
      p.wrist_yaw[hand] = plan.hands[hand] ? 0.4 * side * reach * (1 - retreat) : 0.0;
      const double open = 0.1;
      p.closure[hand] = plan.hands[hand] ? open + 0.8 * I : open;
    }
    const double lean = reach * (1 - retreat);
    p.torso = {0.0, 0.3 * lean, 0.5 * std::atan2(obj[1], obj[0]) * lean, height0 - bend * lean};
    const bool walking = t >= pb.transport && t < pb.release;
    p.vel = {walking ? walk_speed : 0.0, 0.0, 0.0};
    return p;
  };

  for (int t = 0; t < T; ++t) {
    const Pose now = pose_at(t);
    const Pose next = pose_at(t + 1);

    // Labels.
    ep.phases[t] = t < pb.contact     ? Phase::kApproach
                   : t < pb.grasp     ? Phase::kContact
                   : t < pb.transport ? Phase::kGrasp
                   : t < pb.release   ? Phase::kTransport
                                      : Phase::kRelease;
    for (int hand = 0; hand < 2; ++hand) ep.contact[2 * t + hand] = (plan.hands[hand] && now.intensity > 0.0) ? 1 : 0;

    // Action: scripted targets for the next control step.
    float* act = ep.action.data() + static_cast<std::size_t>(t) * widths.action;
    for (int hand = 0; hand < 2; ++hand) {
      const auto r6 = rot6(next.wrist_yaw[hand], 0.2);
      for (int k = 0; k < 3; ++k) act[hand * 9 + k] = static_cast<float>(next.wrist[hand][k]);
      for (int k = 0; k < 6; ++k) act[hand * 9 + 3 + k] = static_cast<float>(r6[k]);
    }
    const int torso_off = a.offset(ActionModality::kTorso);
    const int vel_off = a.offset(ActionModality::kVelocity);
    const int hand_off = a.offset(ActionModality::kHand);
    for (int k = 0; k < 4; ++k) act[torso_off + k] = static_cast<float>(next.torso[k]);
    for (int k = 0; k < 3; ++k) act[vel_off + k] = static_cast<float>(next.vel[k]);
    for (int hand = 0; hand < 2; ++hand)
      for (int j = 0; j < J; ++j)
        act[hand_off + hand * J + j] = static_cast<float>(next.closure[hand] * joint_range[hand * J + j]);

    // Body proprioception: fixed projection of the current pose plus gait oscillation.
    const double gait = walk_speed > 0 && now.vel[0] > 0 ? 2.0 * std::numbers::pi * t / 8.0 : 0.0;
    const std::array<double, kPoseFeatures> feat = {
        now.wrist[0][0], now.wrist[0][1], now.wrist[0][2], now.wrist[1][0], now.wrist[1][1], now.wrist[1][2],
        now.torso[1],    now.torso[2],    now.torso[3],    std::sin(gait) * now.vel[0] * 4, now.vel[0]};
    float* body = ep.body.data() + static_cast<std::size_t>(t) * widths.body;
    for (int i = 0; i < m.body_dim; ++i) {
      double acc = 0;
      for (int k = 0; k < kPoseFeatures; ++k) acc += body_map[i * kPoseFeatures + k] * feat[k];
      body[i] = static_cast<float>(acc);
    }

    // Hand proprioception lags the commanded closure by one step.
    const Pose prev = pose_at(std::max(0, t - 1));
    float* hp = ep.hand_proprio.data() + static_cast<std::size_t>(t) * widths.hand_proprio;
    float* hf = ep.hand_force.data() + static_cast<std::size_t>(t) * widths.hand_force;
    for (int hand = 0; hand < 2; ++hand)
      for (int j = 0; j < J; ++j) {
        const int idx = hand * J + j;
        hp[idx] = static_cast<float>(prev.closure[hand] * joint_range[idx]);
        const bool touching = plan.hands[hand] && finger_touch[static_cast<int>(joint_finger(j))];
        const double f = now.intensity * joint_gain[idx] * (plan.hands[hand] ? (touching ? 1.0 : 0.15) : 0.0);
        hf[idx] = static_cast<float>(f + rng.uniform(0.0, 0.02));
      }

    // Tactile: noise floor everywhere, bumps where the plan touches.
    float* tac = ep.tactile.data() + static_cast<std::size_t>(t) * widths.tactile;
    for (int i = 0; i < widths.tactile; ++i) tac[i] = static_cast<float>(rng.uniform(0.0, cfg.tactile_noise));
    if (now.intensity > 0.0) {
      for (const auto& b : bumps) {
        float* hand_tac = tac + b.hand * tactile::kTactilePerHand + b.offset;
        const double amp = cfg.contact_peak * now.intensity * b.gain;
        for (int y = 0; y < b.rows; ++y)
          for (int x = 0; x < b.cols; ++x) {
            const double d2 = (y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx);
            hand_tac[y * b.cols + x] += static_cast<float>(amp * std::exp(-d2 / (2 * 1.2 * 1.2)));
          }
      }
    }

    // Images: dim background, red object blob, green/blue wrist markers.
    float* img = ep.images.data() + static_cast<std::size_t>(t) * widths.images;
    std::fill_n(img, widths.images, 0.1f);
    const double sigma = std::max(1.0, W / 14.0);
    auto to_px = [&](const std::array<double, 3>& p, double cx_shift, double zoom, const std::array<double, 3>& c) {
      const double u = W / 2.0 + zoom * (-(p[1] - c[1])) * W + cx_shift;
      const double v = H / 2.0 + zoom * (-(p[2] - c[2]) + 0.5 * (p[0] - c[0])) * H;
      return std::pair<double, double>{v, u};
    };
    const std::array<double, 3> head = {0.0, 0.0, 0.3};
    for (int view = 0; view < kImageViews; ++view) {
      const std::size_t base = static_cast<std::size_t>(view) * m.image_size();
      std::array<double, 3> center = head;
      double zoom = 1.0, shift = 0.0;
      if (view == 1) shift = -0.06 * W / std::max(0.2, now.object[0]);
      if (view >= 2) {
        center = now.wrist[view - 2];
        zoom = 2.0;
      }
      auto [oy, ox] = to_px(now.object, shift, zoom, center);
      splat(img, H, W, 0, oy, ox, sigma * zoom, 0.9, base);
      for (int hand = 0; hand < 2; ++hand) {
        auto [hy, hx] = to_px(now.wrist[hand], shift, zoom, center);
        splat(img, H, W, 1 + hand, hy, hx, sigma, 0.8, base);
      }
    }
  }
  return ep;
}

/// Deterministic dataset: episode k is seeded from (seed, k), its scenario drawn from the mix.
inline std::vector<Episode> generate_synthetic_dataset(int num_episodes, std::uint64_t seed,
                                                       const GeneratorConfig& cfg) {
  if (num_episodes < 1) throw std::invalid_argument("num_episodes must be >= 1");
  cfg.schema.validate();
  cfg.actions.validate();
  if (cfg.episode_length < 8) throw std::invalid_argument("episode_length must be >= 8");
  double total = 0;
  for (const auto& s : cfg.mix) {
    if (!(s.weight >= 0)) throw std::invalid_argument("scenario weight for '" + s.label + "' is negative");
    Rng probe(0);
    contact_plan(s.label, probe);  // rejects unknown labels
    total += s.weight;
  }
  if (cfg.mix.empty() || total <= 0) throw std::invalid_argument("scenario weights sum to zero");

  Rng picker(synth_detail::splitmix(seed));
  std::vector<Episode> out;
  out.reserve(num_episodes);
  for (int k = 0; k < num_episodes; ++k) {
    double u = picker.uniform() * total;
    std::size_t pick = 0;
    while (pick + 1 < cfg.mix.size() && u >= cfg.mix[pick].weight) u -= cfg.mix[pick++].weight;
    while (cfg.mix[pick].weight <= 0 && pick > 0) --pick;  // never land on a zero-weight tail entry
    const std::uint64_t ep_seed = synth_detail::splitmix(seed ^ synth_detail::splitmix(static_cast<std::uint64_t>(k) + 1));
    out.push_back(generate_episode(ep_seed, cfg.mix[pick].label, cfg));
  }
  return out;
}

/// Builds a full dataset (statistics included) from the generator.
inline Dataset make_synthetic_dataset(int num_episodes, std::uint64_t seed, const GeneratorConfig& cfg) {
  Dataset ds;
  ds.schema = cfg.schema;
  ds.actions = cfg.actions;
  ds.episodes = generate_synthetic_dataset(num_episodes, seed, cfg);
  ds.stats = compute_normalization(ds.episodes, ds.schema, ds.actions);
  return ds;
}

}  // namespace htd::data

#endif  // HTD_DATA_SYNTHETIC_HPP_
