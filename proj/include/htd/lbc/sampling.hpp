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

// Uniform command and domain-randomization sampling.

#ifndef HTD_LBC_SAMPLING_HPP_
#define HTD_LBC_SAMPLING_HPP_

#include <array>
#include <stdexcept>
#include <string>

#include "htd/core/rng.hpp"
#include "htd/lbc/state.hpp"

namespace htd::lbc {

struct Range {
  double lo = 0, hi = 0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

struct CommandRanges {
  Range vx{-0.5, 0.5}, vy{-0.5, 0.5}, wz{-1.57, 1.57}, h{0.35, 0.8};
  Range roll{-0.7, 0.7}, pitch{-0.52, 1.57}, yaw{-1.57, 1.57};

  std::array<Range, kCommandDim> to_array() const { return {vx, vy, wz, h, roll, pitch, yaw}; }
  bool contains(const Command& c) const {
    const auto r = to_array();
    const auto v = c.to_array();
    for (int i = 0; i < kCommandDim; ++i)
      if (!r[i].contains(v[i])) return false;
    return true;
  }
};

inline Command sample_command(Rng& rng, const CommandRanges& ranges = {}) {
  for (const auto& r : ranges.to_array())
    if (!(r.lo <= r.hi)) throw std::invalid_argument("inverted command range");
  Command c;
  c.vx = ranges.vx.sample(rng);
  c.vy = ranges.vy.sample(rng);
  c.wz = ranges.wz.sample(rng);
  c.h = ranges.h.sample(rng);
  c.roll = ranges.roll.sample(rng);
  c.pitch = ranges.pitch.sample(rng);
  c.yaw = ranges.yaw.sample(rng);
  return c;
}

struct RandomizationRanges {
  double ang_vel_noise = 0.2;   // +- rad/s
  double gravity_noise = 0.05;  // +-
  double joint_pos_noise = 0.01;  // +- rad
  double joint_vel_noise = 1.5;   // +- rad/s
  Range static_friction{0.6, 1.0};
  Range dynamic_friction{0.4, 0.8};
  Range restitution{0.0, 0.005};
  Range base_mass{-5.0, 5.0};  // kg added to the base
};

struct Randomization {
  Vec3 ang_vel_noise{};
  Vec3 gravity_noise{};
  JointVec joint_pos_noise{};
  JointVec joint_vel_noise{};
  double static_friction = 0, dynamic_friction = 0, restitution = 0, base_mass = 0;

  bool operator==(const Randomization&) const = default;
};

inline Randomization sample_domain_randomization(Rng& rng, const RandomizationRanges& r = {}) {
  Randomization out;
  for (auto& v : out.ang_vel_noise) v = rng.uniform(-r.ang_vel_noise, r.ang_vel_noise);
  for (auto& v : out.gravity_noise) v = rng.uniform(-r.gravity_noise, r.gravity_noise);
  for (auto& v : out.joint_pos_noise) v = rng.uniform(-r.joint_pos_noise, r.joint_pos_noise);
  for (auto& v : out.joint_vel_noise) v = rng.uniform(-r.joint_vel_noise, r.joint_vel_noise);
  out.static_friction = r.static_friction.sample(rng);
  out.dynamic_friction = r.dynamic_friction.sample(rng);
  out.restitution = r.restitution.sample(rng);
  out.base_mass = r.base_mass.sample(rng);
  return out;
}

}  // namespace htd::lbc

#endif  // HTD_LBC_SAMPLING_HPP_
