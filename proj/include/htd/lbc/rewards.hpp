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

// Reward terms of the lower-body controller. Every term is computed as an
// unweighted value; the breakdown also carries weight * value and the total.

#ifndef HTD_LBC_REWARDS_HPP_
#define HTD_LBC_REWARDS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "htd/lbc/rotation.hpp"
#include "htd/lbc/state.hpp"

namespace htd::lbc {

enum class Term {
  kVelocity,
  kAngularVelocity,
  kHeight,
  kRoll,
  kPitch,
  kYaw,
  kEnergy,
  kActionRate,
  kJointAcceleration,
  kVerticalVelocity,
  kRollPitchRate,
  kUndesiredContacts,
  kFeetSlide,
  kFlying,
  kFeetForce,
  kFeetAirTime,
  kFeetStumble,
  kTorsoOrientation,
  kJointLimits,
  kFlatOrientation,
  kFeetDistance,
  kJointDeviationLegs,
  kJointDeviationWaist,
  kTermination,
  kCount
};

inline constexpr int kTermCount = static_cast<int>(Term::kCount);
inline constexpr int kTrackingTerms = 6;  // the first six terms

inline const char* term_name(Term t) {
  static constexpr std::array<const char*, kTermCount> names = {
      "vel",           "ang",           "height",       "roll",         "pitch",
      "yaw",           "energy",        "action_rate",  "joint_acc",    "vertical_vel",
      "roll_pitch_rate", "undesired_contacts", "feet_slide", "flying",   "feet_force",
      "feet_air_time", "feet_stumble",  "torso_orientation", "joint_limits", "flat_orientation",
      "feet_distance", "joint_deviation_legs", "joint_deviation_waist", "termination"};
  return names[static_cast<int>(t)];
}

inline Term parse_term(const std::string& name) {
  for (int i = 0; i < kTermCount; ++i)
    if (name == term_name(static_cast<Term>(i))) return static_cast<Term>(i);
  throw std::invalid_argument("unknown reward term: " + name);
}

struct RewardConfig {
  std::array<double, kTermCount> weights = {
      1.0,    1.0,   1.0,     1.0,  1.0,    1.0,     // tracking
      -0.001, -0.01, -2.5e-7, -1.0, -0.15,           // regularization
      -1.0,   -0.25, -1.0,    -0.003, 0.15, -2.0,    // contact and gait
      -2.0,   -2.0,  -1.0,    -2.0,                  // stability
      -0.02,  -0.2,  -200.0};                        // joint deviation, termination
  double sigma_vel = 0.25, sigma_ang = 0.25, sigma_height = 0.1;
  double sigma_roll = 0.25, sigma_pitch = 0.25, sigma_yaw = 0.25;
  double force_onset = 500, force_cap = 400;  // feet force: clip(max(|Fz| - onset, 0), 0, cap)
  double stumble_ratio = 5;
  double air_time_cap = 0.4;
  double command_threshold = 0.1;  // air-time counts only above this command activity
  double feet_distance_threshold = 0.18;
  double contact_force_threshold = 1.0;  // non-foot contact detection (N)
  JointVec soft_lower = filled(-1.57);
  JointVec soft_upper = filled(1.57);

  static JointVec filled(double v) {
    JointVec j;
    j.fill(v);
    return j;
  }

  double weight(Term t) const { return weights[static_cast<int>(t)]; }
  double& weight(Term t) { return weights[static_cast<int>(t)]; }

  void validate() const {
    for (int i = 0; i < kTermCount; ++i) {
      const bool positive = i < kTrackingTerms || static_cast<Term>(i) == Term::kFeetAirTime;
      if (positive ? !(weights[i] > 0) : !(weights[i] <= 0))
        throw std::invalid_argument(std::string("reward weight for ") + term_name(static_cast<Term>(i)) +
                                    (positive ? " must be positive" : " must not be positive"));
    }
    for (double s : {sigma_vel, sigma_ang, sigma_height, sigma_roll, sigma_pitch, sigma_yaw})
      if (!(s > 0)) throw std::invalid_argument("tracking sigma must be positive");
  }
};

struct RewardBreakdown {
  std::array<double, kTermCount> value{};
  std::array<double, kTermCount> weighted{};
  double total = 0;

  double operator[](Term t) const { return value[static_cast<int>(t)]; }
  double contribution(Term t) const { return weighted[static_cast<int>(t)]; }
};

/// Planar base velocity in the pelvis heading frame.
inline Vec2 yaw_frame_velocity(const RobotState& s) {
  const double psi = heading(s.pelvis), c = std::cos(psi), sn = std::sin(psi);
  return {c * s.lin_vel[0] + sn * s.lin_vel[1], -sn * s.lin_vel[0] + c * s.lin_vel[1]};
}

/// Torso angles used for tracking: roll and yaw relative to the pelvis,
/// pitch absolute.
inline Euler torso_tracking_angles(const RobotState& s) {
  const Euler torso = euler_from_quat(s.torso), pelvis = euler_from_quat(s.pelvis);
  return {wrap_angle(torso.roll - pelvis.roll), torso.pitch, wrap_angle(torso.yaw - pelvis.yaw)};
}

inline RewardBreakdown reward_breakdown(const RobotState& s, const Command& cmd, const RewardConfig& cfg) {
  s.validate();
  cfg.validate();
  RewardBreakdown b;
  auto set = [&](Term t, double v) { b.value[static_cast<int>(t)] = v; };
  auto track = [](double err, double sigma) { return std::exp(-(err * err) / (sigma * sigma)); };

  // Tracking.
  const Vec2 v = yaw_frame_velocity(s);
  const double dvx = v[0] - cmd.vx, dvy = v[1] - cmd.vy;
  set(Term::kVelocity, std::exp(-(dvx * dvx + dvy * dvy) / (cfg.sigma_vel * cfg.sigma_vel)));
  set(Term::kAngularVelocity, track(s.ang_vel[2] - cmd.wz, cfg.sigma_ang));
  set(Term::kHeight, track(s.height - cmd.h, cfg.sigma_height));
  const Euler a = torso_tracking_angles(s);
  set(Term::kRoll, track(wrap_angle(a.roll - cmd.roll), cfg.sigma_roll));
  set(Term::kPitch, track(wrap_angle(a.pitch - cmd.pitch), cfg.sigma_pitch));
  set(Term::kYaw, track(wrap_angle(a.yaw - cmd.yaw), cfg.sigma_yaw));

  // Regularization.
  double energy = 0, rate = 0, acc = 0;
  for (int j = 0; j < kLowerJoints; ++j) {
    const double p = std::abs(s.torque[j] * s.qd[j]);
    energy += p * p;
    rate += (s.action[j] - s.prev_action[j]) * (s.action[j] - s.prev_action[j]);
    acc += s.qdd[j] * s.qdd[j];
  }
  set(Term::kEnergy, std::sqrt(energy));
  set(Term::kActionRate, rate);
  set(Term::kJointAcceleration, acc);
  set(Term::kVerticalVelocity, s.lin_vel[2] * s.lin_vel[2]);
  set(Term::kRollPitchRate, s.ang_vel[0] * s.ang_vel[0] + s.ang_vel[1] * s.ang_vel[1]);

  // Contact and gait.
  double undesired = 0;
  for (double f : s.nonfoot_forces) undesired += f > cfg.contact_force_threshold ? 1.0 : 0.0;
  set(Term::kUndesiredContacts, undesired);
  double slide = 0, force = 0;
  bool stumble = false;
  int in_contact = 0;
  for (const auto& f : s.feet) {
    if (f.contact) {
      slide += std::hypot(f.velocity[0], f.velocity[1]);
      ++in_contact;
    }
    force += std::clamp(std::max(std::abs(f.force[2]) - cfg.force_onset, 0.0), 0.0, cfg.force_cap);
    stumble |= std::hypot(f.force[0], f.force[1]) > cfg.stumble_ratio * std::abs(f.force[2]);
  }
  set(Term::kFeetSlide, slide);
  set(Term::kFlying, in_contact == 0 ? 1.0 : 0.0);
  set(Term::kFeetForce, force);
  const bool active = std::hypot(cmd.vx, cmd.vy) + std::abs(cmd.wz) > cfg.command_threshold;
  double air = 0;
  if (in_contact == 1 && active) {
    const auto& swing = s.feet[0].contact ? s.feet[1] : s.feet[0];
    air = std::min(swing.air_time, cfg.air_time_cap);
  }
  set(Term::kFeetAirTime, air);
  set(Term::kFeetStumble, stumble ? 1.0 : 0.0);

  // Stability.
  const Vec3 gt = projected_gravity(s.torso);
  set(Term::kTorsoOrientation, gt[0] * gt[0] + gt[1] * gt[1]);
  double limits = 0;
  for (int j = 0; j < kLowerJoints; ++j)
    limits += std::max(s.q[j] - cfg.soft_upper[j], 0.0) + std::max(cfg.soft_lower[j] - s.q[j], 0.0);
  set(Term::kJointLimits, limits);
  set(Term::kFlatOrientation, s.gravity[0] * s.gravity[0] + s.gravity[1] * s.gravity[1]);
  const auto& pl = s.feet[0].position;
  const auto& pr = s.feet[1].position;
  set(Term::kFeetDistance,
      std::max(cfg.feet_distance_threshold - norm({pl[0] - pr[0], pl[1] - pr[1], pl[2] - pr[2]}), 0.0));

  // Other.
  double legs = 0, waist = 0;
  for (int j = 0; j < kLowerJoints; ++j) (j < kLegJoints ? legs : waist) += std::abs(s.q[j] - s.q_default[j]);
  set(Term::kJointDeviationLegs, legs);
  set(Term::kJointDeviationWaist, waist);
  set(Term::kTermination, s.terminated ? 1.0 : 0.0);

  for (int i = 0; i < kTermCount; ++i) {
    b.weighted[i] = cfg.weights[i] * b.value[i];
    b.total += b.weighted[i];
  }
  return b;
}

}  // namespace htd::lbc

#endif  // HTD_LBC_REWARDS_HPP_
