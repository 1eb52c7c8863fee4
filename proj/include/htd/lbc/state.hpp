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

// Lower-body controller state, commands, observation assembly and the
// distillation loss. Joint order: left leg (6), right leg (6), waist (3).

#ifndef HTD_LBC_STATE_HPP_
#define HTD_LBC_STATE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/lbc/rotation.hpp"

namespace htd::lbc {

inline constexpr int kLowerJoints = 15;
inline constexpr int kLegJoints = 12;
inline constexpr int kFeet = 2;
inline constexpr int kProprioDim = 3 + 3 + 3 * kLowerJoints;  // 51
inline constexpr int kCommandDim = 7;
inline constexpr int kHistoryFrames = 2;
inline constexpr int kStudentObsDim = (kHistoryFrames + 1) * kProprioDim + kCommandDim;  // 160

using JointVec = std::array<double, kLowerJoints>;

struct FootState {
  bool contact = false;
  Vec3 force{};     // contact force (N)
  Vec2 velocity{};  // planar foot velocity (m/s)
  Vec3 position{};  // (m)
  double air_time = 0;  // time since the foot last left the ground (s)
};

struct RobotState {
  Vec3 lin_vel{};     // base linear velocity, world frame (m/s)
  Vec3 ang_vel{};     // base angular velocity, pelvis frame (rad/s)
  Vec3 gravity{0, 0, -1};  // projected gravity, pelvis frame, unit norm
  JointVec q{}, qd{}, qdd{};
  JointVec torque{};
  JointVec action{};       // a_t
  JointVec prev_action{};  // a_{t-1}
  JointVec q_default{};
  double height = 0.75;  // base height (m)
  Quat torso = kIdentityQuat;
  Quat pelvis = kIdentityQuat;
  std::array<FootState, kFeet> feet{};  // left, right
  std::vector<double> nonfoot_forces;   // contact force magnitude per non-foot body (N)
  bool terminated = false;

  /// Standing still: both feet down 0.2 m apart, joints at default.
  static RobotState nominal() {
    RobotState s;
    s.feet[0].contact = s.feet[1].contact = true;
    s.feet[0].position = {0, 0.1, 0};
    s.feet[1].position = {0, -0.1, 0};
    return s;
  }

  void validate() const {
    if (std::abs(norm(gravity) - 1.0) > kUnitTolerance) throw std::invalid_argument("projected gravity is not unit norm");
    require_unit(torso, "torso");
    require_unit(pelvis, "pelvis");
  }
};

struct Command {
  double vx = 0, vy = 0, wz = 0;         // m/s, m/s, rad/s
  double h = 0.75;                       // m
  double roll = 0, pitch = 0, yaw = 0;   // torso, rad

  std::array<double, kCommandDim> to_array() const { return {vx, vy, wz, h, roll, pitch, yaw}; }
};

using Proprio = std::array<double, kProprioDim>;

/// [omega(3), g(3), q(15), qd(15), a_prev(15)].
inline Proprio assemble_proprio(const RobotState& s) {
  Proprio out{};
  auto it = out.begin();
  it = std::copy(s.ang_vel.begin(), s.ang_vel.end(), it);
  it = std::copy(s.gravity.begin(), s.gravity.end(), it);
  it = std::copy(s.q.begin(), s.q.end(), it);
  it = std::copy(s.qd.begin(), s.qd.end(), it);
  std::copy(s.prev_action.begin(), s.prev_action.end(), it);
  return out;
}

/// [s_{t-2}, s_{t-1}, s_t, command]; history holds s_{t-2}, s_{t-1} oldest first.
inline std::vector<double> assemble_student_obs(const std::vector<Proprio>& history, const Proprio& current,
                                                const Command& cmd) {
  if (static_cast<int>(history.size()) != kHistoryFrames)
    throw std::invalid_argument("student history needs exactly " + std::to_string(kHistoryFrames) + " frames, got " +
                                std::to_string(history.size()));
  std::vector<double> out;
  out.reserve(kStudentObsDim);
  for (const auto& f : history) out.insert(out.end(), f.begin(), f.end());
  out.insert(out.end(), current.begin(), current.end());
  const auto c = cmd.to_array();
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

/// Squared L2 distance between student and teacher joint targets.
inline double dagger_loss(const std::vector<double>& student, const std::vector<double>& teacher) {
  if (student.size() != kLowerJoints || teacher.size() != kLowerJoints)
    throw std::invalid_argument("dagger_loss expects two " + std::to_string(kLowerJoints) + "-vectors");
  double acc = 0;
  for (int j = 0; j < kLowerJoints; ++j) acc += (student[j] - teacher[j]) * (student[j] - teacher[j]);
  return acc;
}

}  // namespace htd::lbc

#endif  // HTD_LBC_STATE_HPP_
