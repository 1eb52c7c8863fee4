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

// Tracking-error metrics averaged over a trajectory, plus the measured
// values reported for the real controller (documentation only).

#ifndef HTD_LBC_TRACKING_HPP_
#define HTD_LBC_TRACKING_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include "htd/lbc/rewards.hpp"
#include "htd/lbc/state.hpp"

namespace htd::lbc {

struct TrackingErrors {
  double velocity = 0;  // planar L2 in the pelvis heading frame (m/s)
  double angular = 0;   // |omega_z - omega_z*| (rad/s)
  double height = 0;    // |h - h*| (m)
  double yaw = 0;       // torso yaw relative to pelvis (rad)
  double pitch = 0;     // absolute torso pitch (rad)
  double roll = 0;      // torso roll relative to pelvis (rad)
};

struct TrackingStep {
  RobotState state;
  Command command;
};

inline TrackingErrors tracking_errors(const std::vector<TrackingStep>& trajectory) {
  if (trajectory.empty()) throw std::invalid_argument("tracking_errors needs a nonempty trajectory");
  TrackingErrors e;
  for (const auto& [s, c] : trajectory) {
    s.validate();
    const Vec2 v = yaw_frame_velocity(s);
    const Euler a = torso_tracking_angles(s);
    e.velocity += std::hypot(v[0] - c.vx, v[1] - c.vy);
    e.angular += std::abs(s.ang_vel[2] - c.wz);
    e.height += std::abs(s.height - c.h);
    e.yaw += std::abs(wrap_angle(a.yaw - c.yaw));
    e.pitch += std::abs(wrap_angle(a.pitch - c.pitch));
    e.roll += std::abs(wrap_angle(a.roll - c.roll));
  }
  const double n = static_cast<double>(trajectory.size());
  for (double* f : {&e.velocity, &e.angular, &e.height, &e.yaw, &e.pitch, &e.roll}) *f /= n;
  return e;
}

/// Mean and standard deviation measured on the real controller in physics
/// simulation. Shipped for report rendering, never asserted.
struct Measured {
  double mean, stddev;
};
struct ReferenceTracking {
  Measured velocity{0.1420, 0.0568}, angular{0.1806, 0.0534}, height{0.0280, 0.0438};
  Measured yaw{0.0126, 0.0051}, pitch{0.0487, 0.1796}, roll{0.0157, 0.0065};
};
struct ReferenceStableRanges {
  double height[2] = {0.33, 0.80};
  double roll[2] = {-0.38, 0.35};
  double pitch[2] = {-0.92, 1.41};
  double yaw[2] = {-1.50, 1.34};
};

}  // namespace htd::lbc

#endif  // HTD_LBC_TRACKING_HPP_
