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

// Quaternions (w, x, y, z) and intrinsic XYZ Euler angles, where
// R = Rx(roll) * Ry(pitch) * Rz(yaw).

#ifndef HTD_LBC_ROTATION_HPP_
#define HTD_LBC_ROTATION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace htd::lbc {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;
using Quat = std::array<double, 4>;  // w, x, y, z

inline constexpr Quat kIdentityQuat = {1, 0, 0, 0};
inline constexpr double kUnitTolerance = 1e-6;

struct Euler {
  double roll = 0, pitch = 0, yaw = 0;
};

inline double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }
inline double quat_norm(const Quat& q) { return std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]); }

inline void require_unit(const Quat& q, const char* what) {
  if (!(std::abs(quat_norm(q) - 1.0) <= kUnitTolerance))
    throw std::invalid_argument(std::string(what) + " quaternion is not unit norm");
}

inline Quat quat_multiply(const Quat& a, const Quat& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3], a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1], a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

inline Quat axis_angle(int axis, double angle) {
  Quat q{std::cos(angle / 2), 0, 0, 0};
  q[1 + axis] = std::sin(angle / 2);
  return q;
}

inline Quat quat_from_euler(const Euler& e) {
  return quat_multiply(quat_multiply(axis_angle(0, e.roll), axis_angle(1, e.pitch)), axis_angle(2, e.yaw));
}

/// Intrinsic XYZ angles of a unit quaternion. Pitch lies in [-pi/2, pi/2].
inline Euler euler_from_quat(const Quat& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  const double r00 = 1 - 2 * (y * y + z * z), r01 = 2 * (x * y - w * z), r02 = 2 * (x * z + w * y);
  const double r12 = 2 * (y * z - w * x), r22 = 1 - 2 * (x * x + y * y);
  return {std::atan2(-r12, r22), std::asin(std::clamp(r02, -1.0, 1.0)), std::atan2(-r01, r00)};
}

/// v expressed in the body frame: R^T v.
inline Vec3 rotate_inverse(const Quat& q, const Vec3& v) {
  const Quat conj{q[0], -q[1], -q[2], -q[3]};
  const Quat r = quat_multiply(quat_multiply(conj, {0, v[0], v[1], v[2]}), q);
  return {r[1], r[2], r[3]};
}

/// Gravity direction seen from the body frame.
inline Vec3 projected_gravity(const Quat& q) { return rotate_inverse(q, {0, 0, -1}); }

/// Heading of the body x-axis projected on the ground plane.
inline double heading(const Quat& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return std::atan2(2 * (x * y + w * z), 1 - 2 * (y * y + z * z));
}

/// Angle wrapped to (-pi, pi].
inline double wrap_angle(double a) {
  const double two_pi = 2 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

}  // namespace htd::lbc

#endif  // HTD_LBC_ROTATION_HPP_
