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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "htd/lbc/cases.hpp"
#include "htd/lbc/rewards.hpp"
#include "htd/lbc/rotation.hpp"
#include "htd/lbc/sampling.hpp"
#include "htd/lbc/state.hpp"
#include "htd/lbc/tracking.hpp"

namespace htd::lbc {
namespace {

// Independent oracle: rotation matrices from elementary rotations, and the
// intrinsic XYZ angle extraction read straight off the matrix.
using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Mat3 oracle_matrix(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll), cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const Mat3 rx{{{1, 0, 0}, {0, cr, -sr}, {0, sr, cr}}};
  const Mat3 ry{{{cp, 0, sp}, {0, 1, 0}, {-sp, 0, cp}}};
  const Mat3 rz{{{cy, -sy, 0}, {sy, cy, 0}, {0, 0, 1}}};
  return matmul(matmul(rx, ry), rz);
}

Euler oracle_angles(const Mat3& m) {
  return {std::atan2(-m[1][2], m[2][2]), std::asin(m[0][2]), std::atan2(-m[0][1], m[0][0])};
}

TEST(Proprio, LayoutAndLength) {
  RobotState zero;
  zero.gravity = {0, 0, 0};
  const auto p = assemble_proprio(zero);
  EXPECT_EQ(p.size(), 51u);
  for (double v : p) EXPECT_EQ(v, 0.0);
  zero.q[0] = 1;
  const auto lit = assemble_proprio(zero);
  for (int i = 0; i < kProprioDim; ++i) EXPECT_EQ(lit[i], i == 6 ? 1.0 : 0.0) << i;
  RobotState s = RobotState::nominal();
  s.ang_vel = {1, 2, 3};
  s.qd[14] = 7;
  s.prev_action[0] = 9;
  s.action[0] = 5;  // current action is not observed
  const auto a = assemble_proprio(s);
  EXPECT_EQ(a, assemble_proprio(s));
  EXPECT_EQ(a[2], 3.0);
  EXPECT_EQ(a[5], -1.0);
  EXPECT_EQ(a[6 + 15 + 14], 7.0);
  EXPECT_EQ(a[6 + 30], 9.0);
}

TEST(Proprio, StudentObservation) {
  RobotState s = RobotState::nominal();
  const auto p = assemble_proprio(s);
  Command cmd;
  cmd.vx = 0.3;
  cmd.yaw = -0.2;
  const auto same = assemble_student_obs({p, p}, p, cmd);
  ASSERT_EQ(same.size(), static_cast<std::size_t>(3 * 51 + 7));
  for (int b = 1; b < 3; ++b)
    for (int i = 0; i < kProprioDim; ++i) EXPECT_EQ(same[b * kProprioDim + i], same[i]);
  EXPECT_EQ(same[3 * kProprioDim], 0.3);
  EXPECT_EQ(same[3 * kProprioDim + 6], -0.2);

  std::vector<Proprio> frames(4);
  for (int f = 0; f < 4; ++f) {
    RobotState st = s;
    st.height = f;  // not observed; use a joint instead
    st.q[0] = f;
    frames[f] = assemble_proprio(st);
  }
  const auto o1 = assemble_student_obs({frames[0], frames[1]}, frames[2], cmd);
  const auto o2 = assemble_student_obs({frames[1], frames[2]}, frames[3], cmd);
  for (int i = 0; i < 2 * kProprioDim; ++i) EXPECT_EQ(o2[i], o1[i + kProprioDim]);
  EXPECT_THROW(assemble_student_obs({p}, p, cmd), std::invalid_argument);
  EXPECT_THROW(assemble_student_obs({p, p, p}, p, cmd), std::invalid_argument);
}

TEST(Dagger, SquaredDistance) {
  std::vector<double> a(15, 0.0), b(15, 0.0);
  EXPECT_EQ(dagger_loss(a, b), 0.0);
  a[4] = 1;
  EXPECT_EQ(dagger_loss(a, b), 1.0);
  a = std::vector<double>(15, 0.0);
  a[0] = 3;
  a[1] = 4;
  EXPECT_EQ(dagger_loss(a, b), 25.0);
  EXPECT_THROW(dagger_loss(std::vector<double>(14), b), std::invalid_argument);
}

TEST(Rotation, EulerMatchesMatrixOracle) {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const Euler e{rng.uniform(-3.1, 3.1), rng.uniform(-1.5, 1.5), rng.uniform(-3.1, 3.1)};
    const Quat q = quat_from_euler(e);
    const Mat3 m = oracle_matrix(e.roll, e.pitch, e.yaw);
    const Euler got = euler_from_quat(q), want = oracle_angles(m);
    EXPECT_NEAR(got.roll, want.roll, 1e-9);
    EXPECT_NEAR(got.pitch, want.pitch, 1e-9);
    EXPECT_NEAR(got.yaw, want.yaw, 1e-9);
    EXPECT_NEAR(got.pitch, e.pitch, 1e-9);
    // The quaternion rotates like the matrix: R^T v.
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const Vec3 body = rotate_inverse(q, v);
    for (int r = 0; r < 3; ++r)
      EXPECT_NEAR(body[r], m[0][r] * v[0] + m[1][r] * v[1] + m[2][r] * v[2], 1e-12);
  }
  EXPECT_NEAR(wrap_angle(-6.0), 2 * std::numbers::pi - 6.0, 1e-15);
  EXPECT_EQ(wrap_angle(std::numbers::pi), std::numbers::pi);
}

TEST(Rewards, NominalStanceScoresTrackingWeights) {
  const auto b = reward_breakdown(RobotState::nominal(), Command{}, RewardConfig{});
  for (int i = 0; i < kTermCount; ++i) EXPECT_EQ(b.value[i], i < kTrackingTerms ? 1.0 : 0.0) << term_name(Term(i));
  EXPECT_EQ(b.total, 6.0);
}

TEST(Rewards, FeetForceAndStumbleHandCases) {
  auto s = RobotState::nominal();
  s.feet[0].force = {0, 0, 950};
  auto b = reward_breakdown(s, Command{}, RewardConfig{});
  EXPECT_EQ(b[Term::kFeetForce], 400.0);
  EXPECT_NEAR(b.contribution(Term::kFeetForce), -1.2, 1e-12);
  s = RobotState::nominal();
  s.feet[1].force = {60, 0, 10};
  b = reward_breakdown(s, Command{}, RewardConfig{});
  EXPECT_EQ(b[Term::kFeetStumble], 1.0);
  EXPECT_EQ(b.contribution(Term::kFeetStumble), -2.0);
}

RobotState random_state(Rng& rng) {
  RobotState s;
  for (auto& v : s.lin_vel) v = rng.normal(0, 0.5);
  for (auto& v : s.ang_vel) v = rng.normal(0, 0.5);
  s.gravity = projected_gravity(quat_from_euler({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0}));
  for (auto* j : {&s.q, &s.qd, &s.qdd, &s.torque, &s.action, &s.prev_action, &s.q_default})
    for (auto& v : *j) v = rng.normal(0, 1.5);
  s.height = rng.uniform(0.3, 0.9);
  s.torso = quat_from_euler({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-2, 2)});
  s.pelvis = quat_from_euler({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-3, 3)});
  for (auto& f : s.feet) {
    f.contact = rng.uniform() < 0.6;
    f.force = {rng.normal(0, 50), rng.normal(0, 50), rng.uniform(0, 1200)};
    f.velocity = {rng.normal(0, 0.2), rng.normal(0, 0.2)};
    f.position = {rng.normal(0, 0.2), rng.normal(0, 0.2), 0};
    f.air_time = rng.uniform(0, 1);
  }
  s.nonfoot_forces = {rng.uniform(0, 3), rng.uniform(0, 3)};
  s.terminated = rng.uniform() < 0.1;
  return s;
}

TEST(Rewards, BreakdownIsConsistentOnRandomStates) {
  Rng rng(33);
  RewardConfig cfg;
  for (int i = 0; i < 300; ++i) {
    const auto s = random_state(rng);
    const auto c = sample_command(rng);
    const auto b = reward_breakdown(s, c, cfg);
    double total = 0;
    for (int k = 0; k < kTermCount; ++k) {
      ASSERT_TRUE(std::isfinite(b.value[k]));
      EXPECT_EQ(b.weighted[k], cfg.weights[k] * b.value[k]);
      total += cfg.weights[k] * b.value[k];
      if (k < kTrackingTerms) {
        EXPECT_GT(b.value[k], 0.0);
        EXPECT_LE(b.value[k], 1.0);
      }
    }
    EXPECT_NEAR(b.total, total, 1e-12 * std::max(1.0, std::abs(total)));
  }
}

TEST(Rewards, RejectsBadInputs) {
  auto s = RobotState::nominal();
  s.torso = {1, 0.1, 0, 0};
  EXPECT_THROW(reward_breakdown(s, Command{}, RewardConfig{}), std::invalid_argument);
  s = RobotState::nominal();
  s.gravity = {0, 0, -0.9};
  EXPECT_THROW(reward_breakdown(s, Command{}, RewardConfig{}), std::invalid_argument);
  RewardConfig cfg;
  cfg.weight(Term::kEnergy) = 0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RewardConfig{};
  cfg.sigma_height = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Sampling, CommandRanges) {
  Rng rng(1);
  const CommandRanges table;
  for (int i = 0; i < 10000; ++i) {
    const auto c = sample_command(rng);
    ASSERT_TRUE(table.contains(c));
    ASSERT_GE(c.vx, -0.5);
    ASSERT_LE(c.vx, 0.5);
  }
  CommandRanges fixed;
  fixed.h = {0.6, 0.6};
  EXPECT_EQ(sample_command(rng, fixed).h, 0.6);
  CommandRanges inverted;
  inverted.vx = {0.5, -0.5};
  EXPECT_THROW(sample_command(rng, inverted), std::invalid_argument);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_command(rng).h;
  const double sigma = (0.8 - 0.35) / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(sum / n, 0.575, 3 * sigma);
}

TEST(Sampling, DomainRandomization) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const auto r = sample_domain_randomization(rng);
    ASSERT_GE(r.restitution, 0.0);
    ASSERT_LE(r.restitution, 0.005);
    for (double v : r.joint_pos_noise) ASSERT_LE(std::abs(v), 0.01);
    ASSERT_GE(r.static_friction, 0.6);
    ASSERT_LE(r.static_friction, 1.0);
    ASSERT_LE(std::abs(r.base_mass), 5.0);
  }
  Rng a(5), b(5);
  EXPECT_EQ(sample_domain_randomization(a), sample_domain_randomization(b));
}

TEST(Tracking, HandCases) {
  const auto nominal = RobotState::nominal();
  const auto perfect = tracking_errors({{nominal, Command{}}});
  for (double v : {perfect.velocity, perfect.angular, perfect.height, perfect.yaw, perfect.pitch, perfect.roll})
    EXPECT_EQ(v, 0.0);
  auto high = nominal;
  high.height += 0.1;
  EXPECT_NEAR(tracking_errors({{high, Command{}}}).height, 0.1, 1e-12);

  auto bent = nominal;
  bent.torso = quat_from_euler({0.0, 0.2, 0.0});
  const double oracle_pitch = oracle_angles(oracle_matrix(0.0, 0.2, 0.0)).pitch;
  const auto e = tracking_errors({{bent, Command{}}});
  EXPECT_NEAR(e.pitch, 0.2, 1e-12);
  EXPECT_NEAR(e.pitch, std::abs(oracle_pitch), 1e-12);
  EXPECT_THROW(tracking_errors({}), std::invalid_argument);

  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto r = tracking_errors({{random_state(rng), sample_command(rng)}});
    for (double v : {r.velocity, r.angular, r.height, r.yaw, r.pitch, r.roll}) EXPECT_GE(v, 0.0);
  }
}

TEST(Cases, BundledFilePasses) {
  const auto cases = read_cases(HTD_LBC_CASES_PATH);
  EXPECT_GE(cases.size(), 20u);
  for (const auto& r : run_cases(cases)) {
    EXPECT_TRUE(r.passed) << r.name;
    for (const auto& f : r.failures) ADD_FAILURE() << r.name << ": " << f;
  }
}

TEST(Cases, CorruptedExpectationFailsByName) {
  std::istringstream in("case good reward\n expect total 6\nend\ncase bad reward\n expect total 6.5\nend\n");
  const auto res = run_cases(parse_cases(in));
  ASSERT_EQ(res.size(), 2u);
  EXPECT_TRUE(res[0].passed);
  EXPECT_FALSE(res[1].passed);
  EXPECT_EQ(res[1].name, "bad");
}

TEST(Cases, ParseErrors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_cases(in);
  };
  EXPECT_THROW(parse(""), CaseFileError);
  EXPECT_THROW(parse("# only a comment\n"), CaseFileError);
  EXPECT_THROW(parse("case a reward\n expect total 6\n"), CaseFileError);
  EXPECT_THROW(parse("case a reward\nend\n"), CaseFileError);
  EXPECT_THROW(parse("case a reward\n state nope 1\n expect total 6\nend\n"), CaseFileError);
  EXPECT_THROW(parse("case a reward\n state q[20] 1\n expect total 6\nend\n"), CaseFileError);
  EXPECT_THROW(parse("case a shape\n expect total 6\nend\n"), CaseFileError);
  EXPECT_THROW(parse("case a reward\n expect total six\nend\n"), CaseFileError);
  // Unknown quantities fail the case instead of the parse.
  const auto r = run_cases(parse("case a reward\n expect E_v 0\nend\n"));
  EXPECT_FALSE(r[0].passed);
}

}  // namespace
}  // namespace htd::lbc
