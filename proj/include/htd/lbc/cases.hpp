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

// Text case files for checking the controller kernels against hand-computed
// values. A file holds blocks of the form
//
//   case <name> <reward|tracking|dagger|sampler>
//     state foot.L.force 0 0 950
//     command vx 0.3
//     expect term.feet_force 400
//   end
//
// Directives inside a block:
//   state <field> <values...>     fields of RobotState; q[3] style indexes joint vectors,
//                                 torso_rpy / pelvis_rpy take intrinsic XYZ angles
//   command <field> <value>       vx vy wz h roll pitch yaw
//   config <name> <value>         sigma_* / thresholds / weight.<term>
//   step                          append the current state and command to the trajectory
//   student|teacher <values...>   joint targets for dagger cases (student[i] <v> also works)
//   sampler command|randomization, draws <n>, seed <n>
//   expect <quantity> <value> [tolerance]
//   expect range.<field> <lo> <hi>
// Quantities: term.<name>, weighted.<name>, total (reward); E_v E_w E_h E_y E_p E_r
// (tracking); loss (dagger); mean.<field> (sampler). Tolerances default to 1e-9
// and scale with max(1, |expected|). Blank lines and # comments are ignored.

#ifndef HTD_LBC_CASES_HPP_
#define HTD_LBC_CASES_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/lbc/rewards.hpp"
#include "htd/lbc/sampling.hpp"
#include "htd/lbc/tracking.hpp"

namespace htd::lbc {

class CaseFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CaseKind { kReward, kTracking, kDagger, kSampler };

struct Expectation {
  std::string quantity;
  double value = 0;
  double tolerance = 1e-9;
  double upper = 0;  // range checks only
  bool is_range = false;
  int line = 0;
};

struct Case {
  std::string name;
  CaseKind kind = CaseKind::kReward;
  int line = 0;
  RobotState state = RobotState::nominal();
  Command command;
  RewardConfig config;
  std::vector<TrackingStep> trajectory;
  std::vector<double> student = std::vector<double>(kLowerJoints, 0.0);
  std::vector<double> teacher = std::vector<double>(kLowerJoints, 0.0);
  bool sample_commands = true;
  long draws = 1000;
  std::uint64_t seed = 0;
  std::vector<Expectation> expectations;
};

struct CaseResult {
  std::string name;
  bool passed = true;
  std::vector<std::string> failures;
};

namespace case_detail {

inline double number(const std::string& tok, int line) {
  double v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw CaseFileError("line " + std::to_string(line) + ": expected a number, got '" + tok + "'");
  return v;
}

inline std::vector<double> numbers(const std::vector<std::string>& toks, std::size_t from, int line) {
  std::vector<double> out;
  for (std::size_t i = from; i < toks.size(); ++i) out.push_back(number(toks[i], line));
  return out;
}

template <std::size_t N>
void assign(std::array<double, N>& dst, const std::vector<double>& v, const std::string& field, int line) {
  if (v.size() != N)
    throw CaseFileError("line " + std::to_string(line) + ": " + field + " takes " + std::to_string(N) + " values");
  std::copy(v.begin(), v.end(), dst.begin());
}

inline double single(const std::vector<double>& v, const std::string& field, int line) {
  if (v.size() != 1) throw CaseFileError("line " + std::to_string(line) + ": " + field + " takes one value");
  return v[0];
}

/// Splits "name[3]" into ("name", 3); plain names give index -1.
inline std::pair<std::string, int> indexed(const std::string& field, int line) {
  const auto open = field.find('[');
  if (open == std::string::npos) return {field, -1};
  if (field.back() != ']') throw CaseFileError("line " + std::to_string(line) + ": bad index in " + field);
  const int idx = static_cast<int>(number(field.substr(open + 1, field.size() - open - 2), line));
  return {field.substr(0, open), idx};
}

inline void set_joints(JointVec& dst, int idx, const std::vector<double>& v, const std::string& field, int line) {
  if (idx < 0) return assign(dst, v, field, line);
  if (idx >= kLowerJoints) throw CaseFileError("line " + std::to_string(line) + ": joint index out of range");
  dst[idx] = single(v, field, line);
}

inline void set_state(RobotState& s, const std::string& field, const std::vector<double>& v, int line) {
  const auto [name, idx] = indexed(field, line);
  if (name == "lin_vel") return assign(s.lin_vel, v, name, line);
  if (name == "ang_vel") return assign(s.ang_vel, v, name, line);
  if (name == "gravity") return assign(s.gravity, v, name, line);
  if (name == "q") return set_joints(s.q, idx, v, name, line);
  if (name == "qd") return set_joints(s.qd, idx, v, name, line);
  if (name == "qdd") return set_joints(s.qdd, idx, v, name, line);
  if (name == "torque") return set_joints(s.torque, idx, v, name, line);
  if (name == "action") return set_joints(s.action, idx, v, name, line);
  if (name == "prev_action") return set_joints(s.prev_action, idx, v, name, line);
  if (name == "q_default") return set_joints(s.q_default, idx, v, name, line);
  if (name == "height") {
    s.height = single(v, name, line);
    return;
  }
  if (name == "torso_quat") return assign(s.torso, v, name, line);
  if (name == "pelvis_quat") return assign(s.pelvis, v, name, line);
  if (name == "torso_rpy" || name == "pelvis_rpy") {
    Vec3 a{};
    assign(a, v, name, line);
    (name == "torso_rpy" ? s.torso : s.pelvis) = quat_from_euler({a[0], a[1], a[2]});
    return;
  }
  if (name == "nonfoot_forces") {
    s.nonfoot_forces = v;
    return;
  }
  if (name == "terminated") {
    s.terminated = single(v, name, line) != 0;
    return;
  }
  if (name.rfind("foot.", 0) == 0 && name.size() > 7 && name[6] == '.') {
    const char side = name[5];
    if (side != 'L' && side != 'R') throw CaseFileError("line " + std::to_string(line) + ": foot side is L or R");
    auto& f = s.feet[side == 'L' ? 0 : 1];
    const std::string sub = name.substr(7);
    if (sub == "contact") {
      f.contact = single(v, name, line) != 0;
      return;
    }
    if (sub == "force") return assign(f.force, v, name, line);
    if (sub == "velocity") return assign(f.velocity, v, name, line);
    if (sub == "position") return assign(f.position, v, name, line);
    if (sub == "air_time") {
      f.air_time = single(v, name, line);
      return;
    }
  }
  throw CaseFileError("line " + std::to_string(line) + ": unknown state field '" + field + "'");
}

inline void set_command(Command& c, const std::string& field, double v, int line) {
  std::map<std::string, double*> fields = {{"vx", &c.vx},     {"vy", &c.vy},       {"wz", &c.wz}, {"h", &c.h},
                                           {"roll", &c.roll}, {"pitch", &c.pitch}, {"yaw", &c.yaw}};
  const auto it = fields.find(field);
  if (it == fields.end()) throw CaseFileError("line " + std::to_string(line) + ": unknown command field '" + field + "'");
  *it->second = v;
}

inline void set_config(RewardConfig& c, const std::string& field, double v, int line) {
  if (field.rfind("weight.", 0) == 0) {
    try {
      c.weight(parse_term(field.substr(7))) = v;
    } catch (const std::invalid_argument& e) {
      throw CaseFileError("line " + std::to_string(line) + ": " + e.what());
    }
    return;
  }
  std::map<std::string, double*> fields = {{"sigma_vel", &c.sigma_vel},
                                           {"sigma_ang", &c.sigma_ang},
                                           {"sigma_height", &c.sigma_height},
                                           {"sigma_roll", &c.sigma_roll},
                                           {"sigma_pitch", &c.sigma_pitch},
                                           {"sigma_yaw", &c.sigma_yaw},
                                           {"force_onset", &c.force_onset},
                                           {"force_cap", &c.force_cap},
                                           {"stumble_ratio", &c.stumble_ratio},
                                           {"air_time_cap", &c.air_time_cap},
                                           {"command_threshold", &c.command_threshold},
                                           {"feet_distance_threshold", &c.feet_distance_threshold},
                                           {"contact_force_threshold", &c.contact_force_threshold}};
  const auto it = fields.find(field);
  if (it == fields.end()) throw CaseFileError("line " + std::to_string(line) + ": unknown config field '" + field + "'");
  *it->second = v;
}

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line.substr(0, line.find('#')));
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

}  // namespace case_detail

inline std::vector<Case> parse_cases(std::istream& in) {
  using namespace case_detail;
  std::vector<Case> cases;
  Case* cur = nullptr;
  std::string text;
  int line = 0;
  auto fail = [&](const std::string& msg) { throw CaseFileError("line " + std::to_string(line) + ": " + msg); };
  while (std::getline(in, text)) {
    ++line;
    const auto t = tokens(text);
    if (t.empty()) continue;
    const std::string& d = t[0];
    if (!cur) {
      if (d != "case" || t.size() != 3) fail("expected 'case <name> <kind>'");
      Case c;
      c.name = t[1];
      c.line = line;
      if (t[2] == "reward") c.kind = CaseKind::kReward;
      else if (t[2] == "tracking") c.kind = CaseKind::kTracking;
      else if (t[2] == "dagger") c.kind = CaseKind::kDagger;
      else if (t[2] == "sampler") c.kind = CaseKind::kSampler;
      else fail("unknown case kind '" + t[2] + "'");
      cases.push_back(std::move(c));
      cur = &cases.back();
      continue;
    }
    if (d == "end") {
      if (cur->expectations.empty()) fail("case " + cur->name + " has no expectations");
      cur = nullptr;
    } else if (d == "state" && t.size() >= 3) {
      set_state(cur->state, t[1], numbers(t, 2, line), line);
    } else if (d == "command" && t.size() == 3) {
      set_command(cur->command, t[1], number(t[2], line), line);
    } else if (d == "config" && t.size() == 3) {
      set_config(cur->config, t[1], number(t[2], line), line);
    } else if (d == "step" && t.size() == 1) {
      cur->trajectory.push_back({cur->state, cur->command});
    } else if ((d.rfind("student", 0) == 0 || d.rfind("teacher", 0) == 0) && t.size() >= 2) {
      const auto [name, idx] = indexed(d, line);
      if (name != "student" && name != "teacher") fail("unknown directive '" + d + "'");
      auto& dst = name == "student" ? cur->student : cur->teacher;
      const auto v = numbers(t, 1, line);
      if (idx >= 0) {
        if (idx >= kLowerJoints || v.size() != 1) fail("bad indexed " + name);
        dst[idx] = v[0];
      } else {
        dst = v;
      }
    } else if (d == "sampler" && t.size() == 2) {
      if (t[1] != "command" && t[1] != "randomization") fail("sampler is command or randomization");
      cur->sample_commands = t[1] == "command";
    } else if (d == "draws" && t.size() == 2) {
      cur->draws = static_cast<long>(number(t[1], line));
      if (cur->draws < 1) fail("draws must be positive");
    } else if (d == "seed" && t.size() == 2) {
      cur->seed = static_cast<std::uint64_t>(number(t[1], line));
    } else if (d == "expect" && (t.size() == 3 || t.size() == 4)) {
      Expectation e;
      e.quantity = t[1];
      e.line = line;
      e.value = number(t[2], line);
      e.is_range = e.quantity.rfind("range.", 0) == 0;
      if (e.is_range) {
        if (t.size() != 4) fail("range expectations take lo and hi");
        e.upper = number(t[3], line);
      } else if (t.size() == 4) {
        e.tolerance = number(t[3], line);
      }
      cur->expectations.push_back(e);
    } else {
      fail("cannot parse '" + text + "'");
    }
  }
  if (cur) throw CaseFileError("case " + cur->name + " is missing 'end'");
  if (cases.empty()) throw CaseFileError("no cases found");
  return cases;
}

inline std::vector<Case> read_cases(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CaseFileError("cannot read case file " + path);
  return parse_cases(in);
}

namespace case_detail {

/// Named scalar outputs of a case, evaluated once.
inline std::map<std::string, double> evaluate(const Case& c) {
  std::map<std::string, double> out;
  switch (c.kind) {
    case CaseKind::kReward: {
      const auto b = reward_breakdown(c.state, c.command, c.config);
      for (int i = 0; i < kTermCount; ++i) {
        out[std::string("term.") + term_name(static_cast<Term>(i))] = b.value[i];
        out[std::string("weighted.") + term_name(static_cast<Term>(i))] = b.weighted[i];
      }
      out["total"] = b.total;
      break;
    }
    case CaseKind::kTracking: {
      const auto traj = c.trajectory.empty() ? std::vector<TrackingStep>{{c.state, c.command}} : c.trajectory;
      const auto e = tracking_errors(traj);
      out = {{"E_v", e.velocity}, {"E_w", e.angular}, {"E_h", e.height},
             {"E_y", e.yaw},      {"E_p", e.pitch},   {"E_r", e.roll}};
      break;
    }
    case CaseKind::kDagger:
      out["loss"] = dagger_loss(c.student, c.teacher);
      break;
    case CaseKind::kSampler: {
      Rng rng(c.seed);
      std::map<std::string, std::vector<double>> draws;
      for (long i = 0; i < c.draws; ++i) {
        if (c.sample_commands) {
          const auto cmd = sample_command(rng);
          const char* names[] = {"vx", "vy", "wz", "h", "roll", "pitch", "yaw"};
          const auto v = cmd.to_array();
          for (int k = 0; k < kCommandDim; ++k) draws[names[k]].push_back(v[k]);
        } else {
          const auto r = sample_domain_randomization(rng);
          auto& av = draws["ang_vel_noise"];
          av.insert(av.end(), r.ang_vel_noise.begin(), r.ang_vel_noise.end());
          auto& gv = draws["gravity_noise"];
          gv.insert(gv.end(), r.gravity_noise.begin(), r.gravity_noise.end());
          auto& jp = draws["joint_pos_noise"];
          jp.insert(jp.end(), r.joint_pos_noise.begin(), r.joint_pos_noise.end());
          auto& jv = draws["joint_vel_noise"];
          jv.insert(jv.end(), r.joint_vel_noise.begin(), r.joint_vel_noise.end());
          draws["static_friction"].push_back(r.static_friction);
          draws["dynamic_friction"].push_back(r.dynamic_friction);
          draws["restitution"].push_back(r.restitution);
          draws["base_mass"].push_back(r.base_mass);
        }
      }
      for (const auto& [name, v] : draws) {
        double sum = 0;
        for (double x : v) sum += x;
        out["mean." + name] = sum / static_cast<double>(v.size());
        out["min." + name] = *std::min_element(v.begin(), v.end());
        out["max." + name] = *std::max_element(v.begin(), v.end());
      }
      break;
    }
  }
  return out;
}

}  // namespace case_detail

inline CaseResult run_case(const Case& c) {
  CaseResult r{c.name, true, {}};
  std::map<std::string, double> values;
  try {
    values = case_detail::evaluate(c);
  } catch (const std::exception& e) {
    r.passed = false;
    r.failures.push_back(std::string("evaluation error: ") + e.what());
    return r;
  }
  auto lookup = [&](const std::string& key, const Expectation& e) -> const double* {
    const auto it = values.find(key);
    if (it != values.end()) return &it->second;
    r.passed = false;
    r.failures.push_back("line " + std::to_string(e.line) + ": no quantity '" + key + "' for this case kind");
    return nullptr;
  };
  char buf[160];
  for (const auto& e : c.expectations) {
    if (e.is_range) {
      const std::string field = e.quantity.substr(6);
      const double* lo = lookup("min." + field, e);
      const double* hi = lo ? lookup("max." + field, e) : nullptr;
      if (!hi) continue;
      if (*lo < e.value || *hi > e.upper) {
        r.passed = false;
        std::snprintf(buf, sizeof buf, "%s: draws span [%.17g, %.17g], outside [%.17g, %.17g]", e.quantity.c_str(), *lo,
                      *hi, e.value, e.upper);
        r.failures.push_back(buf);
      }
      continue;
    }
    const double* v = lookup(e.quantity, e);
    if (!v) continue;
    const double tol = e.tolerance * std::max(1.0, std::abs(e.value));
    if (!(std::abs(*v - e.value) <= tol)) {
      r.passed = false;
      std::snprintf(buf, sizeof buf, "%s: got %.17g, expected %.17g (tolerance %.3g)", e.quantity.c_str(), *v, e.value,
                    tol);
      r.failures.push_back(buf);
    }
  }
  return r;
}

inline std::vector<CaseResult> run_cases(const std::vector<Case>& cases) {
  std::vector<CaseResult> out;
  for (const auto& c : cases) out.push_back(run_case(c));
  return out;
}

}  // namespace htd::lbc

#endif  // HTD_LBC_CASES_HPP_
