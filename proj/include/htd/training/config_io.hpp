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

// Plain-text run configuration: one `key = value` per line, `#` starts a
// comment. The same key table drives parsing, the config echo written into
// checkpoints, and the manifest comparison on reload.

#ifndef HTD_TRAINING_CONFIG_IO_HPP_
#define HTD_TRAINING_CONFIG_IO_HPP_

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/policy/config.hpp"
#include "htd/training/trainer.hpp"

namespace htd::training {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

struct Entry {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

inline std::vector<Entry> entries(PolicyConfig& p, TrainConfig& t) {
  std::vector<Entry> e;
  auto int_entry = [&](const std::string& key, int& ref) {
    e.push_back({key, [&ref] { return std::to_string(ref); },
                 [&ref, key](const std::string& v) { ref = parse_number<int>(key, v); }});
  };
  auto dbl_entry = [&](const std::string& key, double& ref) {
    e.push_back({key, [&ref] { return format_double(ref); },
                 [&ref, key](const std::string& v) { ref = parse_number<double>(key, v); }});
  };
  int_entry("image_height", p.schema.image_height);
  int_entry("image_width", p.schema.image_width);
  int_entry("body_dim", p.schema.body_dim);
  e.push_back({"hand_joints", [&p] { return std::to_string(p.schema.hand_joints); },
               [&p](const std::string& v) { p.schema.hand_joints = p.actions.hand_joints = parse_number<int>("hand_joints", v); }});
  int_entry("horizon", p.actions.horizon);
  int_entry("dream_horizon", p.actions.dream_horizon);
  e.push_back({"variant", [&p] { return std::string(policy::variant_name(p.variant)); },
               [&p](const std::string& v) { p.variant = policy::parse_variant(v); }});
  int_entry("width", p.width);
  int_entry("encoder_layers", p.encoder_layers);
  int_entry("decoder_layers", p.decoder_layers);
  int_entry("heads", p.heads);
  int_entry("ffn_width", p.ffn_width);
  int_entry("image_tokens", p.image_tokens);
  int_entry("state_tokens", p.state_tokens);
  int_entry("tactile_tokens", p.tactile_tokens);
  int_entry("tokens_end_effector", p.outputs.counts[0]);
  int_entry("tokens_torso", p.outputs.counts[1]);
  int_entry("tokens_velocity", p.outputs.counts[2]);
  int_entry("tokens_hand", p.outputs.counts[3]);
  int_entry("cnn_channels_1", p.cnn_channels[0]);
  int_entry("cnn_channels_2", p.cnn_channels[1]);
  int_entry("cnn_channels_3", p.cnn_channels[2]);
  int_entry("state_features", p.state_features);
  int_entry("state_hidden", p.state_hidden);
  int_entry("latent_dim", p.tactile.latent_dim);
  int_entry("tactile_channels", p.tactile.channels);
  int_entry("fusion_hidden", p.tactile.fusion_hidden);
  int_entry("small_patch_cells", p.tactile.small_patch_cells);
  dbl_entry("lambda_force", p.lambda_force);
  dbl_entry("lambda_tactile", p.lambda_tactile);
  dbl_entry("beta", p.beta);
  dbl_entry("huber_delta", p.huber_delta);

  int_entry("steps", t.steps);
  int_entry("batch_size", t.batch_size);
  dbl_entry("learning_rate", t.learning_rate);
  dbl_entry("adam_beta1", t.adam_beta1);
  dbl_entry("adam_beta2", t.adam_beta2);
  dbl_entry("adam_eps", t.adam_eps);
  dbl_entry("clip_norm", t.clip_norm);
  dbl_entry("ema_decay", t.ema_decay);
  e.push_back({"targets", [&t] { return std::string(target_mode_name(t.targets)); },
               [&t](const std::string& v) { t.targets = parse_target_mode(v); }});
  e.push_back({"seed", [&t] { return std::to_string(t.seed); },
               [&t](const std::string& v) { t.seed = parse_number<std::uint64_t>("seed", v); }});
  int_entry("log_every", t.log_every);
  int_entry("checkpoint_every", t.checkpoint_every);
  return e;
}

}  // namespace config_detail

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = config_detail::trim(line.substr(0, eq));
    const auto value = config_detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

/// Applies overrides; unknown keys are errors.
inline void apply_config(const std::map<std::string, std::string>& kv, PolicyConfig& p, TrainConfig& t) {
  auto table = config_detail::entries(p, t);
  for (const auto& [key, value] : kv) {
    bool found = false;
    for (auto& e : table)
      if (e.key == key) {
        try {
          e.set(value);
        } catch (const ConfigError&) {
          throw;
        } catch (const std::invalid_argument& err) {
          throw ConfigError("config key '" + key + "': " + err.what());
        }
        found = true;
        break;
      }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
}

inline std::map<std::string, std::string> config_values(const PolicyConfig& p, const TrainConfig& t) {
  PolicyConfig pc = p;
  TrainConfig tc = t;
  std::map<std::string, std::string> out;
  for (const auto& e : config_detail::entries(pc, tc)) out[e.key] = e.get();
  return out;
}

inline std::string format_config(const PolicyConfig& p, const TrainConfig& t) {
  PolicyConfig pc = p;
  TrainConfig tc = t;
  std::string out;
  for (const auto& e : config_detail::entries(pc, tc)) out += e.key + " = " + e.get() + "\n";
  return out;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

}  // namespace htd::training

#endif  // HTD_TRAINING_CONFIG_IO_HPP_
