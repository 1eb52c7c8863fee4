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

// Checkpoint layout (same container conventions as datasets):
//
//   <dir>/manifest.json   schema echo, config echo, step, rng state,
//                         parameter registry per group, normalization stats
//   <dir>/<group>.bin     little-endian float32 values of every tensor in
//                         the group, registry order
//
// Groups: student_tactile, student_trunk, teacher, and the Adam moments of
// both student sets. Reloading restores training bit-exactly.

#ifndef HTD_TRAINING_CHECKPOINT_HPP_
#define HTD_TRAINING_CHECKPOINT_HPP_

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "htd/data/io.hpp"
#include "htd/training/config_io.hpp"
#include "htd/training/trainer.hpp"

namespace htd::training {

namespace checkpoint_detail {

struct Group {
  std::string name;
  std::vector<std::string> names;
  std::vector<Tensor<float>*> tensors;
};

inline std::vector<Group> groups(TrainState<float>& st) {
  std::vector<Group> out;
  auto add_set = [&](const std::string& name, ParameterSet<float>& ps) {
    Group g{name, {}, {}};
    for (auto& p : ps) {
      g.names.push_back(p.name);
      g.tensors.push_back(&p.value);
    }
    out.push_back(std::move(g));
  };
  auto add_moments = [&](const std::string& name, const ParameterSet<float>& ps, std::vector<Tensor<float>>& ts) {
    Group g{name, {}, {}};
    for (std::size_t i = 0; i < ts.size(); ++i) {
      g.names.push_back(ps[i].name);
      g.tensors.push_back(&ts[i]);
    }
    out.push_back(std::move(g));
  };
  add_set("student_tactile", st.student.tactile);
  add_set("student_trunk", st.student.trunk);
  add_set("teacher", st.teacher.params);
  add_moments("adam_tactile_m", st.student.tactile, st.adam_tactile.m);
  add_moments("adam_tactile_v", st.student.tactile, st.adam_tactile.v);
  add_moments("adam_trunk_m", st.student.trunk, st.adam_trunk.m);
  add_moments("adam_trunk_v", st.student.trunk, st.adam_trunk.v);
  return out;
}

}  // namespace checkpoint_detail

struct LoadedCheckpoint {
  TrainState<float> state;
  std::optional<data::NormalizationStats> stats;
  nlohmann::json manifest;
};

inline nlohmann::json write_checkpoint(TrainState<float>& st, const std::filesystem::path& dir,
                                       const data::NormalizationStats* stats = nullptr) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw data::IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  nlohmann::json registry = nlohmann::json::array();
  for (auto& g : checkpoint_detail::groups(st)) {
    nlohmann::json params = nlohmann::json::array();
    std::vector<std::span<const float>> fields;
    std::size_t floats = 0;
    for (std::size_t i = 0; i < g.tensors.size(); ++i) {
      params.push_back({{"name", g.names[i]}, {"shape", g.tensors[i]->shape()}});
      fields.emplace_back(g.tensors[i]->values());
      floats += g.tensors[i]->size();
    }
    data::write_float_blob(dir / (g.name + ".bin"), fields);
    registry.push_back({{"group", g.name}, {"file", g.name + ".bin"}, {"floats", floats}, {"params", params}});
  }
  nlohmann::json m;
  m["format"] = "htd-checkpoint";
  m["schema"] = data::schema_to_json(st.config().schema, st.config().actions);
  m["config"] = config_values(st.config(), st.train);
  m["step"] = st.step;
  m["rng"] = st.rng.serialize();
  m["groups"] = registry;
  if (stats) {
    m["normalization"] = {{"body", data::stats_to_json(stats->body)},
                          {"hand_proprio", data::stats_to_json(stats->hand_proprio)},
                          {"hand_force", data::stats_to_json(stats->hand_force)},
                          {"tactile", data::stats_to_json(stats->tactile)},
                          {"action", data::stats_to_json(stats->action)}};
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw data::IoError("cannot write checkpoint manifest in " + dir.string());
  out << m.dump(1) << '\n';
  if (!out) throw data::IoError("checkpoint manifest write failed in " + dir.string());
  return m;
}

inline LoadedCheckpoint read_checkpoint(const std::filesystem::path& dir) {
  const auto m = data::read_manifest(dir);
  try {
    if (m.value("format", "") != "htd-checkpoint") throw data::SchemaError("not a checkpoint manifest");
    const auto schema = data::schema_from_json(m.at("schema"));
    PolicyConfig cfg;
    TrainConfig train;
    apply_config(m.at("config").get<std::map<std::string, std::string>>(), cfg, train);
    if (!(cfg.schema == schema)) throw data::SchemaError("checkpoint schema echo disagrees with its config");
    LoadedCheckpoint out{TrainState<float>::create(cfg, train), std::nullopt, m};
    auto& st = out.state;
    st.step = m.at("step").get<long>();
    st.rng.deserialize(m.at("rng").get<std::string>());
    auto gs = checkpoint_detail::groups(st);
    const auto& registry = m.at("groups");
    if (registry.size() != gs.size()) throw data::SchemaError("checkpoint group list does not match this build");
    for (std::size_t k = 0; k < gs.size(); ++k) {
      const auto& entry = registry[k];
      auto& g = gs[k];
      if (entry.at("group").get<std::string>() != g.name) throw data::SchemaError("unexpected checkpoint group order");
      const auto& params = entry.at("params");
      if (params.size() != g.tensors.size())
        throw data::SchemaError("group " + g.name + " holds a different parameter count");
      std::size_t floats = 0;
      for (std::size_t i = 0; i < g.tensors.size(); ++i) {
        if (params[i].at("name").get<std::string>() != g.names[i] ||
            params[i].at("shape").get<Shape>() != g.tensors[i]->shape())
          throw data::SchemaError("parameter " + g.names[i] + " differs between checkpoint and config");
        floats += g.tensors[i]->size();
      }
      if (entry.at("floats").get<std::size_t>() != floats) throw data::SchemaError("group " + g.name + " size mismatch");
      const auto blob = data::read_float_blob(dir / entry.at("file").get<std::string>(), floats);
      std::size_t pos = 0;
      for (auto* t : g.tensors) {
        std::copy_n(blob.begin() + pos, t->size(), t->data());
        pos += t->size();
      }
    }
    if (m.contains("normalization")) {
      const auto& n = m.at("normalization");
      const auto w = data::StreamWidths::of(cfg.schema, cfg.actions);
      data::NormalizationStats s;
      s.body = data::stats_from_json(n.at("body"), w.body, "body");
      s.hand_proprio = data::stats_from_json(n.at("hand_proprio"), w.hand_proprio, "hand_proprio");
      s.hand_force = data::stats_from_json(n.at("hand_force"), w.hand_force, "hand_force");
      s.tactile = data::stats_from_json(n.at("tactile"), w.tactile, "tactile");
      s.action = data::stats_from_json(n.at("action"), w.action, "action");
      out.stats = std::move(s);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw data::SchemaError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

}  // namespace htd::training

#endif  // HTD_TRAINING_CHECKPOINT_HPP_
