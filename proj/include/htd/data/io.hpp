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

// On-disk dataset layout:
//
//   <dir>/manifest.json   schema version, modality shapes, tactile region
//                         layout, normalization statistics, episode index
//   <dir>/ep_<k>.bin      little-endian float32, field-major:
//                         images | body | hand_proprio | hand_force |
//                         tactile | action, each [T x width]
//
// The manifest repeats the field order and widths so a reader can check a
// blob's byte length before touching its contents.

#ifndef HTD_DATA_IO_HPP_
#define HTD_DATA_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "htd/data/episode.hpp"
#include "htd/tactile/layout.hpp"

namespace htd::data {

/// Schema, version or layout disagreement between a file and this build.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, truncated or unreadable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io_detail {

inline void append_le(std::vector<char>& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 4);
  char* dst = out.data() + start;
  for (float v : values) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) *dst++ = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
}

inline void read_le(const char* src, std::span<float> out) {
  for (float& v : out) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(*src++)) << (8 * b);
    v = std::bit_cast<float>(bits);
  }
}

}  // namespace io_detail

/// Writes a float vector as a little-endian float32 blob.
inline void write_float_blob(const std::filesystem::path& path, const std::vector<std::span<const float>>& fields) {
  std::vector<char> bytes;
  for (const auto& f : fields) io_detail::append_le(bytes, f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

/// Reads a float32 blob whose length must be exactly `count` floats.
inline std::vector<float> read_float_blob(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open: " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size != count * 4)
    throw IoError("blob " + path.string() + " holds " + std::to_string(size) + " bytes, manifest expects " +
                  std::to_string(count * 4));
  in.seekg(0);
  std::vector<char> bytes(size);
  in.read(bytes.data(), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failed: " + path.string());
  std::vector<float> out(count);
  io_detail::read_le(bytes.data(), out);
  return out;
}

inline nlohmann::json layout_to_json(const tactile::RegionLayout& layout) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : layout.regions()) {
    nlohmann::json patches = nlohmann::json::array();
    for (const auto& p : r.patches)
      patches.push_back({{"name", p.name}, {"rows", p.rows}, {"cols", p.cols}, {"offset", p.offset}});
    regions.push_back({{"region", tactile::region_name(r.region)},
                       {"offset", r.offset},
                       {"length", r.length},
                       {"patches", patches}});
  }
  return regions;
}

inline tactile::RegionLayout layout_from_json(const nlohmann::json& j) {
  std::vector<tactile::RegionSpec> regions;
  for (const auto& r : j) {
    tactile::RegionSpec spec;
    spec.region = tactile::parse_region(r.at("region").get<std::string>());
    spec.offset = r.at("offset").get<int>();
    spec.length = r.at("length").get<int>();
    for (const auto& p : r.at("patches"))
      spec.patches.push_back({p.at("name").get<std::string>(), p.at("rows").get<int>(), p.at("cols").get<int>(),
                              p.at("offset").get<int>()});
    regions.push_back(std::move(spec));
  }
  try {
    return tactile::RegionLayout::from_regions(std::move(regions));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("tactile layout: ") + e.what());
  }
}

inline nlohmann::json stats_to_json(const ChannelStats& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

inline ChannelStats stats_from_json(const nlohmann::json& j, int width, const char* name) {
  ChannelStats s;
  s.mean = j.at("mean").get<std::vector<float>>();
  s.stddev = j.at("std").get<std::vector<float>>();
  if (s.mean.size() != static_cast<std::size_t>(width) || s.stddev.size() != static_cast<std::size_t>(width))
    throw SchemaError(std::string("normalization stats for '") + name + "' have the wrong width");
  return s;
}

inline nlohmann::json schema_to_json(const ModalitySchema& m, const ActionSchema& a) {
  const int views = kImageViews;
  return {{"schema_version", kSchemaVersion},
          {"image", {{"views", views}, {"channels", 3}, {"height", m.image_height}, {"width", m.image_width},
                     {"order", "view,channel,row,col"}}},
          {"body_dim", m.body_dim},
          {"hand_joints", m.hand_joints},
          {"tactile_per_hand", tactile::kTactilePerHand},
          {"action_dim", a.total()}};
}

/// Checks a schema echo (from a dataset or checkpoint manifest) and returns the modality schema.
inline ModalitySchema schema_from_json(const nlohmann::json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion)
    throw SchemaError("schema version " + std::to_string(version) + " not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  const int tactile_dim = j.at("tactile_per_hand").get<int>();
  if (tactile_dim != tactile::kTactilePerHand)
    throw SchemaError("tactile shape " + std::to_string(tactile_dim) + " per hand, expected 1062");
  ModalitySchema m;
  const auto& img = j.at("image");
  if (img.at("views").get<int>() != kImageViews || img.at("channels").get<int>() != 3)
    throw SchemaError("image views/channels do not match");
  m.image_height = img.at("height").get<int>();
  m.image_width = img.at("width").get<int>();
  m.body_dim = j.at("body_dim").get<int>();
  m.hand_joints = j.at("hand_joints").get<int>();
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  ActionSchema a;
  a.hand_joints = m.hand_joints;
  if (j.at("action_dim").get<int>() != a.total()) throw SchemaError("action width does not match hand joints");
  return m;
}

inline std::string episode_file(std::size_t k) { return "ep_" + std::to_string(k) + ".bin"; }

/// Writes manifest + blobs. The directory is created if needed.
inline nlohmann::json write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  const auto w = StreamWidths::of(ds.schema, ds.actions);

  nlohmann::json index = nlohmann::json::array();
  for (std::size_t k = 0; k < ds.episodes.size(); ++k) {
    const auto& ep = ds.episodes[k];
    validate_episode(ep, ds.schema, ds.actions);
    write_float_blob(dir / episode_file(k), {ep.images, ep.body, ep.hand_proprio, ep.hand_force, ep.tactile, ep.action});
    std::vector<int> phases;
    for (Phase p : ep.phases) phases.push_back(static_cast<int>(p));
    std::vector<int> contact(ep.contact.begin(), ep.contact.end());
    index.push_back({{"file", episode_file(k)},
                     {"length", ep.length},
                     {"seed", ep.seed},
                     {"scenario", ep.scenario},
                     {"floats", static_cast<std::size_t>(ep.length) * w.per_step()},
                     {"phases", phases},
                     {"contact", contact}});
  }
  nlohmann::json manifest = schema_to_json(ds.schema, ds.actions);
  manifest["format"] = "htd-dataset";
  manifest["fields"] = {{{"name", "images"}, {"width", w.images}},
                        {{"name", "body"}, {"width", w.body}},
                        {{"name", "hand_proprio"}, {"width", w.hand_proprio}},
                        {{"name", "hand_force"}, {"width", w.hand_force}},
                        {{"name", "tactile"}, {"width", w.tactile}},
                        {{"name", "action"}, {"width", w.action}}};
  manifest["action_layout"] = {"end_effector:18", "torso:4", "velocity:3",
                               "hand:" + std::to_string(ds.actions.dim(ActionModality::kHand))};
  manifest["tactile_layout"] = layout_to_json(ds.layout);
  manifest["normalization"] = {{"body", stats_to_json(ds.stats.body)},
                               {"hand_proprio", stats_to_json(ds.stats.hand_proprio)},
                               {"hand_force", stats_to_json(ds.stats.hand_force)},
                               {"tactile", stats_to_json(ds.stats.tactile)},
                               {"action", stats_to_json(ds.stats.action)}};
  manifest["episodes"] = index;

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(1) << '\n';
  if (!out) throw IoError("manifest write failed in " + dir.string());
  return manifest;
}

inline nlohmann::json read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + dir.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("manifest is not valid JSON: ") + e.what());
  }
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir);
  Dataset ds;
  try {
    if (manifest.value("format", "") != "htd-dataset") throw SchemaError("not a dataset manifest");
    ds.schema = schema_from_json(manifest);
    ds.actions.hand_joints = ds.schema.hand_joints;
    ds.layout = layout_from_json(manifest.at("tactile_layout"));
    const auto w = StreamWidths::of(ds.schema, ds.actions);
    const auto& fields = manifest.at("fields");
    const std::vector<std::pair<std::string, int>> expect = {{"images", w.images},   {"body", w.body},
                                                             {"hand_proprio", w.hand_proprio},
                                                             {"hand_force", w.hand_force},
                                                             {"tactile", w.tactile}, {"action", w.action}};
    if (fields.size() != expect.size()) throw SchemaError("unexpected field list");
    for (std::size_t i = 0; i < expect.size(); ++i)
      if (fields[i].at("name").get<std::string>() != expect[i].first || fields[i].at("width").get<int>() != expect[i].second)
        throw SchemaError("field '" + expect[i].first + "' disagrees with the schema");
    const auto& norm = manifest.at("normalization");
    ds.stats.body = stats_from_json(norm.at("body"), w.body, "body");
    ds.stats.hand_proprio = stats_from_json(norm.at("hand_proprio"), w.hand_proprio, "hand_proprio");
    ds.stats.hand_force = stats_from_json(norm.at("hand_force"), w.hand_force, "hand_force");
    ds.stats.tactile = stats_from_json(norm.at("tactile"), w.tactile, "tactile");
    ds.stats.action = stats_from_json(norm.at("action"), w.action, "action");

    for (const auto& e : manifest.at("episodes")) {
      Episode ep;
      ep.length = e.at("length").get<int>();
      ep.seed = e.at("seed").get<std::uint64_t>();
      ep.scenario = e.at("scenario").get<std::string>();
      const std::size_t T = static_cast<std::size_t>(ep.length);
      const std::size_t floats = e.at("floats").get<std::size_t>();
      if (floats != T * w.per_step()) throw SchemaError("episode float count disagrees with schema");
      auto blob = read_float_blob(dir / e.at("file").get<std::string>(), floats);
      auto take = [&, pos = std::size_t{0}](int width) mutable {
        std::vector<float> v(blob.begin() + pos, blob.begin() + pos + T * width);
        pos += T * width;
        return v;
      };
      ep.images = take(w.images);
      ep.body = take(w.body);
      ep.hand_proprio = take(w.hand_proprio);
      ep.hand_force = take(w.hand_force);
      ep.tactile = take(w.tactile);
      ep.action = take(w.action);
      for (int p : e.at("phases").get<std::vector<int>>()) {
        if (p < 0 || p > 4) throw SchemaError("bad phase label");
        ep.phases.push_back(static_cast<Phase>(p));
      }
      for (int c : e.at("contact").get<std::vector<int>>()) ep.contact.push_back(static_cast<std::uint8_t>(c != 0));
      validate_episode(ep, ds.schema, ds.actions);
      ds.episodes.push_back(std::move(ep));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return ds;
}

}  // namespace htd::data

#endif  // HTD_DATA_IO_HPP_
