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

// Fixed anatomical layout of one hand's 1062-element tactile reading.
//
// Raw slice order is index, middle, ring, pinky, thumb, palm. Each regular
// finger holds a tip (5x7), top (5x10) and palm-facing (10x10) patch; the
// thumb adds a 5x5 mid patch before its palm-facing patch; the palm is a
// single 8x14 patch. Encoders consume regions in anatomical order (thumb,
// index, middle, ring, pinky, palm), see kEncodeOrder.

#ifndef HTD_TACTILE_LAYOUT_HPP_
#define HTD_TACTILE_LAYOUT_HPP_

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace htd::tactile {

inline constexpr int kTactilePerHand = 1062;
inline constexpr int kRegionsPerHand = 6;
inline constexpr int kPatchesPerHand = 17;
inline constexpr int kHands = 2;

enum class Region { kIndex = 0, kMiddle, kRing, kPinky, kThumb, kPalm };

inline constexpr std::array<Region, kRegionsPerHand> kRawOrder = {Region::kIndex, Region::kMiddle, Region::kRing,
                                                                   Region::kPinky, Region::kThumb, Region::kPalm};
inline constexpr std::array<Region, kRegionsPerHand> kEncodeOrder = {
    Region::kThumb, Region::kIndex, Region::kMiddle, Region::kRing, Region::kPinky, Region::kPalm};

inline const char* region_name(Region r) {
  switch (r) {
    case Region::kIndex: return "index";
    case Region::kMiddle: return "middle";
    case Region::kRing: return "ring";
    case Region::kPinky: return "pinky";
    case Region::kThumb: return "thumb";
    case Region::kPalm: return "palm";
  }
  return "?";
}

inline Region parse_region(const std::string& name) {
  for (Region r : kRawOrder)
    if (name == region_name(r)) return r;
  throw std::invalid_argument("unknown tactile region: " + name);
}

/// Position of a region within kEncodeOrder.
inline int encode_slot(Region r) {
  for (int i = 0; i < kRegionsPerHand; ++i)
    if (kEncodeOrder[i] == r) return i;
  return -1;
}

struct PatchSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  int offset = 0;  // into the raw per-hand vector
  int area() const { return rows * cols; }
};

struct RegionSpec {
  Region region = Region::kIndex;
  int offset = 0;
  int length = 0;
  std::vector<PatchSpec> patches;
};

class RegionLayout {
 public:
  /// Default geometry; totals match the 185/210/112 per-region counts.
  static RegionLayout standard() {
    RegionLayout layout;
    int offset = 0;
    auto add = [&](Region r, std::vector<std::pair<std::string, std::pair<int, int>>> shapes) {
      RegionSpec spec;
      spec.region = r;
      spec.offset = offset;
      for (auto& [name, rc] : shapes) {
        spec.patches.push_back({name, rc.first, rc.second, offset});
        offset += rc.first * rc.second;
      }
      spec.length = offset - spec.offset;
      layout.regions_.push_back(std::move(spec));
    };
    for (Region r : {Region::kIndex, Region::kMiddle, Region::kRing, Region::kPinky})
      add(r, {{"tip", {5, 7}}, {"top", {5, 10}}, {"pad", {10, 10}}});
    add(Region::kThumb, {{"tip", {5, 7}}, {"top", {5, 10}}, {"mid", {5, 5}}, {"pad", {10, 10}}});
    add(Region::kPalm, {{"palm", {8, 14}}});
    layout.validate();
    return layout;
  }

  /// Builds from explicit region specs, e.g. read back from a manifest.
  static RegionLayout from_regions(std::vector<RegionSpec> regions) {
    RegionLayout layout;
    layout.regions_ = std::move(regions);
    layout.validate();
    return layout;
  }

  const std::vector<RegionSpec>& regions() const { return regions_; }
  const RegionSpec& region(Region r) const {
    for (const auto& spec : regions_)
      if (spec.region == r) return spec;
    throw std::out_of_range("region missing from layout");
  }

  int patch_count() const {
    int n = 0;
    for (const auto& r : regions_) n += static_cast<int>(r.patches.size());
    return n;
  }

  bool operator==(const RegionLayout& other) const {
    if (regions_.size() != other.regions_.size()) return false;
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      const auto& a = regions_[i];
      const auto& b = other.regions_[i];
      if (a.region != b.region || a.offset != b.offset || a.length != b.length || a.patches.size() != b.patches.size())
        return false;
      for (std::size_t j = 0; j < a.patches.size(); ++j)
        if (a.patches[j].rows != b.patches[j].rows || a.patches[j].cols != b.patches[j].cols ||
            a.patches[j].offset != b.patches[j].offset)
          return false;
    }
    return true;
  }

  void validate() const {
    if (regions_.size() != kRegionsPerHand) throw std::invalid_argument("tactile layout needs 6 regions");
    int expect = 0;
    int patches = 0;
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      const auto& r = regions_[i];
      if (r.region != kRawOrder[i]) throw std::invalid_argument("tactile regions out of raw order");
      if (r.offset != expect) throw std::invalid_argument("tactile region offsets are not contiguous");
      int sum = 0;
      for (const auto& p : r.patches) {
        if (p.rows <= 0 || p.cols <= 0) throw std::invalid_argument("empty tactile patch");
        if (p.offset != expect + sum) throw std::invalid_argument("tactile patch offsets are not contiguous");
        sum += p.area();
      }
      if (sum != r.length) throw std::invalid_argument("tactile region length disagrees with patch areas");
      expect += sum;
      patches += static_cast<int>(r.patches.size());
    }
    if (expect != kTactilePerHand)
      throw std::invalid_argument("tactile layout covers " + std::to_string(expect) + " cells, expected 1062");
    if (patches != kPatchesPerHand) throw std::invalid_argument("tactile layout needs 17 patches");
  }

 private:
  std::vector<RegionSpec> regions_;
};

/// One 2-D patch map copied out of a raw hand vector.
struct PatchMap {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;  // row-major
};

struct RegionPatches {
  Region region = Region::kIndex;
  std::vector<PatchMap> patches;
};

/// Splits a raw 1062-vector into per-region patch maps, in raw order.
inline std::vector<RegionPatches> decompose_hand_tactile(std::span<const float> raw, const RegionLayout& layout) {
  if (raw.size() != static_cast<std::size_t>(kTactilePerHand))
    throw std::invalid_argument("hand tactile vector has " + std::to_string(raw.size()) + " entries, expected 1062");
  std::vector<RegionPatches> out;
  out.reserve(layout.regions().size());
  for (const auto& spec : layout.regions()) {
    RegionPatches rp;
    rp.region = spec.region;
    for (const auto& p : spec.patches) {
      PatchMap map{p.rows, p.cols, {}};
      map.values.assign(raw.begin() + p.offset, raw.begin() + p.offset + p.area());
      rp.patches.push_back(std::move(map));
    }
    out.push_back(std::move(rp));
  }
  return out;
}

/// Inverse of decompose_hand_tactile.
inline std::vector<float> reassemble_hand_tactile(const std::vector<RegionPatches>& regions,
                                                  const RegionLayout& layout) {
  std::vector<float> raw(kTactilePerHand, 0.0f);
  if (regions.size() != layout.regions().size()) throw std::invalid_argument("region count mismatch");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& spec = layout.regions()[i];
    if (regions[i].region != spec.region || regions[i].patches.size() != spec.patches.size())
      throw std::invalid_argument("patch set does not match layout");
    for (std::size_t j = 0; j < spec.patches.size(); ++j) {
      const auto& p = spec.patches[j];
      const auto& m = regions[i].patches[j];
      if (m.rows != p.rows || m.cols != p.cols || m.values.size() != static_cast<std::size_t>(p.area()))
        throw std::invalid_argument("patch shape does not match layout");
      std::copy(m.values.begin(), m.values.end(), raw.begin() + p.offset);
    }
  }
  return raw;
}

}  // namespace htd::tactile

#endif  // HTD_TACTILE_LAYOUT_HPP_
