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

// Per-region tactile encoder and its EMA teacher.
//
// Every patch gets its own convolution branch: patches with at most 50 cells
// use a single 3x3 convolution, larger ones two. Each branch pools to 2x2;
// a region concatenates its branch outputs and fuses them with a one-hidden-
// layer MLP into a d_z latent. Both hands share the same region encoders.

#ifndef HTD_TACTILE_ENCODER_HPP_
#define HTD_TACTILE_ENCODER_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "htd/core/autograd.hpp"
#include "htd/core/nn.hpp"
#include "htd/core/params.hpp"
#include "htd/tactile/layout.hpp"

namespace htd::tactile {

struct EncoderConfig {
  int latent_dim = 64;        // d_z
  int channels = 8;           // per convolution branch
  int fusion_hidden = 128;
  int small_patch_cells = 50;  // at or below: single convolution
  int pool = 2;

  void validate() const {
    if (latent_dim < 1 || channels < 1 || fusion_hidden < 1 || pool < 1)
      throw std::invalid_argument("tactile encoder sizes must be positive");
  }
};

struct PatchBranch {
  nn::Conv2d first;
  nn::Conv2d second;
  bool deep = false;
};

struct RegionEncoder {
  Region region = Region::kIndex;
  std::vector<PatchBranch> branches;  // one per patch, layout order
  nn::Mlp fusion;
};

/// Parameters live in the ParameterSet passed to create(); this struct only
/// records ids, so the same object drives the student and the teacher copy.
class TactileEncoder {
 public:
  template <class S>
  static TactileEncoder create(ParameterSet<S>& ps, const EncoderConfig& cfg, const RegionLayout& layout, Rng& rng) {
    cfg.validate();
    TactileEncoder enc;
    enc.cfg_ = cfg;
    enc.layout_ = layout;
    for (Region r : kEncodeOrder) {
      const auto& spec = layout.region(r);
      RegionEncoder re;
      re.region = r;
      const std::string base = std::string("tactile.") + region_name(r);
      for (const auto& p : spec.patches) {
        PatchBranch b;
        b.deep = p.area() > cfg.small_patch_cells;
        b.first = nn::Conv2d::create(ps, base + "." + p.name + ".conv1", 1, cfg.channels, 3, 1, 1, rng);
        if (b.deep) b.second = nn::Conv2d::create(ps, base + "." + p.name + ".conv2", cfg.channels, cfg.channels, 3, 1, 1, rng);
        re.branches.push_back(b);
      }
      const int fused = static_cast<int>(spec.patches.size()) * cfg.channels * cfg.pool * cfg.pool;
      re.fusion = nn::Mlp::create(ps, base + ".fusion", fused, cfg.fusion_hidden, cfg.latent_dim, rng);
      enc.regions_.push_back(std::move(re));
    }
    return enc;
  }

  const EncoderConfig& config() const { return cfg_; }
  const RegionLayout& layout() const { return layout_; }
  int latent_dim() const { return cfg_.latent_dim; }
  const RegionEncoder& region_encoder(int slot) const { return regions_.at(slot); }

  /// Patch tensors for one region, each [N, 1, rows, cols], cut from raw [N, 1062].
  template <class S>
  std::vector<Tensor<S>> region_patches(const Tensor<S>& raw, Region r) const {
    check_shape(raw.rank() == 2 && raw.dim(1) == kTactilePerHand,
                "tactile input must be [N, 1062], got " + shape_string(raw.shape()));
    const int N = raw.dim(0);
    std::vector<Tensor<S>> out;
    for (const auto& p : layout_.region(r).patches) {
      Tensor<S> t({N, 1, p.rows, p.cols});
      for (int n = 0; n < N; ++n)
        std::copy_n(raw.data() + static_cast<std::size_t>(n) * kTactilePerHand + p.offset, p.area(),
                    t.data() + static_cast<std::size_t>(n) * p.area());
      out.push_back(std::move(t));
    }
    return out;
  }

  /// Embeds one region from its patch maps -> [N, d_z].
  template <class S>
  ag::Var<S> encode_region(const ag::ParamBinding<S>& p, int slot, const std::vector<Tensor<S>>& patches) const {
    const auto& re = regions_.at(slot);
    const auto& spec = layout_.region(re.region);
    check_shape(patches.size() == spec.patches.size(), std::string("region ") + region_name(re.region) + " expects " +
                                                           std::to_string(spec.patches.size()) + " patches");
    std::vector<ag::Var<S>> pooled;
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const auto& ps = spec.patches[i];
      const auto& x = patches[i];
      check_shape(x.rank() == 4 && x.dim(1) == 1 && x.dim(2) == ps.rows && x.dim(3) == ps.cols,
                  "patch " + ps.name + " has shape " + shape_string(x.shape()) + ", layout says " +
                      std::to_string(ps.rows) + "x" + std::to_string(ps.cols));
      const auto& b = re.branches[i];
      auto h = ag::gelu(b.first(p, ag::constant(x)));
      if (b.deep) h = ag::gelu(b.second(p, h));
      h = ag::adaptive_avg_pool2d(h, cfg_.pool, cfg_.pool);
      pooled.push_back(ag::reshape(h, {x.dim(0), cfg_.channels * cfg_.pool * cfg_.pool}));
    }
    return re.fusion(p, ag::concat(pooled, 1));
  }

  /// Embeds every region of every row: raw [N, 1062] -> [N, 6, d_z], regions in
  /// encode order (thumb, index, middle, ring, pinky, palm).
  template <class S>
  ag::Var<S> encode_hand(const ag::ParamBinding<S>& p, const Tensor<S>& raw) const {
    const int N = raw.dim(0);
    std::vector<ag::Var<S>> parts;
    for (int slot = 0; slot < kRegionsPerHand; ++slot) {
      auto z = encode_region(p, slot, region_patches(raw, kEncodeOrder[slot]));
      parts.push_back(ag::reshape(z, {N, 1, cfg_.latent_dim}));
    }
    return ag::concat(parts, 1);
  }

 private:
  EncoderConfig cfg_;
  RegionLayout layout_ = RegionLayout::standard();
  std::vector<RegionEncoder> regions_;
};

/// Teacher copy of the student encoder parameters. Only ema_update writes it.
template <class S>
struct TeacherEncoderState {
  ParameterSet<S> params;
  double alpha = 0.996;

  static TeacherEncoderState from_student(const ParameterSet<S>& student, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("EMA decay must lie in (0, 1)");
    return {student, alpha};
  }
};

/// Embeds with the teacher parameters. The binding is read-only, so no graph
/// is recorded and the result is a constant for any downstream loss.
template <class S>
Tensor<S> teacher_encode(const TactileEncoder& enc, const TeacherEncoderState<S>& teacher, const Tensor<S>& raw) {
  const ag::ParamBinding<S> frozen(teacher.params);
  return enc.encode_hand(frozen, raw).value();
}

/// theta_T <- alpha * theta_T + (1 - alpha) * theta, element-wise.
template <class S>
void ema_update(ParameterSet<S>& teacher, const ParameterSet<S>& student, double alpha) {
  if (!teacher.same_layout(student)) throw std::invalid_argument("teacher and student parameter layouts differ");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("EMA decay must lie in (0, 1)");
  const S a = static_cast<S>(alpha);
  const S b = static_cast<S>(1.0 - alpha);
  for (ParamId id = 0; id < teacher.size(); ++id) {
    auto& t = teacher[id].value;
    const auto& s = student[id].value;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = a * t[i] + b * s[i];
  }
}

template <class S>
void ema_update(TeacherEncoderState<S>& teacher, const ParameterSet<S>& student) {
  ema_update(teacher.params, student, teacher.alpha);
}

}  // namespace htd::tactile

#endif  // HTD_TACTILE_ENCODER_HPP_
