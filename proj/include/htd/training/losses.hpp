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

#ifndef HTD_TRAINING_LOSSES_HPP_
#define HTD_TRAINING_LOSSES_HPP_

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "htd/core/autograd.hpp"
#include "htd/data/episode.hpp"

namespace htd::training {

using ag::Var;

/// Mean smooth-L1 between predicted and target action chunks of one modality.
template <class S>
Var<S> bc_loss(const Var<S>& predicted, const Var<S>& target, S delta) {
  return ag::huber_mean(predicted, target, delta);
}

/// Mean smooth-L1 over samples, dream steps and force channels.
template <class S>
Var<S> force_loss(const Var<S>& predicted, const Var<S>& target, S delta) {
  return ag::huber_mean(predicted, target, delta);
}

template <class S>
struct TactileLoss {
  Var<S> total;
  Var<S> direction;  // mean (1 - cos)
  Var<S> magnitude;  // mean huber(|z_hat| - |z*|)
};

/// Cosine direction term plus beta-weighted norm alignment, averaged over
/// every region latent (last axis is the latent dimension).
template <class S>
TactileLoss<S> tactile_dream_loss(const Var<S>& predicted, const Var<S>& target, S beta, S delta,
                                  S eps = S(1e-8)) {
  TactileLoss<S> out;
  out.direction = ag::cosine_distance_mean(predicted, target, eps);
  out.magnitude = ag::norm_huber_mean(predicted, target, delta);
  out.total = ag::add(out.direction, ag::scale(out.magnitude, beta));
  return out;
}

/// Scalar loss values of one evaluation, in double for reporting.
struct LossBreakdown {
  std::array<double, data::kActionModalities> bc{};  // ActionModality order
  double force = 0;
  double tactile = 0;            // latent loss, or raw smooth-L1 for dream-raw
  double tactile_direction = 0;  // latent variant only
  double tactile_magnitude = 0;  // latent variant only
  double lambda_force = 0;
  double lambda_tactile = 0;
  double total = 0;  // value of the optimized scalar

  double bc_sum() const {
    double s = 0;
    for (double v : bc) s += v;
    return s;
  }
  /// Weighted sum rebuilt from the components.
  double recomputed_total() const { return bc_sum() + lambda_force * force + lambda_tactile * tactile; }
  bool finite() const {
    for (double v : bc)
      if (!std::isfinite(v)) return false;
    return std::isfinite(force) && std::isfinite(tactile) && std::isfinite(total);
  }
  std::string describe() const {
    std::ostringstream os;
    os << "bc[ee=" << bc[0] << " torso=" << bc[1] << " vel=" << bc[2] << " hand=" << bc[3] << "] force=" << force
       << " tactile=" << tactile << " (dir=" << tactile_direction << " mag=" << tactile_magnitude
       << ") total=" << total;
    return os.str();
  }
  bool operator==(const LossBreakdown&) const = default;
};

}  // namespace htd::training

#endif  // HTD_TRAINING_LOSSES_HPP_
