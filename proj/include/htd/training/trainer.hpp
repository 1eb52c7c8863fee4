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

// Single-stage training with touch dreaming. One step: teacher latents for
// the future tactile frames, policy rollout, weighted loss, student update,
// then the EMA teacher update.

#ifndef HTD_TRAINING_TRAINER_HPP_
#define HTD_TRAINING_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/core/autograd.hpp"
#include "htd/core/params.hpp"
#include "htd/core/rng.hpp"
#include "htd/data/batch.hpp"
#include "htd/policy/htd_policy.hpp"
#include "htd/tactile/encoder.hpp"
#include "htd/training/losses.hpp"

namespace htd::training {

using policy::PolicyConfig;
using policy::Variant;

/// Where tactile latent targets come from.
enum class TargetMode {
  kEmaTeacher,   // stop-gradient EMA copy (the method)
  kLiveStudent,  // the student's own encoder, gradients flowing (collapse ablation)
};

inline const char* target_mode_name(TargetMode m) { return m == TargetMode::kEmaTeacher ? "ema" : "live"; }
inline TargetMode parse_target_mode(const std::string& s) {
  if (s == "ema") return TargetMode::kEmaTeacher;
  if (s == "live") return TargetMode::kLiveStudent;
  throw std::invalid_argument("unknown target mode '" + s + "' (expected ema or live)");
}

struct TrainConfig {
  int steps = 2000;
  int batch_size = 8;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;
  double ema_decay = 0.996;
  TargetMode targets = TargetMode::kEmaTeacher;
  std::uint64_t seed = 0;
  int log_every = 50;
  int checkpoint_every = 0;  // 0: only the final checkpoint

  void validate() const {
    if (steps < 0 || batch_size < 1) throw std::invalid_argument("steps must be >= 0 and batch_size >= 1");
    if (learning_rate < 0) throw std::invalid_argument("learning rate must be >= 0");
    if (!(ema_decay > 0 && ema_decay < 1)) throw std::invalid_argument("ema_decay must lie in (0, 1)");
    if (!(clip_norm > 0)) throw std::invalid_argument("clip_norm must be > 0");
    if (log_every < 1 || checkpoint_every < 0) throw std::invalid_argument("log/checkpoint intervals invalid");
  }
};

/// First and second moments for one parameter set.
template <class S>
struct AdamMoments {
  std::vector<Tensor<S>> m, v;

  static AdamMoments like(const ParameterSet<S>& ps) {
    AdamMoments a;
    for (const auto& p : ps) {
      a.m.emplace_back(p.value.shape());
      a.v.emplace_back(p.value.shape());
    }
    return a;
  }
  bool operator==(const AdamMoments&) const = default;
};

template <class S>
void adam_update(ParameterSet<S>& ps, AdamMoments<S>& mom, long step, const TrainConfig& cfg, double lr) {
  const S b1 = static_cast<S>(cfg.adam_beta1), b2 = static_cast<S>(cfg.adam_beta2);
  const S c1 = static_cast<S>(1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step)));
  const S c2 = static_cast<S>(1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step)));
  const S eta = static_cast<S>(lr), eps = static_cast<S>(cfg.adam_eps);
  for (ParamId id = 0; id < ps.size(); ++id) {
    auto& p = ps[id];
    auto& m = mom.m[id];
    auto& v = mom.v[id];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const S g = p.grad[i];
      m[i] = b1 * m[i] + (S(1) - b1) * g;
      v[i] = b2 * v[i] + (S(1) - b2) * g * g;
      p.value[i] -= eta * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

template <class S>
struct TrainState {
  policy::HtdPolicy net;
  policy::PolicyParams<S> student;
  tactile::TeacherEncoderState<S> teacher;
  AdamMoments<S> adam_tactile, adam_trunk;
  long step = 0;
  Rng rng;  // batch sampling stream
  TrainConfig train;

  const PolicyConfig& config() const { return net.config(); }

  /// Fresh state: parameters from `train.seed`, teacher initialized to the student.
  static TrainState create(const PolicyConfig& cfg, const TrainConfig& train) {
    train.validate();
    TrainState st;
    st.train = train;
    Rng init(train.seed);
    st.net = policy::HtdPolicy::create(cfg, st.student, init);
    st.teacher = tactile::TeacherEncoderState<S>::from_student(st.student.tactile, train.ema_decay);
    st.adam_tactile = AdamMoments<S>::like(st.student.tactile);
    st.adam_trunk = AdamMoments<S>::like(st.student.trunk);
    st.rng = Rng(train.seed ^ 0x5851F42D4C957F2Dull);
    return st;
  }

  /// Parameters that produce tactile latent targets under the configured mode.
  const ParameterSet<S>& target_params() const {
    return train.targets == TargetMode::kEmaTeacher ? teacher.params : student.tactile;
  }
};

template <class S>
struct LossEvaluation {
  Var<S> total;
  LossBreakdown breakdown;
  policy::PolicyOutput<S> output;
  Var<S> latent_targets;  // [B, tau, 12, d_z] when the latent variant runs
};

/// Tactile latent targets for future frames [B, tau, 2, 1062] -> [B, tau, 12, d_z].
/// In EMA mode these are constants; in live mode they carry student gradients.
template <class S>
Var<S> latent_targets(const TrainState<S>& st, const ag::ParamBinding<S>& student_tactile,
                      const Tensor<S>& future_tactile) {
  const int B = future_tactile.dim(0), tau = future_tactile.dim(1);
  const auto frames = future_tactile.reshaped({B * tau * tactile::kHands, tactile::kTactilePerHand});
  const auto& enc = st.net.tactile_encoder();
  const Shape shape = {B, tau, tactile::kHands * tactile::kRegionsPerHand, enc.latent_dim()};
  if (st.train.targets == TargetMode::kEmaTeacher)
    return ag::constant(tactile::teacher_encode(enc, st.teacher, frames).reshaped(shape));
  return ag::reshape(enc.encode_hand(student_tactile, frames), shape);
}

namespace trainer_detail {

template <class S>
LossEvaluation<S> evaluate(const TrainState<S>& st, const ag::ParamBinding<S>& tac, const ag::ParamBinding<S>& trunk,
                           const data::TrainingBatch<S>& batch) {
  const auto& cfg = st.config();
  const S delta = static_cast<S>(cfg.huber_delta);
  LossEvaluation<S> ev;
  LossBreakdown& br = ev.breakdown;
  br.lambda_force = cfg.lambda_force;
  br.lambda_tactile = cfg.lambda_tactile;

  if (cfg.variant == Variant::kDreamLatent) ev.latent_targets = latent_targets(st, tac, batch.future_tactile);
  ev.output = st.net.forward(tac, trunk, batch.obs);

  // Action targets are [B, h, A]; each modality reads its own column block.
  const auto targets = ag::constant(batch.actions);
  Var<S> total;
  for (int m = 0; m < data::kActionModalities; ++m) {
    const auto mod = static_cast<data::ActionModality>(m);
    auto target = ag::slice(targets, 2, cfg.actions.offset(mod), cfg.actions.dim(mod));
    auto l = bc_loss(ev.output.actions[m], target, delta);
    br.bc[m] = static_cast<double>(l.item());
    total = total.defined() ? ag::add(total, l) : l;
  }
  if (cfg.dreams()) {
    auto lf = force_loss(ev.output.dream.force, ag::constant(batch.future_force), delta);
    br.force = static_cast<double>(lf.item());
    Var<S> lt;
    if (cfg.variant == Variant::kDreamLatent) {
      auto parts = tactile_dream_loss(ev.output.dream.latents, ev.latent_targets, static_cast<S>(cfg.beta), delta);
      lt = parts.total;
      br.tactile_direction = static_cast<double>(parts.direction.item());
      br.tactile_magnitude = static_cast<double>(parts.magnitude.item());
    } else {
      lt = ag::huber_mean(ev.output.dream.raw_tactile, ag::constant(batch.future_tactile), delta);
    }
    br.tactile = static_cast<double>(lt.item());
    total = ag::add(total, ag::add(ag::scale(lf, static_cast<S>(cfg.lambda_force)),
                                   ag::scale(lt, static_cast<S>(cfg.lambda_tactile))));
  }
  ev.total = total;
  br.total = static_cast<double>(total.item());
  return ev;
}

}  // namespace trainer_detail

/// Loss with gradients recorded against the student parameters.
template <class S>
LossEvaluation<S> total_loss(TrainState<S>& st, const data::TrainingBatch<S>& batch) {
  const ag::ParamBinding<S> tac(st.student.tactile), trunk(st.student.trunk);
  return trainer_detail::evaluate(st, tac, trunk, batch);
}

/// Loss values only; no graph is recorded.
template <class S>
LossBreakdown evaluate_loss(const TrainState<S>& st, const data::TrainingBatch<S>& batch) {
  const ag::ParamBinding<S> tac(std::as_const(st.student.tactile)), trunk(std::as_const(st.student.trunk));
  return trainer_detail::evaluate(st, tac, trunk, batch).breakdown;
}

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(long step, const LossBreakdown& br)
      : std::runtime_error("non-finite loss at step " + std::to_string(step) + ": " + br.describe()), breakdown(br) {}
  LossBreakdown breakdown;
};

struct StepResult {
  LossBreakdown loss;
  double grad_norm = 0;  // before clipping
};

/// Global-norm clipping across both parameter sets. Returns the norm before clipping.
template <class S>
double clip_gradients(policy::PolicyParams<S>& ps, double max_norm) {
  const double norm = std::sqrt(ps.tactile.grad_squared_norm() + ps.trunk.grad_squared_norm());
  if (norm > max_norm) {
    const S k = static_cast<S>(max_norm / norm);
    for (auto* set : {&ps.tactile, &ps.trunk})
      for (auto& p : *set)
        for (auto& g : p.grad.values()) g *= k;
  }
  return norm;
}

/// One optimizer step at learning rate `lr`, followed by the EMA teacher update.
template <class S>
StepResult train_step(TrainState<S>& st, const data::TrainingBatch<S>& batch, double lr) {
  st.student.zero_grad();
  auto ev = total_loss(st, batch);
  if (!ev.breakdown.finite()) throw NonFiniteLoss(st.step + 1, ev.breakdown);
  ag::backward(ev.total);
  StepResult res;
  res.loss = ev.breakdown;
  res.grad_norm = clip_gradients(st.student, st.train.clip_norm);
  ++st.step;
  adam_update(st.student.tactile, st.adam_tactile, st.step, st.train, lr);
  adam_update(st.student.trunk, st.adam_trunk, st.step, st.train, lr);
  tactile::ema_update(st.teacher, st.student.tactile);
  return res;
}

template <class S>
StepResult train_step(TrainState<S>& st, const data::TrainingBatch<S>& batch) {
  return train_step(st, batch, st.train.learning_rate);
}

/// Mean absolute error of dreamed forces in raw force units.
template <class S>
double dreamed_force_mae(const Tensor<S>& predicted, const Tensor<S>& target, const data::ChannelStats& stats) {
  const int width = predicted.dim(-1);
  double acc = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const std::size_t c = i % width;
    acc += std::abs(static_cast<double>(predicted[i]) - static_cast<double>(target[i])) * stats.stddev[c];
  }
  return predicted.size() ? acc / static_cast<double>(predicted.size()) : 0.0;
}

/// Append-only CSV metrics log.
class MetricsLog {
 public:
  explicit MetricsLog(std::ostream& out) : out_(&out) {}

  static const char* header() {
    return "step,bc_end_effector,bc_torso,bc_velocity,bc_hand,force,tactile,tactile_direction,tactile_magnitude,"
           "total,grad_norm,force_mae";
  }
  void write_header() { *out_ << header() << '\n'; }
  void write(long step, const StepResult& r, double force_mae) {
    const auto& l = r.loss;
    *out_ << step;
    for (double v : {l.bc[0], l.bc[1], l.bc[2], l.bc[3], l.force, l.tactile, l.tactile_direction,
                     l.tactile_magnitude, l.total, r.grad_norm})
      *out_ << ',' << v;
    *out_ << ',';
    if (std::isfinite(force_mae)) *out_ << force_mae;
    *out_ << '\n';
    out_->flush();
  }

 private:
  std::ostream* out_;
};

struct TrainHooks {
  MetricsLog* log = nullptr;
  /// Called after every step that hits checkpoint_every, and after the last step.
  std::function<void(long step)> checkpoint;
  std::function<void(long step, const StepResult&)> on_step;
};

/// Runs `train.steps - st.step` further steps on uniformly sampled batches.
template <class S>
StepResult train(TrainState<S>& st, const data::Dataset& ds, const TrainHooks& hooks = {}) {
  StepResult last;
  const auto& stats = ds.stats.hand_force;
  while (st.step < st.train.steps) {
    const auto batch = data::sample_training_batch<S>(ds, st.train.batch_size, st.rng);
    last = train_step(st, batch);
    if (hooks.on_step) hooks.on_step(st.step, last);
    if (hooks.log && (st.step % st.train.log_every == 0 || st.step == 1 || st.step == st.train.steps)) {
      double mae = std::nan("");
      if (st.config().dreams()) {
        const auto out = st.net.forward(ag::ParamBinding<S>(std::as_const(st.student.tactile)),
                                        ag::ParamBinding<S>(std::as_const(st.student.trunk)), batch.obs);
        mae = dreamed_force_mae(out.dream.force.value(), batch.future_force, stats);
      }
      hooks.log->write(st.step, last, mae);
    }
    const bool periodic = st.train.checkpoint_every > 0 && st.step % st.train.checkpoint_every == 0;
    if (hooks.checkpoint && (periodic || st.step == st.train.steps)) hooks.checkpoint(st.step);
  }
  return last;
}

}  // namespace htd::training

#endif  // HTD_TRAINING_TRAINER_HPP_
