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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails. Pass criterion numbers to run a subset:
//
//   htd_acceptance          all ten
//   htd_acceptance 1 6 9    only those

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "htd/data/io.hpp"
#include "htd/eval/dream_trace.hpp"
#include "htd/eval/metrics.hpp"
#include "htd/eval/report.hpp"
#include "htd/lbc/cases.hpp"
#include "htd/lbc/sampling.hpp"
#include "htd/lbc/tracking.hpp"
#include "htd/policy/htd_policy.hpp"
#include "htd/tactile/layout.hpp"
#include "htd/training/checkpoint.hpp"
#include "htd/training/presets.hpp"

namespace {

using namespace htd;
using htd::testing::random_observation;
using htd::testing::tiny_policy_config;
using training::TrainConfig;
using training::TrainState;

/// Outcome of one criterion: pass/fail plus a one-line summary of the numbers.
struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

TrainConfig small_train_config() {
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 3;
  tc.seed = 11;
  return tc;
}

data::TrainingBatch<float> batch_of(const data::Dataset& ds, int size, std::uint64_t seed) {
  Rng rng(seed);
  return data::sample_training_batch<float>(ds, size, rng);
}

template <class S>
bool same_values(const ParameterSet<S>& a, const ParameterSet<S>& b) {
  if (a.size() != b.size()) return false;
  for (ParamId i = 0; i < a.size(); ++i)
    if (!(a[i].value == b[i].value)) return false;
  return true;
}

// --- 1. loss algebra ------------------------------------------------------

Verdict loss_algebra() {
  Verdict v;
  const auto cfg = tiny_policy_config();
  auto tc = small_train_config();
  const auto ds = data::make_synthetic_dataset(4, 7, training::generator_for(cfg, 16));
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    tc.seed = 100 + i;  // fresh initialization every few batches
    auto st = TrainState<float>::create(cfg, tc);
    const auto br = training::evaluate_loss(st, batch_of(ds, 4, 1000 + i));
    const double want = br.recomputed_total();
    worst = std::max(worst, std::abs(br.total - want) / std::max(std::abs(want), 1e-30));
    v.require(br.force > 0 && br.tactile > 0, "dream components active");
  }
  v.require(worst <= 1e-6, "relative error " + fmt("%.3g", worst));
  v.note("100 batches, max relative error " + fmt("%.3g", worst));
  return v;
}

// --- 2. gradients -----------------------------------------------------------

Verdict gradients() {
  Verdict v;
  Rng rng(3);
  using htd::testing::check_leaf_gradients;
  using htd::testing::random_tensor;
  const auto bc = check_leaf_gradients({random_tensor({2, 3, 5}, rng), random_tensor({2, 3, 5}, rng)},
                                       [](const auto& x) { return training::bc_loss(x[0], x[1], 1.0); });
  const auto force = check_leaf_gradients({random_tensor({2, 3, 4}, rng), random_tensor({2, 3, 4}, rng)},
                                          [](const auto& x) { return training::force_loss(x[0], x[1], 0.5); });
  const auto tactile = check_leaf_gradients(
      {random_tensor({2, 2, 3, 6}, rng), random_tensor({2, 2, 3, 6}, rng)},
      [](const auto& x) { return training::tactile_dream_loss(x[0], x[1], 0.5, 1.0).total; });

  auto cfg = tiny_policy_config();
  const auto ds = data::make_synthetic_dataset(3, 7, training::generator_for(cfg, 12));
  auto st = TrainState<double>::create(cfg, small_train_config());
  const auto b = batch_of(ds, 3, 2).cast<double>();
  Rng pick(5);
  double total_err = 0;
  std::size_t probed = 0;
  for (auto* set : {&st.student.trunk, &st.student.tactile}) {
    const auto r = htd::testing::check_param_gradients(
        *set,
        [&](bool with_grad) {
          auto ev = training::total_loss(st, b);
          if (with_grad) ag::backward(ev.total);
          return ev.total.item();
        },
        2, pick);
    total_err = std::max(total_err, r.max_rel_error);
    probed += r.checked;
  }
  const std::pair<const char*, double> errs[] = {{"bc", bc.max_rel_error},
                                                 {"force", force.max_rel_error},
                                                 {"tactile", tactile.max_rel_error},
                                                 {"total", total_err}};
  for (const auto& [name, e] : errs) {
    v.require(e < 1e-3, std::string(name) + " relative error " + fmt("%.3g", e));
    v.note(std::string(name) + " " + fmt("%.2g", e));
  }
  v.note(std::to_string(probed) + " parameter entries probed");
  return v;
}

// --- 3. stop-gradient and EMA ---------------------------------------------

Verdict stop_gradient_and_ema() {
  Verdict v;
  const auto cfg = tiny_policy_config();
  auto tc = small_train_config();
  const auto ds = data::make_synthetic_dataset(3, 7, training::generator_for(cfg, 12));

  // Teacher gradients after a full backward pass.
  auto st = TrainState<double>::create(cfg, tc);
  auto ev = training::total_loss(st, batch_of(ds, 3, 1).cast<double>());
  ag::backward(ev.total);
  v.require(st.student.tactile.grad_squared_norm() > 0, "student receives gradient");
  v.require(st.teacher.params.grad_squared_norm() == 0.0, "teacher gradient is zero");

  // Post-step teacher against alpha * teacher + (1 - alpha) * updated student.
  const double alpha = tc.ema_decay;
  std::size_t mismatches = 0;
  for (int k = 0; k < 5; ++k) {
    const auto before = st.teacher.params;
    training::train_step(st, batch_of(ds, 3, 10 + k).cast<double>());
    for (ParamId i = 0; i < before.size(); ++i) {
      const auto& t = st.teacher.params[i].value;
      const auto& s = st.student.tactile[i].value;
      for (std::size_t j = 0; j < t.size(); ++j) mismatches += t[j] != alpha * before[i].value[j] + (1 - alpha) * s[j];
    }
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " teacher entries off the EMA update");

  // Frozen student (zero learning rate): the gap shrinks by exactly alpha per step.
  auto frozen = TrainState<double>::create(cfg, tc);
  Rng rng(4);
  for (auto& p : frozen.teacher.params)
    for (auto& x : p.value.values()) x += rng.normal(0.0, 0.5);
  auto gap = [&] {
    double acc = 0;
    for (ParamId i = 0; i < frozen.teacher.params.size(); ++i) {
      const auto& t = frozen.teacher.params[i].value;
      const auto& s = frozen.student.tactile[i].value;
      for (std::size_t j = 0; j < t.size(); ++j) acc += (t[j] - s[j]) * (t[j] - s[j]);
    }
    return std::sqrt(acc);
  };
  const auto student0 = frozen.student.tactile;
  const double g0 = gap();
  double worst = 0;
  for (int k = 1; k <= 100; ++k) {
    training::train_step(frozen, batch_of(ds, 3, 200 + k).cast<double>(), 0.0);
    const double want = std::pow(alpha, k);
    worst = std::max(worst, std::abs(gap() / g0 - want) / want);
  }
  v.require(same_values(frozen.student.tactile, student0), "student stays frozen");
  v.require(worst <= 1e-6, "geometric decay error " + fmt("%.3g", worst));
  v.note("teacher grad 0, " + std::to_string(mismatches) + " EMA mismatches, decay error " + fmt("%.2g", worst));
  return v;
}

// --- 4. anti-collapse -------------------------------------------------------

Verdict anti_collapse() {
  Verdict v;
  const auto preset = training::compact_preset();
  const auto ds = data::make_synthetic_dataset(20, 7, training::generator_for(preset.policy, preset.episode_length));
  auto run = [&](training::TargetMode mode) {
    auto tc = preset.train;
    tc.steps = 2000;
    tc.targets = mode;
    auto st = TrainState<float>::create(preset.policy, tc);
    training::train(st, ds);
    return eval::collapse_stats(st, ds);
  };
  const auto ema = run(training::TargetMode::kEmaTeacher);
  const auto live = run(training::TargetMode::kLiveStudent);
  const double gain = ema.ratio / live.ratio;
  v.require(gain >= 10, "EMA ratio only " + fmt("%.3g", gain) + "x the live ablation");
  v.note("contact/free variance ratio EMA " + fmt("%.4g", ema.ratio) + " vs live " + fmt("%.4g", live.ratio) +
         " (" + fmt("%.3g", gain) + "x)");
  return v;
}

// --- 5. overfit sanity ------------------------------------------------------

Verdict overfit() {
  Verdict v;
  const auto preset = training::compact_preset();
  const auto ds = data::make_synthetic_dataset(5, 7, training::generator_for(preset.policy, preset.episode_length));
  auto tc = preset.train;
  tc.steps = 2000;
  auto st = TrainState<float>::create(preset.policy, tc);
  const double bc0 = eval::mean_loss(st, ds, 256).bc_sum();
  training::train(st, ds);
  const double bc1 = eval::mean_loss(st, ds, 256).bc_sum();

  const auto predict = eval::policy_predictor(st);
  double abs_err = 0, sq = 0;
  std::size_t n = 0;
  for (int e = 0; e < static_cast<int>(ds.episodes.size()); ++e) {
    const auto tr = eval::rollout_dream_trace(predict, st, ds, e, preset.policy.actions.dream_horizon);
    for (std::size_t i = 0; i < tr.true_force.size(); ++i) {
      abs_err += std::abs(static_cast<double>(tr.predicted_force[i]) - tr.true_force[i]);
      sq += static_cast<double>(tr.true_force[i]) * tr.true_force[i];
    }
    n += tr.true_force.size();
  }
  const double mae = abs_err / static_cast<double>(n), rms = std::sqrt(sq / static_cast<double>(n));
  v.require(bc1 < 0.05 * bc0, "BC " + fmt("%.4g", bc1) + " not below 5% of " + fmt("%.4g", bc0));
  v.require(mae < 0.1 * rms, "force MAE " + fmt("%.4g", mae) + " not below 10% of RMS " + fmt("%.4g", rms));
  v.note("BC " + fmt("%.4g", bc0) + " -> " + fmt("%.4g", bc1) + " (" + fmt("%.2f", 100 * bc1 / bc0) +
         "%), force MAE " + fmt("%.4g", mae) + " vs RMS " + fmt("%.4g", rms) + " (" + fmt("%.2f", 100 * mae / rms) +
         "%)");
  return v;
}

// --- 6. tactile layout ------------------------------------------------------

Verdict tactile_layout() {
  Verdict v;
  const auto layout = tactile::RegionLayout::standard();
  v.require(layout.patch_count() == 17, "patch count " + std::to_string(layout.patch_count()));
  std::vector<int> lengths;
  for (const auto& r : layout.regions()) lengths.push_back(r.length);
  v.require(lengths == std::vector<int>{185, 185, 185, 185, 210, 112}, "region sizes");
  Rng rng(6);
  int broken = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<float> raw(1062);
    for (auto& x : raw) x = static_cast<float>(rng.normal());
    if (tactile::reassemble_hand_tactile(tactile::decompose_hand_tactile(raw, layout), layout) != raw) ++broken;
  }
  v.require(broken == 0, std::to_string(broken) + " of 1000 vectors changed");
  v.note("17 patches, regions 185x4/210/112, 1000 round trips exact");
  return v;
}

// --- 7. inference purity ----------------------------------------------------

Verdict inference_purity() {
  Verdict v;
  const auto cfg = tiny_policy_config();
  auto bundle = policy::PolicyBundle<float>::create(cfg, 21);
  Rng rng(7);
  std::vector<data::Observation<float>> obs;
  std::vector<std::array<Tensor<float>, data::kActionModalities>> acts;
  bundle.net.reset_dream_calls();
  for (int i = 0; i < 100; ++i) {
    obs.push_back(random_observation<float>(cfg, 1 + i % 3, rng));
    acts.push_back(bundle.net.act(bundle.params, obs.back()));
  }
  const auto calls = bundle.net.dream_calls();
  v.require(calls == 0, std::to_string(calls) + " dream expert calls during act");
  int differ = 0;
  const ag::ParamBinding<float> tac(std::as_const(bundle.params.tactile)), trunk(std::as_const(bundle.params.trunk));
  for (int i = 0; i < 100; ++i) {
    const auto full = bundle.net.forward(tac, trunk, obs[i]);
    for (int m = 0; m < data::kActionModalities; ++m) differ += !(full.actions[m].value() == acts[i][m]);
  }
  v.require(bundle.net.dream_calls() > 0, "forward exercises the dream experts");
  v.require(differ == 0, std::to_string(differ) + " action outputs differ from forward");
  v.note("100 act calls, 0 dream calls, actions bit-identical to forward");
  return v;
}

// --- 8. architecture isolation ----------------------------------------------

Verdict architecture_isolation() {
  Verdict v;
  Rng rng(8);
  int leaks = 0, deaf = 0, blind = 0;
  for (int c = 0; c < 20; ++c) {
    auto cfg = tiny_policy_config(c % 2 ? policy::Variant::kDreamRaw : policy::Variant::kDreamLatent);
    cfg.heads = 1 + static_cast<int>(rng.index(2));
    cfg.width = cfg.heads * (2 + static_cast<int>(rng.index(3)));
    cfg.encoder_layers = 1 + static_cast<int>(rng.index(2));
    cfg.decoder_layers = 1 + static_cast<int>(rng.index(2));
    cfg.image_tokens = 1 + static_cast<int>(rng.index(2));
    cfg.tactile_tokens = 1 + static_cast<int>(rng.index(2));
    for (auto& n : cfg.outputs.counts) n = 1 + static_cast<int>(rng.index(3));
    auto bundle = policy::PolicyBundle<double>::create(cfg, 100 + c);
    const ag::ParamBinding<double> tac(std::as_const(bundle.params.tactile)),
        trunk(std::as_const(bundle.params.trunk));
    const auto obs = random_observation<double>(cfg, 2, rng);
    const auto dec = bundle.net.decoder_tokens(tac, trunk, obs).value();
    const int L = cfg.output_token_count(), d = cfg.width;
    const auto dreams = bundle.net.decode_dreams(trunk, ag::constant(dec), true);
    for (int m = 0; m < data::kActionModalities; ++m) {
      const auto mod = static_cast<data::ActionModality>(m);
      const int off = cfg.outputs.offset(mod), n = cfg.outputs.count(mod);
      auto outside = dec, inside = dec;
      for (int b = 0; b < 2; ++b)
        for (int l = 0; l < L; ++l)
          for (int i = 0; i < d; ++i) {
            auto& target = (l >= off && l < off + n) ? inside : outside;
            target[(static_cast<std::size_t>(b) * L + l) * d + i] += rng.normal();
          }
      const auto base = bundle.net.decode_action(trunk, ag::constant(dec), mod).value();
      leaks += !(bundle.net.decode_action(trunk, ag::constant(outside), mod).value() == base);
      deaf += bundle.net.decode_action(trunk, ag::constant(inside), mod).value() == base;
      const auto moved = bundle.net.decode_dreams(trunk, ag::constant(inside), true);
      blind += moved.force.value() == dreams.force.value();
      blind += moved.latents.value() == dreams.latents.value();
      blind += moved.raw_tactile.value() == dreams.raw_tactile.value();
    }
  }
  v.require(leaks == 0, std::to_string(leaks) + " action experts read outside their span");
  v.require(deaf == 0, std::to_string(deaf) + " action experts ignore their own span");
  v.require(blind == 0, std::to_string(blind) + " dream heads ignore a span");
  v.note("20 random configs, 80 action probes, 240 dream probes");
  return v;
}

// --- 9. controller kernels --------------------------------------------------

// Intrinsic XYZ quaternion composed by hand: rotate about x, then the new y,
// then the new z.
lbc::Quat intrinsic_xyz(double roll, double pitch, double yaw) {
  auto mul = [](const lbc::Quat& a, const lbc::Quat& b) {
    const auto [aw, ax, ay, az] = a;
    const auto [bw, bx, by, bz] = b;
    return lbc::Quat{aw * bw - ax * bx - ay * by - az * bz, aw * bx + ax * bw + ay * bz - az * by,
                     aw * by - ax * bz + ay * bw + az * bx, aw * bz + ax * by - ay * bx + az * bw};
  };

  const lbc::Quat qx{std::cos(roll / 2), std::sin(roll / 2), 0, 0};
  const lbc::Quat qy{std::cos(pitch / 2), 0, std::sin(pitch / 2), 0};
  const lbc::Quat qz{std::cos(yaw / 2), 0, 0, std::sin(yaw / 2)};
  return mul(mul(qx, qy), qz);
}

Verdict controller_kernels() {
  Verdict v;
  const auto cases = lbc::read_cases(HTD_LBC_CASES_PATH);
  const auto results = lbc::run_cases(cases);
  int failed = 0;
  bool feet = false, pitch = false;
  for (const auto& r : results) {
    if (!r.passed) {
      ++failed;
      v.require(false, "case " + r.name);
    }
    feet |= r.name == "feet_force_950N" && r.passed;
    pitch |= r.name == "tracking_pitch_intrinsic_xyz" && r.passed;
  }
  v.require(results.size() >= 20, "only " + std::to_string(results.size()) + " cases");
  v.require(feet, "950 N feet-force case present and passing");
  v.require(pitch, "intrinsic pitch case present and passing");

  // Pitch error of a torso rolled and yawed on command but pitched by 0.2.
  auto state = lbc::RobotState::nominal();
  state.torso = intrinsic_xyz(0.3, 0.2, 0.4);
  lbc::Command cmd;
  cmd.roll = 0.3;
  cmd.yaw = 0.4;
  const auto e = lbc::tracking_errors({{state, cmd}});
  v.require(std::abs(e.pitch - 0.2) <= 1e-9 && e.roll <= 1e-9 && e.yaw <= 1e-9,
            "combined rotation pitch error " + fmt("%.12g", e.pitch));

  // Published training ranges, restated here independently of the library defaults.
  const double cmd_lo[] = {-0.5, -0.5, -1.57, 0.35, -0.7, -0.52, -1.57};
  const double cmd_hi[] = {0.5, 0.5, 1.57, 0.8, 0.7, 1.57, 1.57};
  Rng rng(9);
  int outside = 0;
  std::array<double, lbc::kCommandDim> lo, hi;
  lo.fill(1e9);
  hi.fill(-1e9);
  for (int i = 0; i < 100000; ++i) {
    const auto c = lbc::sample_command(rng).to_array();
    for (int k = 0; k < lbc::kCommandDim; ++k) {
      outside += c[k] < cmd_lo[k] || c[k] > cmd_hi[k];
      lo[k] = std::min(lo[k], c[k]);
      hi[k] = std::max(hi[k], c[k]);
    }
  }
  // 100k uniform draws reach within 0.1% of both ends of every range.
  for (int k = 0; k < lbc::kCommandDim; ++k) {
    const double span = cmd_hi[k] - cmd_lo[k];
    v.require(lo[k] - cmd_lo[k] < 1e-3 * span && cmd_hi[k] - hi[k] < 1e-3 * span, "command range coverage");
  }
  for (int i = 0; i < 100000; ++i) {
    const auto r = lbc::sample_domain_randomization(rng);
    for (double x : r.ang_vel_noise) outside += std::abs(x) > 0.2;
    for (double x : r.gravity_noise) outside += std::abs(x) > 0.05;
    for (double x : r.joint_pos_noise) outside += std::abs(x) > 0.01;
    for (double x : r.joint_vel_noise) outside += std::abs(x) > 1.5;
    outside += r.static_friction < 0.6 || r.static_friction > 1.0;
    outside += r.dynamic_friction < 0.4 || r.dynamic_friction > 0.8;
    outside += r.restitution < 0.0 || r.restitution > 0.005;
    outside += r.base_mass < -5.0 || r.base_mass > 5.0;
  }
  v.require(outside == 0, std::to_string(outside) + " sampled values outside the table ranges");
  v.note(std::to_string(results.size()) + " cases, " + std::to_string(failed) +
         " failed; 2x100k sampler draws in range; combined-rotation pitch error " + fmt("%.12g", e.pitch));
  return v;
}

// --- 10. persistence --------------------------------------------------------

Verdict persistence() {
  Verdict v;
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / ("htd_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const auto cfg = tiny_policy_config();
  const auto ds = data::make_synthetic_dataset(3, 7, training::generator_for(cfg, 12));
  data::write_dataset(ds, root / "data");
  const auto back = data::read_dataset(root / "data");
  bool same = back.episodes.size() == ds.episodes.size() && back.stats == ds.stats && back.schema == ds.schema &&
              back.layout == ds.layout;
  for (std::size_t i = 0; same && i < ds.episodes.size(); ++i) same = back.episodes[i] == ds.episodes[i];
  v.require(same, "dataset round trip");

  auto tc = small_train_config();
  tc.steps = 6;
  auto st = TrainState<float>::create(cfg, tc);
  for (int k = 0; k < 3; ++k) training::train_step(st, data::sample_training_batch<float>(ds, tc.batch_size, st.rng));
  training::write_checkpoint(st, root / "ckpt", &ds.stats);
  auto loaded = training::read_checkpoint(root / "ckpt");
  auto& re = loaded.state;
  v.require(re.step == st.step && re.rng == st.rng, "step and rng restored");
  v.require(same_values(re.student.trunk, st.student.trunk) && same_values(re.student.tactile, st.student.tactile) &&
                same_values(re.teacher.params, st.teacher.params),
            "parameters restored");
  v.require(re.adam_trunk == st.adam_trunk && re.adam_tactile == st.adam_tactile, "optimizer state restored");
  v.require(loaded.stats && *loaded.stats == ds.stats, "normalization stats restored");
  int differ = 0;
  for (int k = 0; k < 3; ++k) {
    const auto a = training::train_step(st, data::sample_training_batch<float>(ds, tc.batch_size, st.rng));
    const auto b = training::train_step(re, data::sample_training_batch<float>(ds, tc.batch_size, re.rng));
    differ += !(a.loss == b.loss) || a.grad_norm != b.grad_norm;
  }
  v.require(differ == 0, std::to_string(differ) + " resumed steps differ");
  fs::remove_all(root);
  v.note("dataset and checkpoint bit-exact; 3 resumed steps identical");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"loss algebra", loss_algebra},
      {"gradient correctness", gradients},
      {"stop-gradient and EMA", stop_gradient_and_ema},
      {"anti-collapse", anti_collapse},
      {"overfit sanity", overfit},
      {"tactile layout", tactile_layout},
      {"inference purity", inference_purity},
      {"architecture isolation", architecture_isolation},
      {"controller kernels", controller_kernels},
      {"persistence", persistence},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", id, criteria[k].first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
