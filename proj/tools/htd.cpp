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

// htd: command-line entry point.
//
//   htd gen-data  --episodes N --seed S --out DIR
//   htd train     --data DIR --out DIR [--variant V] [--targets ema|live]
//   htd eval      --data DIR --checkpoint DIR... --out DIR [--finger left.index]
//   htd lbc-check [--cases FILE]
//
// Exit codes: 0 success, 1 domain failure, 2 usage error. Relative --out
// paths are resolved under $HTD_OUTPUT_ROOT when it is set. Values from
// --config override the corresponding flags; paths are never read from it.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htd/data/io.hpp"
#include "htd/data/synthetic.hpp"
#include "htd/eval/dream_trace.hpp"
#include "htd/eval/heatmap.hpp"
#include "htd/eval/report.hpp"
#include "htd/lbc/cases.hpp"
#include "htd/training/checkpoint.hpp"
#include "htd/training/config_io.hpp"
#include "htd/training/presets.hpp"

#ifndef HTD_DEFAULT_LBC_CASES
#define HTD_DEFAULT_LBC_CASES "tools/data/lbc_cases.txt"
#endif

namespace fs = std::filesystem;
using namespace htd;

namespace {

/// Bad arguments discovered after parsing; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_path(const std::string& out) {
  fs::path p(out);
  if (p.is_relative())
    if (const char* root = std::getenv("HTD_OUTPUT_ROOT"); root && *root) return fs::path(root) / p;
  return p;
}

/// Preset, then flags (already written into the configs), then the config file.
struct Settings {
  std::string preset = "compact";
  std::string config_file;

  training::Preset base() const {
    try {
      return training::named_preset(preset);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  void apply_file(policy::PolicyConfig& p, training::TrainConfig& t) const {
    if (!config_file.empty()) training::apply_config(training::read_config_file(config_file), p, t);
  }
};

void add_settings(CLI::App* cmd, Settings& s) {
  cmd->add_option("--preset", s.preset, "base configuration: compact or default")->capture_default_str();
  cmd->add_option("--config", s.config_file, "key = value overrides")->check(CLI::ExistingFile);
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  Settings settings;
  int episodes = 0;
  std::uint64_t seed = 7;
  int episode_length = 0;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  if (a.episodes < 1) throw UsageError("--episodes must be at least 1");
  auto preset = a.settings.base();
  if (a.episode_length > 0) preset.episode_length = a.episode_length;
  a.settings.apply_file(preset.policy, preset.train);
  preset.policy.validate();
  const auto ds =
      data::make_synthetic_dataset(a.episodes, a.seed, training::generator_for(preset.policy, preset.episode_length));
  const auto dir = output_path(a.out);
  data::write_dataset(ds, dir);

  std::map<std::string, int> scenarios;
  long steps = 0, contact = 0;
  for (const auto& ep : ds.episodes) {
    ++scenarios[ep.scenario];
    steps += ep.length;
    for (int t = 0; t < ep.length; ++t) contact += ep.in_contact(t);
  }
  std::printf("dataset %s\n  episodes %d, steps %ld, contact steps %.1f%%\n", dir.c_str(), a.episodes, steps,
              100.0 * contact / static_cast<double>(steps));
  std::printf("  images 4x3x%dx%d, body %d, hand joints %d, tactile 2x%d, action %d\n  scenarios:",
              ds.schema.image_height, ds.schema.image_width, ds.schema.body_dim, ds.schema.hand_joints,
              tactile::kTactilePerHand, ds.actions.total());
  for (const auto& [name, n] : scenarios) std::printf(" %s=%d", name.c_str(), n);
  std::printf("\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Settings settings;
  std::string data, out, variant, targets;
  std::optional<long> steps;
  std::optional<std::uint64_t> seed;
  std::optional<int> batch_size, log_every, checkpoint_every;
  std::optional<double> learning_rate;
};

/// Reads a dataset and adopts its schema into the policy config.
data::Dataset load_dataset(const std::string& dir, policy::PolicyConfig& cfg) {
  auto ds = data::read_dataset(dir);
  cfg.schema = ds.schema;
  cfg.actions.hand_joints = ds.schema.hand_joints;
  ds.actions = cfg.actions;
  return ds;
}

int cmd_train(const TrainArgs& a) {
  auto preset = a.settings.base();
  auto& cfg = preset.policy;
  auto& tc = preset.train;
  try {
    if (!a.variant.empty()) cfg.variant = policy::parse_variant(a.variant);
    if (!a.targets.empty()) tc.targets = training::parse_target_mode(a.targets);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.steps) tc.steps = *a.steps;
  if (a.seed) tc.seed = *a.seed;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.log_every) tc.log_every = *a.log_every;
  if (a.checkpoint_every) tc.checkpoint_every = *a.checkpoint_every;
  if (a.learning_rate) tc.learning_rate = *a.learning_rate;
  a.settings.apply_file(cfg, tc);
  if (!cfg.dreams()) cfg.lambda_force = cfg.lambda_tactile = 0;  // nothing to weigh

  const auto ds = load_dataset(a.data, cfg);
  if (data::valid_samples(ds.episodes, cfg.actions.horizon, cfg.actions.dream_horizon).empty())
    throw std::runtime_error("dataset episodes are too short for h + tau");
  auto st = training::TrainState<float>::create(cfg, tc);

  const auto dir = output_path(a.out);
  fs::create_directories(dir);
  {
    std::ofstream echo(dir / "config.txt");
    echo << "# effective configuration\n" << training::format_config(cfg, tc);
  }
  std::printf("%s", training::format_config(cfg, tc).c_str());
  std::ofstream metrics(dir / "metrics.csv");
  if (!metrics) throw data::IoError("cannot write " + (dir / "metrics.csv").string());
  training::MetricsLog log(metrics);
  log.write_header();

  training::TrainHooks hooks;
  hooks.log = &log;
  hooks.checkpoint = [&](long step) {
    const auto path = step == tc.steps ? dir / "checkpoint" : dir / ("checkpoint_step" + std::to_string(step));
    training::write_checkpoint(st, path, &ds.stats);
  };
  hooks.on_step = [&](long step, const training::StepResult& r) {
    if (step == 1 || step % tc.log_every == 0 || step == tc.steps)
      std::printf("step %ld  %s  grad_norm=%.4g\n", step, r.loss.describe().c_str(), r.grad_norm);
  };
  training::train(st, ds, hooks);
  std::printf("checkpoint written to %s\n", (dir / "checkpoint").c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string data, out;
  std::vector<std::string> checkpoints;
  std::vector<std::string> fingers;
  int stride = 0;
  int episode = -1;
  int cell_pixels = 16;
  bool oracle = false;
};

struct Finger {
  int hand;
  tactile::Region region;
  std::string label;
};

Finger parse_finger(const std::string& s) {
  const auto dot = s.find('.');
  const std::string hand = s.substr(0, dot);
  if (dot == std::string::npos || (hand != "left" && hand != "right"))
    throw UsageError("finger selector '" + s + "' should look like left.index or right.middle");
  try {
    return {hand == "left" ? 0 : 1, tactile::parse_region(s.substr(dot + 1)), s};
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string slot_label(int slot) {
  const int hand = slot / tactile::kRegionsPerHand;
  return std::string(hand == 0 ? "left." : "right.") +
         tactile::region_name(tactile::kEncodeOrder[slot % tactile::kRegionsPerHand]);
}

/// The schema fields shared by dataset and checkpoint manifests.
nlohmann::json schema_echo(const nlohmann::json& j) {
  nlohmann::json out = nlohmann::json::object();
  for (const char* key : {"schema_version", "image", "body_dim", "hand_joints", "tactile_per_hand", "action_dim"})
    if (j.contains(key)) out[key] = j[key];
  return out;
}

fs::path checkpoint_dir(const fs::path& p) {
  if (fs::exists(p / "checkpoint" / "manifest.json")) return p / "checkpoint";
  return p;
}

std::string run_label(const fs::path& given) {
  const auto p = fs::weakly_canonical(given);
  return (p.filename() == "checkpoint" ? p.parent_path().filename() : p.filename()).string();
}

void write_trace(const eval::DreamTrace& tr, const fs::path& dir, const std::vector<Finger>& fingers,
                 int cell_pixels) {
  const int fw = tr.predicted_force.dim(1), slots = tactile::kHands * tactile::kRegionsPerHand;
  const auto stem = "ep" + std::to_string(tr.episode);
  std::ofstream force(dir / (stem + "_force.csv"));
  force << "step,origin";
  for (const char* kind : {"pred", "true"})
    for (int j = 0; j < fw; ++j) force << ',' << kind << (j < fw / 2 ? "_left" : "_right") << j % (fw / 2);
  force << '\n';
  for (int i = 0; i < tr.size(); ++i) {
    force << tr.steps[i] << ',' << tr.origins[i];
    for (const auto* t : {&tr.predicted_force, &tr.true_force})
      for (int j = 0; j < fw; ++j) force << ',' << (*t)[static_cast<std::size_t>(i) * fw + j];
    force << '\n';
  }
  if (!tr.has_latents()) return;
  std::ofstream sim(dir / (stem + "_similarity.csv"));
  sim << "step";
  for (int r = 0; r < slots; ++r) sim << ',' << slot_label(r);
  sim << '\n';
  for (int i = 0; i < tr.size(); ++i) {
    sim << tr.steps[i];
    for (int r = 0; r < slots; ++r) sim << ',' << tr.similarity[r][i];
    sim << '\n';
  }
  const int d = tr.predicted_latents.dim(2);
  const auto grid = eval::HeatmapGrid::for_size(d);
  for (const auto& f : fingers) {
    const int slot = eval::latent_slot(f.hand, f.region);
    const auto fdir = dir / "heatmaps" / f.label;
    fs::create_directories(fdir);
    for (int i = 0; i < tr.size(); ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * slots + slot) * d;
      char name[64];
      std::snprintf(name, sizeof name, "%s_t%04d", stem.c_str(), tr.steps[i]);
      eval::export_latent_heatmap({tr.predicted_latents.data() + off, static_cast<std::size_t>(d)}, grid,
                                  fdir / (std::string(name) + "_dream"), cell_pixels);
      eval::export_latent_heatmap({tr.teacher_latents.data() + off, static_cast<std::size_t>(d)}, grid,
                                  fdir / (std::string(name) + "_teacher"), cell_pixels);
    }
  }
}

int cmd_eval(const EvalArgs& a) {
  std::vector<Finger> fingers;
  for (const auto& s : a.fingers) fingers.push_back(parse_finger(s));
  if (a.stride < 0) throw UsageError("--stride must be positive");
  const auto ours = schema_echo(data::read_manifest(a.data));
  const auto out = output_path(a.out);
  fs::create_directories(out);

  std::vector<eval::RunSummary> runs;
  for (const auto& given : a.checkpoints) {
    const auto dir = checkpoint_dir(given);
    const auto manifest = data::read_manifest(dir);
    const auto theirs = schema_echo(manifest.value("schema", nlohmann::json::object()));
    if (theirs != ours)
      throw data::SchemaError("checkpoint " + dir.string() + " was trained on a different schema than dataset " +
                              a.data + "\n  checkpoint: " + theirs.dump() + "\n  dataset:    " + ours.dump());
    auto loaded = training::read_checkpoint(dir);
    auto& st = loaded.state;
    auto cfg = st.config();
    auto ds = load_dataset(a.data, cfg);
    if (loaded.stats && !(*loaded.stats == ds.stats))
      std::fprintf(stderr, "warning: %s was normalized with different statistics than %s\n", dir.c_str(),
                   a.data.c_str());
    const int stride = a.stride > 0 ? a.stride : cfg.actions.dream_horizon;
    const std::string label = run_label(given) + (a.oracle ? "-oracle" : "");
    const auto run_dir = out / label;
    fs::create_directories(run_dir);

    if (a.oracle || cfg.dreams()) {
      const auto predictor = a.oracle ? eval::oracle_predictor(st) : eval::policy_predictor(st);
      for (int e = 0; e < static_cast<int>(ds.episodes.size()); ++e) {
        if (a.episode >= 0 && e != a.episode) continue;
        write_trace(eval::rollout_dream_trace(predictor, st, ds, e, stride), run_dir, fingers, a.cell_pixels);
      }
    } else if (!fingers.empty()) {
      std::fprintf(stderr, "note: %s does not dream; no heatmaps written\n", label.c_str());
    }
    runs.push_back(eval::summarize_run(label, st, ds, stride, a.oracle));
  }
  const auto report = eval::ablation_report(runs).to_csv();
  std::ofstream(out / "report.csv") << report;
  std::printf("%s", report.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_lbc_check(const std::string& path) {
  std::vector<lbc::Case> cases;
  try {
    cases = lbc::read_cases(path);
  } catch (const lbc::CaseFileError& e) {
    throw UsageError(e.what());
  }
  int failed = 0;
  for (const auto& r : lbc::run_cases(cases)) {
    std::printf("%s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str());
    for (const auto& f : r.failures) std::printf("    %s\n", f.c_str());
    failed += !r.passed;
  }
  std::printf("%zu cases, %d failed\n", cases.size(), failed);
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"htd: touch-dreaming policy training and evaluation"};
  app.require_subcommand(1, 1);

  GenDataArgs gen;
  auto* g = app.add_subcommand("gen-data", "generate a synthetic demonstration dataset");
  g->add_option("--episodes", gen.episodes, "number of episodes")->required();
  g->add_option("--seed", gen.seed, "dataset seed")->capture_default_str();
  g->add_option("--episode-length", gen.episode_length, "steps per episode (preset default when 0)");
  g->add_option("--out", gen.out, "output directory")->required();
  add_settings(g, gen.settings);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a policy variant on a dataset");
  t->add_option("--data", tr.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--out", tr.out, "run directory")->required();
  t->add_option("--variant", tr.variant, "no-touch, no-dream, dream-raw or dream-latent");
  t->add_option("--targets", tr.targets, "tactile latent targets: ema or live");
  t->add_option("--steps", tr.steps, "optimizer steps");
  t->add_option("--seed", tr.seed, "initialization and sampling seed");
  t->add_option("--batch-size", tr.batch_size, "samples per step");
  t->add_option("--lr", tr.learning_rate, "learning rate");
  t->add_option("--log-every", tr.log_every, "metrics interval");
  t->add_option("--checkpoint-every", tr.checkpoint_every, "intermediate checkpoint interval, 0 for none");
  add_settings(t, tr.settings);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "dream traces, heatmaps and the variant comparison");
  e->add_option("--data", ev.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--checkpoint", ev.checkpoints, "run or checkpoint directory (repeatable)")
      ->required()
      ->check(CLI::ExistingDirectory);
  e->add_option("--out", ev.out, "report directory")->required();
  e->add_option("--finger", ev.fingers, "heatmap series for a region, e.g. right.middle (repeatable)");
  e->add_option("--stride", ev.stride, "steps between dreamed chunks (default tau)");
  e->add_option("--episode", ev.episode, "only this episode's traces");
  e->add_option("--cell-pixels", ev.cell_pixels, "raster pixels per latent cell")->check(CLI::PositiveNumber);
  e->add_flag("--oracle", ev.oracle, "replace the policy by the recorded future");

  std::string cases = HTD_DEFAULT_LBC_CASES;
  auto* l = app.add_subcommand("lbc-check", "check controller kernels against a case file");
  l->add_option("--cases", cases, "case file")->check(CLI::ExistingFile)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*g) return cmd_gen_data(gen);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*l) return cmd_lbc_check(cases);
  } catch (const UsageError& err) {
    std::fprintf(stderr, "usage error: %s\n", err.what());
    return 2;
  } catch (const training::ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 2;
}
