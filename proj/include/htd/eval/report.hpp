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

// Per-run evaluation summaries and the variant comparison table.

#ifndef HTD_EVAL_REPORT_HPP_
#define HTD_EVAL_REPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "htd/eval/dream_trace.hpp"
#include "htd/eval/metrics.hpp"
#include "htd/training/trainer.hpp"

namespace htd::eval {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct RunSummary {
  std::string label;
  policy::Variant variant = policy::Variant::kDreamLatent;
  training::TargetMode targets = training::TargetMode::kEmaTeacher;
  long steps = 0;
  training::LossBreakdown loss;  // mean over the evaluation samples
  double force_mae = kMissing;   // raw units, mean over hands
  double similarity_mean = kMissing;
  double similarity_min = kMissing;
  double collapse_ratio = kMissing;
};

/// Mean loss over up to max_samples valid samples spread evenly across the dataset.
inline training::LossBreakdown mean_loss(const training::TrainState<float>& st, const data::Dataset& ds,
                                         int max_samples = 64) {
  const auto all = data::valid_samples(ds.episodes, ds.actions.horizon, ds.actions.dream_horizon);
  if (all.empty()) throw std::invalid_argument("dataset has no valid samples");
  const std::size_t n = std::min<std::size_t>(all.size(), static_cast<std::size_t>(max_samples));
  std::vector<data::SampleRef> refs;
  for (std::size_t i = 0; i < n; ++i) refs.push_back(all[i * all.size() / n]);
  training::LossBreakdown acc;
  const std::size_t chunk = 16;
  for (std::size_t i = 0; i < refs.size(); i += chunk) {
    const std::vector<data::SampleRef> part(refs.begin() + i, refs.begin() + std::min(refs.size(), i + chunk));
    const auto b = training::evaluate_loss(st, data::make_batch<float>(ds, part));
    const double w = static_cast<double>(part.size()) / static_cast<double>(refs.size());
    for (int m = 0; m < data::kActionModalities; ++m) acc.bc[m] += w * b.bc[m];
    acc.force += w * b.force;
    acc.tactile += w * b.tactile;
    acc.tactile_direction += w * b.tactile_direction;
    acc.tactile_magnitude += w * b.tactile_magnitude;
    acc.total += w * b.total;
    acc.lambda_force = b.lambda_force;
    acc.lambda_tactile = b.lambda_tactile;
  }
  return acc;
}

/// Evaluates one trained run. With oracle set, the dream columns come from
/// the recorded future instead of the policy.
inline RunSummary summarize_run(std::string label, const training::TrainState<float>& st, const data::Dataset& ds,
                                int stride, bool oracle = false) {
  RunSummary r;
  r.label = std::move(label);
  r.variant = st.config().variant;
  r.targets = st.train.targets;
  r.steps = st.step;
  r.loss = mean_loss(st, ds);
  r.collapse_ratio = collapse_stats(st, ds).ratio;
  if (!oracle && !st.config().dreams()) return r;
  const auto predictor = oracle ? oracle_predictor(st) : policy_predictor(st);
  double mae = 0, sim = 0, sim_min = 1;
  std::size_t rows = 0, sims = 0;
  for (int e = 0; e < static_cast<int>(ds.episodes.size()); ++e) {
    if (ds.episodes[e].length <= ds.actions.dream_horizon) continue;
    const auto tr = rollout_dream_trace(predictor, st, ds, e, stride);
    mae += 0.5 * (tr.mae[0] + tr.mae[1]) * tr.size();
    rows += tr.size();
    for (const auto& series : tr.similarity)
      for (double s : series) {
        sim += s;
        sim_min = std::min(sim_min, s);
        ++sims;
      }
  }
  if (rows) r.force_mae = mae / static_cast<double>(rows);
  if (sims) {
    r.similarity_mean = sim / static_cast<double>(sims);
    r.similarity_min = sim_min;
  }
  return r;
}

struct AblationReport {
  std::vector<RunSummary> rows;         // in variant order, then input order
  std::vector<policy::Variant> missing;  // variants without any run

  std::string to_csv() const {
    std::ostringstream os;
    os << "variant,label,targets,steps,total,bc,force,tactile,force_mae,similarity_mean,similarity_min,"
          "collapse_ratio\n";
    auto num = [&](double v) {
      if (std::isnan(v)) return std::string("-");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", v);
      return std::string(buf);
    };
    for (const auto& r : rows)
      os << policy::variant_name(r.variant) << "," << r.label << "," << training::target_mode_name(r.targets) << ","
         << r.steps << "," << num(r.loss.total) << "," << num(r.loss.bc_sum()) << "," << num(r.loss.force) << ","
         << num(r.loss.tactile) << "," << num(r.force_mae) << "," << num(r.similarity_mean) << ","
         << num(r.similarity_min) << "," << num(r.collapse_ratio) << "\n";
    for (auto v : missing) os << "# missing variant: " << policy::variant_name(v) << "\n";
    return os.str();
  }
};

inline AblationReport ablation_report(std::vector<RunSummary> runs) {
  AblationReport rep;
  std::stable_sort(runs.begin(), runs.end(),
                   [](const RunSummary& a, const RunSummary& b) { return a.variant < b.variant; });
  for (auto v : policy::kAllVariants)
    if (std::none_of(runs.begin(), runs.end(), [v](const RunSummary& r) { return r.variant == v; }))
      rep.missing.push_back(v);
  rep.rows = std::move(runs);
  return rep;
}

}  // namespace htd::eval

#endif  // HTD_EVAL_REPORT_HPP_
