// Copyright 2026 The ConflictBench Authors
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

#include "conflictbench/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conflictbench/errors.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {

Model embed_watermark_train(const Model& topology, const LabeledSet& train,
                            const LabeledSet& triggers, const TrainPlan& plan,
                            WmMode mode) {
  validate_set(train);
  validate_set(triggers);
  if (train.example_shape() != triggers.example_shape() ||
      train.num_classes != triggers.num_classes) {
    throw ConfigError("trigger set does not match the training data layout");
  }
  Model model = topology;
  init_params(model, mix_seed(plan.seed, "init"));
  if (mode == WmMode::kJoint) {
    LabeledSet joint = concat(train, triggers);
    for (std::size_t e = 0; e < plan.epochs; ++e) {
      train_epoch(model, joint, plan, e);
    }
    return model;
  }
  // The triggers repeat until they fill at least one batch, so separate
  // mode always takes a full-width gradient step on them.
  LabeledSet trig_part = repeat_to_min_size(triggers, plan.batch_size);
  std::size_t per_train = steps_per_epoch(train.size(), plan.batch_size);
  std::size_t per_trig = steps_per_epoch(trig_part.size(), plan.batch_size);
  std::size_t total = plan.epochs * (per_train + per_trig);
  std::size_t step = 0;
  for (std::size_t e = 0; e < plan.epochs; ++e) {
    sgd_pass(model, train, plan, mix_seed(plan.seed, mix_seed(e, "wm-train")),
             &step, total);
    sgd_pass(model, trig_part, plan, mix_seed(plan.seed, mix_seed(e, "wm-trig")),
             &step, total);
  }
  return model;
}

double eval_wm_accuracy(const Model& model, const LabeledSet& triggers) {
  return eval_accuracy(model, triggers);
}

double log_wm_confidence(std::size_t n, double e, std::size_t m) {
  if (n == 0) throw InputError("confidence needs at least one trigger");
  if (m < 2) throw InputError("confidence needs at least two classes");
  if (e < 0.0 || e > 1.0) throw InputError("error rate must lie in [0, 1]");
  // Nudge floor(e * n) past representation error so decimal rates like 0.3
  // cut at the mathematically intended count.
  std::size_t k = static_cast<std::size_t>(
      std::floor(e * static_cast<double>(n) + 1e-9));
  if (k > n) k = n;
  double md = static_cast<double>(m);
  double log_wrong = std::log(md - 1.0) - std::log(md);  // per-trigger error
  double log_right = -std::log(md);
  // logsumexp over i = 0..k of C(n, i) wrong^i right^(n - i).
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    double lt = std::lgamma(static_cast<double>(n) + 1.0) -
                std::lgamma(static_cast<double>(i) + 1.0) -
                std::lgamma(static_cast<double>(n - i) + 1.0) +
                static_cast<double>(i) * log_wrong +
                static_cast<double>(n - i) * log_right;
    terms[i] = lt;
    best = std::max(best, lt);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return best + std::log(s);
}

}  // namespace conflictbench
