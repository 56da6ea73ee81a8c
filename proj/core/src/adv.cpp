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

#include "conflictbench/adv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conflictbench/errors.hpp"
#include "conflictbench/parallel.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {

double pgd_step_size(const AdvSpec& spec) {
  if (spec.step_size > 0.0) return spec.step_size;
  if (spec.steps == 0) return 0.0;
  return 2.5 * spec.gamma / static_cast<double>(spec.steps);
}

Tensor pgd_attack(const Model& model, const Tensor& batch,
                  const std::vector<int>& labels, const AdvSpec& spec,
                  std::uint64_t seed) {
  if (spec.gamma < 0.0) throw ConfigError("attack radius must be non-negative");
  if (spec.gamma == 0.0) return batch;
  Tensor adv = batch;
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> start(-spec.gamma, spec.gamma);
  for (std::size_t i = 0; i < adv.size(); ++i) {
    adv.data[i] = std::clamp(adv.data[i] + start(rng), 0.0, 1.0);
  }
  double step = pgd_step_size(spec);
  for (std::size_t it = 0; it < spec.steps; ++it) {
    Tensor input_grad;
    loss_grad(model, adv, labels, &input_grad);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      double g = input_grad.data[i];
      double moved = adv.data[i] + step * (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
      double lo = std::max(batch.data[i] - spec.gamma, 0.0);
      double hi = std::min(batch.data[i] + spec.gamma, 1.0);
      adv.data[i] = std::clamp(moved, lo, hi);
    }
  }
  return adv;
}

double adv_pass(Model& model, const LabeledSet& data, const TrainPlan& plan,
                const AdvSpec& spec, std::uint64_t pass_seed,
                std::size_t* global_step, std::size_t total_steps) {
  validate_set(data);
  std::size_t per_pass = steps_per_epoch(data.size(), plan.batch_size);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = make_rng(mix_seed(pass_seed, "shuffle"));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  double loss_sum = 0.0;
  for (std::size_t b = 0; b < per_pass; ++b) {
    std::size_t lo = b * plan.batch_size;
    std::size_t hi = std::min(lo + plan.batch_size, data.size());
    std::vector<std::size_t> idx(order.begin() + lo, order.begin() + hi);
    std::vector<int> labels;
    Tensor batch = gather_batch(data, idx, &labels);
    Tensor adv = pgd_attack(model, batch, labels, spec,
                            mix_seed(pass_seed, mix_seed(b, "pgd")));
    loss_sum += mean_loss(model, adv, labels);
    GradStore g = loss_grad(model, adv, labels);
    double lr = schedule_lr(plan, *global_step, total_steps);
    *global_step += 1;
    apply_grads(model, g, lr);
  }
  return loss_sum / static_cast<double>(per_pass);
}

double adv_train_epoch(Model& model, const LabeledSet& data,
                       const TrainPlan& plan, const AdvSpec& spec,
                       std::size_t epoch_index) {
  std::size_t per_epoch = steps_per_epoch(data.size(), plan.batch_size);
  std::size_t step = epoch_index * per_epoch;
  return adv_pass(model, data, plan, spec,
                  mix_seed(plan.seed, mix_seed(epoch_index, "adv-epoch")), &step,
                  plan.epochs * per_epoch);
}

double eval_robust_accuracy(const Model& model, const LabeledSet& data,
                            const AdvSpec& spec, std::uint64_t seed) {
  validate_set(data);
  if (data.size() == 0) throw InputError("cannot evaluate on an empty dataset");
  std::vector<int> correct(data.size(), 0);
  parallel_for(data.size(), [&](std::size_t i) {
    Tensor x = data.example(i);
    std::vector<int> y{data.labels[i]};
    Tensor adv = pgd_attack(model, x, y, spec, mix_seed(seed, i));
    Tensor logits = forward_logits(model, adv);
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j) {
      if (logits.data[j] > logits.data[best]) best = j;
    }
    correct[i] = static_cast<int>(best) == data.labels[i] ? 1 : 0;
  });
  std::size_t hits = 0;
  for (int c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace conflictbench
