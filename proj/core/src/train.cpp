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

#include "conflictbench/train.hpp"

#include <algorithm>
#include <numeric>

#include "conflictbench/errors.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {

double one_cycle_lr(double lr_initial, double lr_max, std::size_t step,
                    std::size_t total_steps) {
  if (total_steps <= 1) return lr_max;
  std::size_t half = total_steps / 2;
  double s = static_cast<double>(step);
  if (step < half) {
    return lr_initial + (lr_max - lr_initial) * s / static_cast<double>(half);
  }
  double tail = static_cast<double>(total_steps - half);
  double frac = (s - static_cast<double>(half)) / tail;
  return lr_max + (lr_initial / 10.0 - lr_max) * frac;
}

double schedule_lr(const TrainPlan& plan, std::size_t step,
                   std::size_t total_steps) {
  switch (plan.schedule) {
    case ScheduleKind::kOneCycle:
      return one_cycle_lr(plan.lr_initial, plan.lr_max, step, total_steps);
    case ScheduleKind::kConstant:
      return plan.lr_max;
  }
  return plan.lr_max;
}

std::size_t steps_per_epoch(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  return (n + batch_size - 1) / batch_size;
}

double sgd_pass(Model& model, const LabeledSet& data, const TrainPlan& plan,
                std::uint64_t shuffle_seed, std::size_t* global_step,
                std::size_t total_steps) {
  validate_set(data);
  if (data.size() == 0) throw InputError("cannot train on an empty dataset");
  std::size_t per_pass = steps_per_epoch(data.size(), plan.batch_size);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(shuffle_seed);
  std::shuffle(order.begin(), order.end(), rng);

  double loss_sum = 0.0;
  for (std::size_t b = 0; b < per_pass; ++b) {
    std::size_t lo = b * plan.batch_size;
    std::size_t hi = std::min(lo + plan.batch_size, data.size());
    std::vector<std::size_t> idx(order.begin() + lo, order.begin() + hi);
    std::vector<int> labels;
    Tensor batch = gather_batch(data, idx, &labels);
    loss_sum += mean_loss(model, batch, labels);
    GradStore g = loss_grad(model, batch, labels);
    double lr = schedule_lr(plan, *global_step, total_steps);
    *global_step += 1;
    apply_grads(model, g, lr);
  }
  return loss_sum / static_cast<double>(per_pass);
}

double train_epoch(Model& model, const LabeledSet& data, const TrainPlan& plan,
                   std::size_t epoch_index) {
  std::size_t per_epoch = steps_per_epoch(data.size(), plan.batch_size);
  std::size_t step = epoch_index * per_epoch;
  return sgd_pass(model, data, plan,
                  mix_seed(plan.seed, mix_seed(epoch_index, "epoch-shuffle")),
                  &step, plan.epochs * per_epoch);
}

Model train_model(const Model& topology, const LabeledSet& data,
                  const TrainPlan& plan) {
  Model model = topology;
  init_params(model, mix_seed(plan.seed, "init"));
  for (std::size_t e = 0; e < plan.epochs; ++e) {
    train_epoch(model, data, plan, e);
  }
  return model;
}

double eval_accuracy(const Model& model, const LabeledSet& data) {
  validate_set(data);
  if (data.size() == 0) throw InputError("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  // Batched in fixed-size slices to bound memory on larger sets.
  const std::size_t slice = 256;
  for (std::size_t at = 0; at < data.size(); at += slice) {
    std::size_t hi = std::min(at + slice, data.size());
    std::vector<std::size_t> idx(hi - at);
    std::iota(idx.begin(), idx.end(), at);
    std::vector<int> labels;
    Tensor batch = gather_batch(data, idx, &labels);
    Tensor logits = forward_logits(model, batch);
    std::size_t c = logits.shape[1];
    for (std::size_t n = 0; n < labels.size(); ++n) {
      const double* row = logits.data.data() + n * c;
      std::size_t best = 0;
      for (std::size_t j = 1; j < c; ++j) {
        if (row[j] > row[best]) best = j;
      }
      if (static_cast<int>(best) == labels[n]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace conflictbench
