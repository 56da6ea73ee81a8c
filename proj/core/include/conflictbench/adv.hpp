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

#ifndef CONFLICTBENCH_ADV_HPP_
#define CONFLICTBENCH_ADV_HPP_

#include <cstdint>

#include "conflictbench/data.hpp"
#include "conflictbench/model.hpp"
#include "conflictbench/train.hpp"

namespace conflictbench {

struct AdvSpec {
  double gamma = 0.25;      // L-inf radius
  std::size_t steps = 10;
  double step_size = 0.0;   // 0 means the 2.5 * gamma / steps default
};

double pgd_step_size(const AdvSpec& spec);

// Projected gradient ascent on the cross-entropy inside the L-inf ball of
// radius gamma around each input, intersected with [0, 1]. Starts from a
// uniform random point in the ball; ascends by sign steps. gamma == 0
// returns the batch unchanged. Deterministic in (model, batch, seed).
Tensor pgd_attack(const Model& model, const Tensor& batch,
                  const std::vector<int>& labels, const AdvSpec& spec,
                  std::uint64_t seed);

// One shuffled pass where every batch is replaced by its PGD counterpart
// before the update; the counter/schedule contract matches sgd_pass.
// Returns the mean adversarial batch loss of the pass.
double adv_pass(Model& model, const LabeledSet& data, const TrainPlan& plan,
                const AdvSpec& spec, std::uint64_t pass_seed,
                std::size_t* global_step, std::size_t total_steps);

// One epoch of minibatch SGD where every batch is replaced by its PGD
// counterpart before the update. Returns the mean adversarial batch loss.
double adv_train_epoch(Model& model, const LabeledSet& data,
                       const TrainPlan& plan, const AdvSpec& spec,
                       std::size_t epoch_index);

// Accuracy on PGD-perturbed inputs; the attack is seeded per example so
// the measurement is reproducible.
double eval_robust_accuracy(const Model& model, const LabeledSet& data,
                            const AdvSpec& spec, std::uint64_t seed);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_ADV_HPP_
