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

#ifndef CONFLICTBENCH_TRAIN_HPP_
#define CONFLICTBENCH_TRAIN_HPP_

#include <cstdint>
#include <vector>

#include "conflictbench/data.hpp"
#include "conflictbench/model.hpp"

namespace conflictbench {

enum class ScheduleKind { kOneCycle, kConstant };

struct TrainPlan {
  std::size_t epochs = 25;
  std::size_t batch_size = 50;
  double lr_initial = 0.001;
  double lr_max = 0.02;
  ScheduleKind schedule = ScheduleKind::kOneCycle;
  std::uint64_t seed = 0;
};

// One-cycle rate: linear ramp lr_initial -> lr_max over the first half of
// the run, then linear decay to lr_initial / 10. `step` counts from 0.
double one_cycle_lr(double lr_initial, double lr_max, std::size_t step,
                    std::size_t total_steps);

double schedule_lr(const TrainPlan& plan, std::size_t step,
                   std::size_t total_steps);

std::size_t steps_per_epoch(std::size_t n, std::size_t batch_size);

// One shuffled plain-SGD pass over `data`. Batches are cut from a
// permutation drawn with `shuffle_seed`; the learning rate follows the
// plan's schedule at *global_step of total_steps, and *global_step advances
// by one per batch. Returns the mean minibatch loss of the pass.
double sgd_pass(Model& model, const LabeledSet& data, const TrainPlan& plan,
                std::uint64_t shuffle_seed, std::size_t* global_step,
                std::size_t total_steps);

// Shuffled minibatch SGD over one epoch. `epoch_index` positions the epoch
// inside the plan's schedule and seeds the shuffle; the same (plan, data,
// epoch_index) always produces the same parameters. Returns the mean
// minibatch loss.
double train_epoch(Model& model, const LabeledSet& data, const TrainPlan& plan,
                   std::size_t epoch_index);

// init_params + plan.epochs training epochs.
Model train_model(const Model& topology, const LabeledSet& data,
                  const TrainPlan& plan);

double eval_accuracy(const Model& model, const LabeledSet& data);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_TRAIN_HPP_
