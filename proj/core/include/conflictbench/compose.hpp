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

#ifndef CONFLICTBENCH_COMPOSE_HPP_
#define CONFLICTBENCH_COMPOSE_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "conflictbench/adv.hpp"
#include "conflictbench/conflict.hpp"
#include "conflictbench/data.hpp"
#include "conflictbench/dp.hpp"
#include "conflictbench/fingerprint.hpp"
#include "conflictbench/model.hpp"
#include "conflictbench/radioactive.hpp"
#include "conflictbench/train.hpp"
#include "conflictbench/watermark.hpp"

namespace conflictbench {

// Training-time regularizing mechanism.
enum class BaseMech { kNone, kDpsgd, kAdvtr };
// Ownership mechanism.
enum class OwnMech { kNone, kWm, kRad, kDi };

// Joint: the base mechanism's update rule governs every record, ownership
// artifacts included. Relaxed: ownership records (triggers, marked rows)
// are carved out and trained with plain SGD while the rest keeps the base
// rule. Fingerprinting alters no records, so it has no relaxed form.
enum class ComposeMode { kJoint, kRelaxed };

std::string base_mech_name(BaseMech m);
std::string own_mech_name(OwnMech m);

struct ComposeSpec {
  BaseMech base = BaseMech::kNone;
  OwnMech own = OwnMech::kNone;
  ComposeMode mode = ComposeMode::kJoint;
  std::string topology = "cnn8x16h32";
  TrainPlan plan;
  DpSpec dp;
  AdvSpec adv;
  WmSpec wm;
  RadSpec rad;
  DiSpec di;
};

struct TaskData {
  LabeledSet train;
  LabeledSet test;
  LabeledSet trigger_pool;  // out-of-distribution records for triggers
};

struct RunMetrics {
  std::map<Metric, double> values;
  PrivacyBudget budget;  // populated when private training ran
  bool has_budget = false;
};

struct ComposeResult {
  Model model;
  RunMetrics metrics;
};

// Trains one victim under the configured mechanism combination and
// measures every metric the active mechanisms define (test accuracy
// always; trigger accuracy, robust accuracy, mark score, fingerprint
// p-value, and spent epsilon when their mechanism is in play).
// Deterministic in (spec, task, seed).
ComposeResult compose_training(const ComposeSpec& spec, const TaskData& task,
                               std::uint64_t seed);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_COMPOSE_HPP_
