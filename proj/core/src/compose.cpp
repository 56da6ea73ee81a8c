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

#include "conflictbench/compose.hpp"

#include <algorithm>
#include <numeric>

#include "conflictbench/errors.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {

std::string base_mech_name(BaseMech m) {
  switch (m) {
    case BaseMech::kNone: return "none";
    case BaseMech::kDpsgd: return "dpsgd";
    case BaseMech::kAdvtr: return "advtr";
  }
  return "unknown";
}

std::string own_mech_name(OwnMech m) {
  switch (m) {
    case OwnMech::kNone: return "none";
    case OwnMech::kWm: return "wm";
    case OwnMech::kRad: return "rad";
    case OwnMech::kDi: return "di";
  }
  return "unknown";
}

namespace {

enum class Rule { kPlain, kAdv, kDp };

// One scheduled pass over one partition with one update rule.
struct Phase {
  Rule rule = Rule::kPlain;
  const LabeledSet* data = nullptr;
};

std::size_t phase_steps(const Phase& p, std::size_t batch_size) {
  return steps_per_epoch(p.data->size(), batch_size);
}

// Poisson-subsampled private pass: per step every record enters the batch
// independently with probability q, and the noisy clipped-sum update is
// normalized by the expected batch size q * |data|.
void dp_pass(Model& model, const LabeledSet& data, const TrainPlan& plan,
             const DpSpec& dp, std::uint64_t pass_seed, std::size_t* global_step,
             std::size_t total_steps, Rng& noise_rng) {
  std::size_t steps = steps_per_epoch(data.size(), plan.batch_size);
  for (std::size_t s = 0; s < steps; ++s) {
    Rng pick = make_rng(mix_seed(pass_seed, mix_seed(s, "poisson")));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (u01(pick) < dp.sample_rate_q) idx.push_back(i);
    }
    std::vector<int> labels;
    Tensor batch = gather_batch(data, idx, &labels);
    double lr = schedule_lr(plan, *global_step, total_steps);
    *global_step += 1;
    dp_train_step(model, batch, labels, dp, lr, noise_rng);
  }
}

}  // namespace

ComposeResult compose_training(const ComposeSpec& spec, const TaskData& task,
                               std::uint64_t seed) {
  validate_set(task.train);
  validate_set(task.test);
  if (spec.own == OwnMech::kDi && spec.mode == ComposeMode::kRelaxed) {
    throw ConfigError("fingerprinting alters no training records; it has no relaxed form");
  }
  Model topology =
      make_topology(spec.topology, task.train.example_shape(), task.train.num_classes);
  TrainPlan plan = spec.plan;
  plan.seed = mix_seed(seed, "victim");

  // Ownership artifacts built before training.
  LabeledSet triggers;
  CraftResult craft;
  if (spec.own == OwnMech::kWm) {
    if (task.trigger_pool.size() == 0) {
      throw ConfigError("watermarking needs an out-of-distribution trigger pool");
    }
    triggers = build_trigger_set(task.trigger_pool, spec.wm.trigger_size,
                                 mix_seed(seed, "trigger"));
  }
  if (spec.own == OwnMech::kRad) {
    TrainPlan marking_plan = spec.plan;
    marking_plan.seed = mix_seed(seed, "marking");
    Model marking_model = train_model(topology, task.train, marking_plan);
    RadSpec rad = spec.rad;
    rad.carrier_seed = mix_seed(seed, "carrier");
    craft = craft_marks(task.train, marking_model, rad);
  }

  // Partitions and the update rule each one trains under.
  LabeledSet union_set, trig_part, governed, exempt;
  std::vector<Phase> phases;
  Rule base_rule = spec.base == BaseMech::kDpsgd
                       ? Rule::kDp
                       : (spec.base == BaseMech::kAdvtr ? Rule::kAdv : Rule::kPlain);
  const LabeledSet& full_train =
      spec.own == OwnMech::kRad ? craft.marked_train : task.train;

  if (spec.own == OwnMech::kWm) {
    bool separate_passes =
        spec.mode == ComposeMode::kRelaxed ||
        (spec.base == BaseMech::kNone && spec.wm.mode == WmMode::kSeparate);
    if (separate_passes) {
      trig_part = repeat_to_min_size(triggers, plan.batch_size);
      phases.push_back({base_rule, &task.train});
      phases.push_back({Rule::kPlain, &trig_part});
    } else {
      union_set = concat(task.train, triggers);
      phases.push_back({base_rule, &union_set});
    }
  } else if (spec.own == OwnMech::kRad && spec.mode == ComposeMode::kRelaxed &&
             spec.base != BaseMech::kNone) {
    // Marked rows are exempt from the base rule and trained plainly.
    std::vector<std::size_t> all(full_train.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> clean_rows;
    std::set_difference(all.begin(), all.end(), craft.marked_rows.begin(),
                        craft.marked_rows.end(), std::back_inserter(clean_rows));
    governed = full_train.subset(clean_rows);
    exempt = repeat_to_min_size(full_train.subset(craft.marked_rows),
                                plan.batch_size);
    phases.push_back({base_rule, &governed});
    phases.push_back({Rule::kPlain, &exempt});
  } else {
    phases.push_back({base_rule, &full_train});
  }

  // Resolve the private-noise scale against the planned step count.
  DpSpec dp = spec.dp;
  std::size_t dp_steps_per_epoch = 0;
  bool uses_dp = false;
  for (const Phase& p : phases) {
    if (p.rule == Rule::kDp) {
      uses_dp = true;
      dp.dataset_size = p.data->size();
      dp.sample_rate_q =
          static_cast<double>(plan.batch_size) / static_cast<double>(p.data->size());
      if (dp.sample_rate_q > 1.0) dp.sample_rate_q = 1.0;
      dp_steps_per_epoch += phase_steps(p, plan.batch_size);
    }
  }
  std::size_t dp_steps_total = plan.epochs * dp_steps_per_epoch;
  if (uses_dp && spec.dp.noise_sigma <= 0.0) {
    DpSpec probe = dp;
    probe.noise_sigma = 1.0;
    dp.noise_sigma = calibrate_sigma(probe, dp_steps_total);
  }

  std::size_t per_epoch = 0;
  for (const Phase& p : phases) per_epoch += phase_steps(p, plan.batch_size);
  std::size_t total_steps = plan.epochs * per_epoch;

  Model model = topology;
  init_params(model, mix_seed(plan.seed, "init"));
  Rng noise_rng = make_rng(mix_seed(plan.seed, "dp-noise"));
  std::size_t gstep = 0;
  for (std::size_t e = 0; e < plan.epochs; ++e) {
    for (std::size_t ph = 0; ph < phases.size(); ++ph) {
      const Phase& p = phases[ph];
      std::uint64_t pass_seed =
          mix_seed(plan.seed, mix_seed(e * phases.size() + ph, "pass"));
      switch (p.rule) {
        case Rule::kPlain:
          sgd_pass(model, *p.data, plan, pass_seed, &gstep, total_steps);
          break;
        case Rule::kAdv:
          adv_pass(model, *p.data, plan, spec.adv, pass_seed, &gstep, total_steps);
          break;
        case Rule::kDp:
          dp_pass(model, *p.data, plan, dp, pass_seed, &gstep, total_steps,
                  noise_rng);
          break;
      }
    }
  }

  // Measurement phase.
  ComposeResult result;
  result.metrics.values[Metric::kAcc] = eval_accuracy(model, task.test);
  if (spec.own == OwnMech::kWm) {
    result.metrics.values[Metric::kWm] = eval_wm_accuracy(model, triggers);
  }
  if (spec.base == BaseMech::kAdvtr) {
    result.metrics.values[Metric::kAdv] =
        eval_robust_accuracy(model, task.test, spec.adv, mix_seed(seed, "adv-eval"));
  }
  if (spec.own == OwnMech::kRad) {
    result.metrics.values[Metric::kRad] = eval_rad_score(model, craft.pairs);
  }
  if (spec.own == OwnMech::kDi) {
    result.metrics.values[Metric::kDi] =
        verify_dataset_use(model, task.train, task.test, spec.di, mix_seed(seed, "di"));
  }
  if (uses_dp) {
    result.metrics.budget = account_privacy(dp, dp_steps_total);
    result.metrics.has_budget = true;
    result.metrics.values[Metric::kEpsilon] = result.metrics.budget.epsilon;
  }
  result.model = std::move(model);
  return result;
}

}  // namespace conflictbench
