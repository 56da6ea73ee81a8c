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

#ifndef CONFLICTBENCH_WATERMARK_HPP_
#define CONFLICTBENCH_WATERMARK_HPP_

#include <cstdint>

#include "conflictbench/data.hpp"
#include "conflictbench/model.hpp"
#include "conflictbench/train.hpp"

namespace conflictbench {

enum class WmMode { kJoint, kSeparate };

struct WmSpec {
  std::size_t trigger_size = 100;
  WmMode mode = WmMode::kJoint;
};

// Trains the model on training data plus the trigger set. Joint mode
// shuffles a union of both; separate mode alternates plain-SGD passes over
// the training partition and the trigger partition within each epoch (the
// triggers are repeated so they fill at least one batch).
Model embed_watermark_train(const Model& topology, const LabeledSet& train,
                            const LabeledSet& triggers, const TrainPlan& plan,
                            WmMode mode);

// Trigger-set accuracy; this is the retention statistic the ownership
// claim is built on.
double eval_wm_accuracy(const Model& model, const LabeledSet& triggers);

// log of the probability that a model with per-trigger error rate
// (m - 1) / m makes at most floor(e * n) errors on n triggers:
//   V = sum_{i=0}^{floor(e n)} C(n, i) ((m-1)/m)^i (1/m)^(n-i)
// evaluated in log space. `e` is the observed error rate 1 - wm_accuracy,
// m the number of classes. Smaller V = stronger ownership evidence.
double log_wm_confidence(std::size_t n, double e, std::size_t m);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_WATERMARK_HPP_
