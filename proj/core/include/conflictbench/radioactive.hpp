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

#ifndef CONFLICTBENCH_RADIOACTIVE_HPP_
#define CONFLICTBENCH_RADIOACTIVE_HPP_

#include <cstdint>

#include "conflictbench/data.hpp"
#include "conflictbench/model.hpp"

namespace conflictbench {

struct RadSpec {
  double mark_fraction = 0.10;   // share of training records that get marked
  double perturb_budget = 0.06;  // L-inf radius of the mark
  std::size_t craft_steps = 25;
  double craft_rate = 0.0;       // 0 means 2.5 * budget / craft_steps
  std::uint64_t carrier_seed = 7;
};

// Clean/marked input pairs plus the class carriers they were aligned to.
struct MarkedPairs {
  Tensor clean;    // {K} + example_shape
  Tensor marked;   // same layout
  std::vector<int> labels;
  std::vector<Tensor> carriers;  // one unit vector per class, feature space
};

// Draws one unit-Gaussian carrier per class in the marking model's
// penultimate feature space, picks round(mark_fraction * N) records, and
// crafts each mark by projected gradient ascent on the cosine between the
// feature displacement and the carrier of the record's class. Returns the
// pairs and the training set with the marked rows substituted.
struct CraftResult {
  MarkedPairs pairs;
  LabeledSet marked_train;
  std::vector<std::size_t> marked_rows;  // indices into the original set
};

CraftResult craft_marks(const LabeledSet& train, const Model& marking_model,
                        const RadSpec& spec);

// Signed mean loss gap E[L(F(x), y) - L(F(x_marked), y)] over the pairs.
// Training on marked data drives it positive; clean models sit near zero.
double eval_rad_score(const Model& model, const MarkedPairs& pairs);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_RADIOACTIVE_HPP_
