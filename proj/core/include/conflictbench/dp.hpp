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

#ifndef CONFLICTBENCH_DP_HPP_
#define CONFLICTBENCH_DP_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "conflictbench/model.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {

struct DpSpec {
  double clip_c = 1.0;
  double noise_sigma = 1.0;      // noise stddev as a multiple of clip_c
  double delta = 1e-6;
  double target_epsilon = 3.0;   // budget the run must stay within
  double sample_rate_q = 0.025;  // Poisson inclusion probability per step
  std::size_t dataset_size = 0;  // records governed by the guarantee
};

// Per-example gradient norms after clipping, recorded when a diagnostics
// sink is passed to dp_train_step.
struct DpStepDiag {
  std::vector<double> clipped_norms;
};

// One DPSGD update: per-example gradients clipped to clip_c in L2, summed,
// Gaussian noise N(0, sigma^2 c^2) added per coordinate, and the noisy sum
// divided by the expected batch size q * dataset_size before the SGD step.
// The batch may be empty (noise-only step). Draws come only from `rng`, so
// a fixed generator state reproduces the update bit for bit.
void dp_train_step(Model& model, const Tensor& batch,
                   const std::vector<int>& labels, const DpSpec& spec,
                   double lr, Rng& rng, DpStepDiag* diag = nullptr);

// Convenience overload seeding a fresh generator.
void dp_train_step(Model& model, const Tensor& batch,
                   const std::vector<int>& labels, const DpSpec& spec,
                   double lr, std::uint64_t seed);

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t steps = 0;
  int best_order = 0;  // order attaining the minimum in the conversion
  // (order, accumulated Renyi divergence at that order), all orders kept.
  std::vector<std::pair<int, double>> trace;
};

// Renyi divergence of one subsampled Gaussian step at integer order alpha.
double rdp_subsampled_gaussian(double q, double sigma, int alpha);

// Composition over `steps` identical steps, then conversion to (epsilon,
// delta). Orders 2..64 are tracked; epsilon is the minimum over orders of
// steps * rdp(alpha) + log(1/delta) / (alpha - 1).
PrivacyBudget account_privacy(const DpSpec& spec, std::size_t steps);

// Smallest sigma in [0.3, 100] whose accounted epsilon stays at or below
// spec.target_epsilon after `steps` steps, found by bisection to 1e-3.
// steps == 0 makes every sigma valid; the grid lower bound is returned.
// Throws ConfigError when even sigma = 100 cannot meet the target.
double calibrate_sigma(const DpSpec& spec, std::size_t steps);

std::string budget_to_json(const PrivacyBudget& budget);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_DP_HPP_
