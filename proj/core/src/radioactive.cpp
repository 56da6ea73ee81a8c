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

#include "conflictbench/radioactive.hpp"

#include <algorithm>
#include <cmath>

#include "conflictbench/errors.hpp"
#include "conflictbench/parallel.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {
namespace {

double craft_step_size(const RadSpec& spec) {
  if (spec.craft_rate > 0.0) return spec.craft_rate;
  return 2.5 * spec.perturb_budget / static_cast<double>(spec.craft_steps);
}

// d cos(v, u) / d v for a unit carrier u. Near v = 0 the cosine is
// undefined; fall back to the linear objective v . u whose gradient is u.
Tensor cosine_grad(const Tensor& v, const Tensor& u) {
  double norm = l2_norm(v);
  if (norm < 1e-12) return u;
  double vu = dot(v, u);
  Tensor g = u;
  g.scale(1.0 / norm);
  g.axpy(-vu / (norm * norm * norm), v);
  return g;
}

}  // namespace

CraftResult craft_marks(const LabeledSet& train, const Model& marking_model,
                        const RadSpec& spec) {
  validate_set(train);
  if (!(spec.mark_fraction > 0.0 && spec.mark_fraction <= 1.0)) {
    throw ConfigError("mark fraction must lie in (0, 1]");
  }
  if (!(spec.perturb_budget > 0.0)) throw ConfigError("mark budget must be positive");
  if (spec.craft_steps == 0) throw ConfigError("mark crafting needs at least one step");
  std::size_t k = static_cast<std::size_t>(
      std::llround(spec.mark_fraction * static_cast<double>(train.size())));
  if (k == 0) throw ConfigError("mark fraction selects zero records");

  std::size_t fdim = feature_dim(marking_model);
  CraftResult result;
  Rng crng = make_rng(mix_seed(spec.carrier_seed, "carriers"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t c = 0; c < train.num_classes; ++c) {
    Tensor u({fdim});
    for (double& x : u.data) x = gauss(crng);
    u.scale(1.0 / l2_norm(u));
    result.pairs.carriers.push_back(std::move(u));
  }

  result.marked_rows = sample_indices(train.size(), k, mix_seed(spec.carrier_seed, "rows"));
  std::sort(result.marked_rows.begin(), result.marked_rows.end());
  LabeledSet selected = train.subset(result.marked_rows);
  result.pairs.clean = selected.inputs;
  result.pairs.marked = selected.inputs;
  result.pairs.labels = selected.labels;

  double rate = craft_step_size(spec);
  std::size_t row = train.example_numel();
  std::size_t flayer = feature_layer_index(marking_model);
  parallel_for(k, [&](std::size_t i) {
    Tensor clean = selected.example(i);
    const Tensor& u = result.pairs.carriers[selected.labels[i]];
    Tensor base_feat = penultimate_features(marking_model, clean);
    Tensor x = clean;
    for (std::size_t it = 0; it < spec.craft_steps; ++it) {
      ForwardTrace trace;
      forward_logits(marking_model, x, &trace);
      Tensor feat = trace.acts[flayer + 1];
      Tensor v({fdim});
      for (std::size_t j = 0; j < fdim; ++j) v.data[j] = feat.data[j] - base_feat.data[j];
      Tensor seed = cosine_grad(v, u);
      seed.shape = feat.shape;  // {1, fdim}
      Tensor g = backprop_to_input(marking_model, trace, flayer, seed);
      for (std::size_t j = 0; j < x.size(); ++j) {
        double moved =
            x.data[j] + rate * (g.data[j] > 0.0 ? 1.0 : (g.data[j] < 0.0 ? -1.0 : 0.0));
        double lo = std::max(clean.data[j] - spec.perturb_budget, 0.0);
        double hi = std::min(clean.data[j] + spec.perturb_budget, 1.0);
        x.data[j] = std::clamp(moved, lo, hi);
      }
    }
    std::copy(x.data.begin(), x.data.end(),
              result.pairs.marked.data.begin() + i * row);
  });

  result.marked_train = train;
  for (std::size_t i = 0; i < k; ++i) {
    std::copy(result.pairs.marked.data.begin() + i * row,
              result.pairs.marked.data.begin() + (i + 1) * row,
              result.marked_train.inputs.data.begin() + result.marked_rows[i] * row);
  }
  return result;
}

double eval_rad_score(const Model& model, const MarkedPairs& pairs) {
  if (pairs.labels.empty()) throw InputError("no marked pairs to score");
  std::vector<double> clean_losses =
      per_example_losses(model, pairs.clean, pairs.labels);
  std::vector<double> marked_losses =
      per_example_losses(model, pairs.marked, pairs.labels);
  // Accumulated in extended precision so the score does not depend on the
  // order the pairs are stored in.
  long double s = 0.0L;
  for (std::size_t i = 0; i < pairs.labels.size(); ++i) {
    s += static_cast<long double>(clean_losses[i]) -
         static_cast<long double>(marked_losses[i]);
  }
  return static_cast<double>(s / static_cast<long double>(pairs.labels.size()));
}

}  // namespace conflictbench
