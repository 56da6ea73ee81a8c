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

// Microbenchmarks for the hot paths: forward/backward passes, per-example
// gradients, the PGD attack, the privacy accountant, and blind-walk
// embedding.

#include <benchmark/benchmark.h>

#include "conflictbench/adv.hpp"
#include "conflictbench/data.hpp"
#include "conflictbench/dp.hpp"
#include "conflictbench/fingerprint.hpp"
#include "conflictbench/model.hpp"
#include "conflictbench/rng.hpp"

namespace cb = conflictbench;

namespace {

struct Fixture {
  cb::LabeledSet train;
  cb::Model model;
  cb::Tensor batch;
  std::vector<int> labels;

  explicit Fixture(const std::string& topology) {
    cb::SynthSpec spec;
    spec.train_size = 256;
    spec.test_size = 16;
    spec.seed = 11;
    cb::SynthTask task = cb::make_blob_task(spec);
    train = std::move(task.train);
    model = cb::make_topology(topology, train.example_shape(), train.num_classes);
    cb::init_params(model, 21);
    std::vector<std::size_t> idx(64);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    batch = cb::gather_batch(train, idx, &labels);
  }
};

void BM_ForwardLogits(benchmark::State& state) {
  Fixture f(state.range(0) == 0 ? "mlp64x32" : "cnn8x16h32");
  for (auto _ : state) {
    cb::Tensor logits = cb::forward_logits(f.model, f.batch);
    benchmark::DoNotOptimize(logits.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_ForwardLogits)->Arg(0)->Arg(1);

void BM_LossGrad(benchmark::State& state) {
  Fixture f(state.range(0) == 0 ? "mlp64x32" : "cnn8x16h32");
  for (auto _ : state) {
    cb::GradStore grads = cb::loss_grad(f.model, f.batch, f.labels);
    benchmark::DoNotOptimize(grads.weights.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_LossGrad)->Arg(0)->Arg(1);

void BM_PerExampleGrads(benchmark::State& state) {
  Fixture f("mlp64x32");
  for (auto _ : state) {
    std::vector<cb::GradStore> grads =
        cb::per_example_grads(f.model, f.batch, f.labels);
    benchmark::DoNotOptimize(grads.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_PerExampleGrads);

void BM_PgdAttack(benchmark::State& state) {
  Fixture f("mlp64x32");
  cb::AdvSpec adv;
  adv.steps = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 5;
  for (auto _ : state) {
    cb::Tensor x = cb::pgd_attack(f.model, f.batch, f.labels, adv, seed++);
    benchmark::DoNotOptimize(x.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_PgdAttack)->Arg(5)->Arg(10);

void BM_PrivacyAccounting(benchmark::State& state) {
  cb::DpSpec dp;
  dp.noise_sigma = 1.1;
  dp.sample_rate_q = 0.025;
  for (auto _ : state) {
    cb::PrivacyBudget b =
        cb::account_privacy(dp, static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(b.epsilon);
  }
}
BENCHMARK(BM_PrivacyAccounting)->Arg(100)->Arg(10000);

void BM_BlindWalkEmbed(benchmark::State& state) {
  Fixture f("mlp64x32");
  cb::DiSpec di;
  cb::LabeledSet probe = f.train.subset({0, 1, 2, 3, 4, 5, 6, 7});
  std::uint64_t seed = 9;
  for (auto _ : state) {
    auto emb = cb::blind_walk_embed(f.model, probe, di, seed++);
    benchmark::DoNotOptimize(emb.data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * di.walk_count);
}
BENCHMARK(BM_BlindWalkEmbed);

}  // namespace

BENCHMARK_MAIN();
