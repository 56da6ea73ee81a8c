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

// Unit tests for the numerical core: tensors, models and gradients, the
// training loop, statistics, private optimization, and evasion attacks.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "conflictbench/adv.hpp"
#include "conflictbench/data.hpp"
#include "conflictbench/dp.hpp"
#include "conflictbench/errors.hpp"
#include "conflictbench/model.hpp"
#include "conflictbench/rng.hpp"
#include "conflictbench/stats.hpp"
#include "conflictbench/tensor.hpp"
#include "conflictbench/train.hpp"

using namespace conflictbench;

namespace {

// Samples with exact mean 0 and sample sd 1 up to rounding: symmetric
// integers rescaled by their own sample sd.
std::vector<double> unit_moments(std::size_t n) {
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = static_cast<double>(i) - 0.5 * static_cast<double>(n - 1);
  }
  double sd = std::sqrt(sample_var(z));
  for (double& v : z) v /= sd;
  return z;
}

std::vector<double> sample_with(double mean, double sd, std::size_t n) {
  std::vector<double> z = unit_moments(n);
  for (double& v : z) v = mean + sd * v;
  return z;
}

Tensor random_batch(std::size_t n, const std::vector<std::size_t>& shape,
                    std::uint64_t seed, std::vector<int>* labels,
                    std::size_t classes) {
  std::vector<std::size_t> full{n};
  full.insert(full.end(), shape.begin(), shape.end());
  Tensor batch(full);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> pix(0.0, 1.0);
  for (double& v : batch.data) v = pix(rng);
  labels->resize(n);
  std::uniform_int_distribution<int> lab(0, static_cast<int>(classes) - 1);
  for (int& y : *labels) y = lab(rng);
  return batch;
}

}  // namespace

TEST_CASE("tensor construction and numel") {
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(Tensor::numel({5, 5}) == 25);
  CHECK(Tensor::numel({}) == 1);
  Tensor u({2, 2}, {1.0, 2.0, 3.0, 4.0});
  CHECK(u[3] == 4.0);
  CHECK(u.same_shape(Tensor({2, 2})));
  CHECK_FALSE(u.same_shape(t));
}

TEST_CASE("tensor arithmetic helpers") {
  Tensor a({3}, {1.0, 2.0, 3.0});
  Tensor b({3}, {4.0, -5.0, 6.0});
  CHECK(dot(a, b) == doctest::Approx(4.0 - 10.0 + 18.0));
  CHECK(l2_norm(b) == doctest::Approx(std::sqrt(16.0 + 25.0 + 36.0)));
  CHECK(max_abs_diff(a, b) == doctest::Approx(7.0));
  a.axpy(2.0, b);
  CHECK(a[0] == doctest::Approx(9.0));
  a.fill(1.5);
  a.scale(2.0);
  CHECK(a[2] == doctest::Approx(3.0));
  CHECK(a.all_finite());
  a[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(a.all_finite());
}

TEST_CASE("mlp and cnn topologies have expected output shapes") {
  Model mlp = make_mlp({1, 6, 6}, {16, 8}, 4);
  CHECK(mlp.param_count() == (36 * 16 + 16) + (16 * 8 + 8) + (8 * 4 + 4));
  Model cnn = make_topology("cnn8x16h32", {1, 8, 8}, 10);
  Model lin = make_topology("linear", {1, 4, 4}, 3);
  init_params(mlp, 1);
  init_params(cnn, 2);
  init_params(lin, 3);
  std::vector<int> labels;
  Tensor batch = random_batch(5, {1, 6, 6}, 11, &labels, 4);
  Tensor logits = forward_logits(mlp, batch);
  CHECK(logits.shape == std::vector<std::size_t>{5, 4});
  Tensor batch8 = random_batch(3, {1, 8, 8}, 12, &labels, 10);
  CHECK(forward_logits(cnn, batch8).shape == std::vector<std::size_t>{3, 10});
  Tensor batch4 = random_batch(2, {1, 4, 4}, 13, &labels, 3);
  CHECK(forward_logits(lin, batch4).shape == std::vector<std::size_t>{2, 3});
  CHECK_THROWS_AS(make_topology("resnet50", {1, 8, 8}, 10), ConfigError);
  CHECK_THROWS_AS(make_topology("cnn8x16", {1, 8, 8}, 10), ConfigError);
}

TEST_CASE("parameter init is seed-deterministic") {
  Model a = make_topology("mlp16", {1, 5, 5}, 3);
  Model b = a;
  Model c = a;
  init_params(a, 42);
  init_params(b, 42);
  init_params(c, 43);
  // weights are stored per layer; the parameterless flatten slot stays
  // empty, so the checks target the dense layers.
  CHECK(a.weights.back().data == b.weights.back().data);
  CHECK(a.biases.back().data == b.biases.back().data);
  CHECK(max_abs_diff(a.weights.back(), c.weights.back()) > 0.0);
}

TEST_CASE("softmax probabilities are a distribution") {
  Model m = make_topology("mlp12", {1, 4, 4}, 5);
  init_params(m, 7);
  std::vector<int> labels;
  Tensor batch = random_batch(6, {1, 4, 4}, 21, &labels, 5);
  Tensor probs = forward_probs(m, batch);
  for (std::size_t i = 0; i < 6; ++i) {
    double row = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      double p = probs.data[i * 5 + c];
      CHECK(p > 0.0);
      row += p;
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mean loss equals the mean of per-example losses") {
  Model m = make_topology("cnn4h8", {1, 6, 6}, 3);
  init_params(m, 9);
  std::vector<int> labels;
  Tensor batch = random_batch(7, {1, 6, 6}, 22, &labels, 3);
  std::vector<double> each = per_example_losses(m, batch, labels);
  double mean = 0.0;
  for (double l : each) mean += l;
  mean /= 7.0;
  CHECK(mean_loss(m, batch, labels) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("batch gradient is the mean of per-example gradients") {
  Model m = make_topology("cnn4h8", {1, 6, 6}, 3);
  init_params(m, 10);
  std::vector<int> labels;
  Tensor batch = random_batch(6, {1, 6, 6}, 23, &labels, 3);
  GradStore batch_grad = loss_grad(m, batch, labels);
  std::vector<GradStore> each = per_example_grads(m, batch, labels);
  REQUIRE(each.size() == 6);
  GradStore mean = GradStore::zeros_like(m);
  for (const GradStore& g : each) mean.add(g);
  mean.scale(1.0 / 6.0);
  CHECK(mean.max_abs_diff(batch_grad) < 1e-10);
}

TEST_CASE("parameter gradients match central finite differences") {
  // A fast spot check; the acceptance gate sweeps 100 random nets.
  for (std::uint64_t trial = 0; trial < 4; ++trial) {
    Model m = trial % 2 == 0 ? make_topology("mlp10x6", {1, 5, 5}, 4)
                             : make_topology("cnn3h6", {1, 6, 6}, 3);
    init_params(m, 100 + trial);
    std::vector<int> labels;
    std::size_t classes = trial % 2 == 0 ? 4 : 3;
    Tensor batch = random_batch(4, m.input_shape, 200 + trial, &labels, classes);
    GradStore g = loss_grad(m, batch, labels);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t li = 0; li < m.weights.size(); ++li) {
      for (std::size_t j = 0; j < m.weights[li].size(); j += 7) {
        double saved = m.weights[li].data[j];
        m.weights[li].data[j] = saved + h;
        double up = mean_loss(m, batch, labels);
        m.weights[li].data[j] = saved - h;
        double down = mean_loss(m, batch, labels);
        m.weights[li].data[j] = saved;
        double fd = (up - down) / (2.0 * h);
        double an = g.weights[li].data[j];
        double rel = std::fabs(fd - an) / std::max({1e-6, std::fabs(fd), std::fabs(an)});
        worst = std::max(worst, rel);
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("input gradient matches central finite differences") {
  Model m = make_topology("mlp8", {1, 4, 4}, 3);
  init_params(m, 55);
  std::vector<int> labels;
  Tensor batch = random_batch(3, {1, 4, 4}, 56, &labels, 3);
  Tensor in_grad;
  loss_grad(m, batch, labels, &in_grad);
  REQUIRE(in_grad.shape == batch.shape);
  const double h = 1e-5;
  for (std::size_t j = 0; j < batch.size(); j += 5) {
    double saved = batch.data[j];
    batch.data[j] = saved + h;
    double up = mean_loss(m, batch, labels);
    batch.data[j] = saved - h;
    double down = mean_loss(m, batch, labels);
    batch.data[j] = saved;
    double fd = (up - down) / (2.0 * h);
    CHECK(in_grad.data[j] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("penultimate features have the advertised width") {
  Model m = make_topology("cnn8x16h32", {1, 8, 8}, 10);
  init_params(m, 77);
  std::vector<int> labels;
  Tensor batch = random_batch(4, {1, 8, 8}, 78, &labels, 10);
  Tensor feats = penultimate_features(m, batch);
  CHECK(feats.shape == std::vector<std::size_t>{4, feature_dim(m)});
  CHECK(feature_dim(m) == 32);
}

TEST_CASE("apply_grads moves parameters against the gradient") {
  Model m = make_topology("mlp6", {1, 3, 3}, 2);
  init_params(m, 31);
  GradStore g = GradStore::zeros_like(m);
  g.weights.back().fill(2.0);
  double before = m.weights.back().data[0];
  apply_grads(m, g, 0.25);
  CHECK(m.weights.back().data[0] == doctest::Approx(before - 0.5));
}

TEST_CASE("one-cycle schedule warms up then decays") {
  double lo = 0.001, hi = 0.1;
  std::size_t total = 100;
  CHECK(one_cycle_lr(lo, hi, 0, total) == doctest::Approx(lo));
  CHECK(one_cycle_lr(lo, hi, 50, total) == doctest::Approx(hi));
  // Decay targets a floor of a tenth of the initial rate, reached in the
  // limit at step == total; the last executed step sits one increment up.
  CHECK(one_cycle_lr(lo, hi, 100, total) == doctest::Approx(lo / 10.0));
  double last = one_cycle_lr(lo, hi, 99, total);
  CHECK(last >= lo / 10.0 - 1e-12);
  CHECK(last <= lo / 10.0 + (hi - lo / 10.0) / 50.0 + 1e-12);
  for (std::size_t s = 1; s <= 50; ++s) {
    CHECK(one_cycle_lr(lo, hi, s, total) >= one_cycle_lr(lo, hi, s - 1, total));
  }
  for (std::size_t s = 51; s < 100; ++s) {
    CHECK(one_cycle_lr(lo, hi, s, total) <= one_cycle_lr(lo, hi, s - 1, total));
  }
  TrainPlan plan;
  plan.lr_initial = lo;
  plan.lr_max = hi;
  plan.schedule = ScheduleKind::kConstant;
  CHECK(schedule_lr(plan, 17, 100) == doctest::Approx(hi));
}

TEST_CASE("steps per epoch rounds up") {
  CHECK(steps_per_epoch(100, 25) == 4);
  CHECK(steps_per_epoch(101, 25) == 5);
  CHECK(steps_per_epoch(3, 25) == 1);
}

TEST_CASE("training is deterministic and better than chance") {
  SynthSpec spec;
  spec.train_size = 300;
  spec.test_size = 200;
  spec.seed = 3;
  SynthTask task = make_blob_task(spec);
  Model topo = make_topology("mlp24", {1, 8, 8}, 10);
  TrainPlan plan;
  plan.epochs = 40;
  plan.batch_size = 30;
  plan.lr_max = 0.08;
  plan.seed = 17;
  Model a = train_model(topo, task.train, plan);
  Model b = train_model(topo, task.train, plan);
  CHECK(a.weights.back().data == b.weights.back().data);
  double acc = eval_accuracy(a, task.test);
  CHECK(acc > 0.4);  // chance is 0.1
  plan.seed = 18;
  Model c = train_model(topo, task.train, plan);
  CHECK(max_abs_diff(a.weights.back(), c.weights.back()) > 0.0);
}

TEST_CASE("incomplete beta matches closed forms") {
  for (double x : {0.1, 0.37, 0.5, 0.82}) {
    CHECK(incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(incomplete_beta(1.0, 3.5, x) ==
          doctest::Approx(1.0 - std::pow(1.0 - x, 3.5)).epsilon(1e-12));
    CHECK(incomplete_beta(2.5, 1.0, x) ==
          doctest::Approx(std::pow(x, 2.5)).epsilon(1e-12));
  }
  CHECK(incomplete_beta(4.0, 4.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(incomplete_beta(3.0, 7.0, 0.0) == 0.0);
  CHECK(incomplete_beta(3.0, 7.0, 1.0) == 1.0);
  CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), InputError);
}

TEST_CASE("student t cdf matches low-df closed forms") {
  const double pi = 3.14159265358979323846;
  for (double t : {-3.0, -0.7, 0.0, 0.4, 2.5, 10.0}) {
    // df = 1 is Cauchy, df = 2 has an elementary form.
    CHECK(student_t_cdf(t, 1.0) ==
          doctest::Approx(0.5 + std::atan(t) / pi).epsilon(1e-10));
    CHECK(student_t_cdf(t, 2.0) ==
          doctest::Approx(0.5 + t / (2.0 * std::sqrt(2.0 + t * t))).epsilon(1e-10));
    CHECK(student_t_cdf(-t, 5.0) ==
          doctest::Approx(1.0 - student_t_cdf(t, 5.0)).epsilon(1e-10));
  }
  CHECK(student_t_cdf(0.0, 13.0) == 0.5);
  CHECK(student_t_cdf(std::numeric_limits<double>::infinity(), 3.0) == 1.0);
  CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), InputError);
}

TEST_CASE("welch test reproduces the frozen trigger-accuracy contrast") {
  // Mean 0.97 sd 0.01 vs mean 0.36 sd 0.06, ten runs each.
  std::vector<double> a = sample_with(0.97, 0.01, 10);
  std::vector<double> b = sample_with(0.36, 0.06, 10);
  WelchResult r = welch_t(a, b);
  CHECK(r.t == doctest::Approx(31.712389939512217).epsilon(1e-9));
  CHECK(r.df == doctest::Approx(9.4996144949884348).epsilon(1e-9));
  CHECK(r.p == doctest::Approx(5.845054887e-11).epsilon(1e-5));
  WelchResult flipped = welch_t(b, a);
  CHECK(flipped.t == doctest::Approx(-r.t).epsilon(1e-12));
  CHECK(welch_p_greater(a, b) == doctest::Approx(0.5 * r.p).epsilon(1e-6));
  CHECK(welch_p_greater(b, a) == doctest::Approx(1.0 - 0.5 * r.p).epsilon(1e-6));
}

TEST_CASE("welch test handles identical and degenerate samples") {
  std::vector<double> same{0.5, 0.6, 0.7};
  WelchResult eq = welch_t(same, same);
  CHECK(eq.t == 0.0);
  CHECK(eq.p == doctest::Approx(1.0));
  // Dyadic values keep the sample mean bit-exact, so the variance is
  // exactly zero and the degenerate branch is taken deterministically.
  std::vector<double> flat_a{0.5, 0.5, 0.5};
  std::vector<double> flat_b{0.25, 0.25, 0.25};
  WelchResult deg = welch_t(flat_a, flat_b);
  CHECK(deg.degenerate);
  CHECK(deg.p == 0.0);
  CHECK(std::isinf(deg.t));
  WelchResult flat_eq = welch_t(flat_a, flat_a);
  CHECK_FALSE(flat_eq.degenerate);
  CHECK(flat_eq.p == 1.0);
  CHECK_THROWS_AS(welch_t({1.0}, same), InputError);
}

TEST_CASE("equivalence test separates near and far samples") {
  std::vector<double> a = sample_with(0.80, 0.01, 10);
  std::vector<double> near = sample_with(0.79, 0.01, 10);
  std::vector<double> far = sample_with(0.40, 0.01, 10);
  TostResult close_call = tost_equivalence(a, near, 0.10, 0.05);
  CHECK(close_call.equivalent);
  CHECK(std::max(close_call.p_lower, close_call.p_upper) < 0.05);
  TostResult far_call = tost_equivalence(a, far, 0.10, 0.05);
  CHECK_FALSE(far_call.equivalent);
  // Zero-variance point comparisons decide each side exactly.
  TostResult point = tost_equivalence({0.5, 0.5}, {0.52, 0.52}, 0.10, 0.05);
  CHECK(point.equivalent);
  TostResult point_far = tost_equivalence({0.5, 0.5}, {0.9, 0.9}, 0.10, 0.05);
  CHECK_FALSE(point_far.equivalent);
  CHECK_THROWS_AS(tost_equivalence(a, near, 0.0, 0.05), InputError);
}

TEST_CASE("unsubsampled gaussian rdp is alpha over two sigma squared") {
  for (double sigma : {0.5, 1.0, 2.0, 7.0}) {
    for (int alpha : {2, 5, 32}) {
      CHECK(rdp_subsampled_gaussian(1.0, sigma, alpha) ==
            doctest::Approx(alpha / (2.0 * sigma * sigma)).epsilon(1e-12));
    }
  }
  // Subsampling can only shrink the per-step cost.
  CHECK(rdp_subsampled_gaussian(0.05, 1.0, 8) <
        rdp_subsampled_gaussian(1.0, 1.0, 8));
  CHECK(rdp_subsampled_gaussian(0.05, 1.0, 8) >= 0.0);
}

TEST_CASE("privacy accountant matches the frozen closed-form anchors") {
  // q = 1, delta = 1e-6: epsilon = min_alpha steps*alpha/(2 sigma^2) +
  // log(1/delta)/(alpha-1), minimized over integer orders.
  struct Anchor {
    double sigma;
    std::size_t steps;
    double epsilon;
  };
  const Anchor anchors[] = {
      {0.5, 1, 12.605170185988091},  {1.0, 1, 5.7631021115928548},
      {2.0, 1, 2.7559555052694795},  {0.5, 100, 413.81551055796427},
      {1.0, 100, 113.81551055796427}, {2.0, 100, 38.815510557964274},
  };
  for (const Anchor& a : anchors) {
    DpSpec spec;
    spec.noise_sigma = a.sigma;
    spec.delta = 1e-6;
    spec.sample_rate_q = 1.0;
    spec.dataset_size = 100;
    PrivacyBudget b = account_privacy(spec, a.steps);
    CHECK(b.epsilon == doctest::Approx(a.epsilon).epsilon(1e-6));
    CHECK(b.steps == a.steps);
    CHECK(b.delta == 1e-6);
    CHECK_FALSE(b.trace.empty());
  }
}

TEST_CASE("privacy loss is monotone in steps") {
  DpSpec spec;
  spec.noise_sigma = 1.2;
  spec.delta = 1e-6;
  spec.sample_rate_q = 0.05;
  spec.dataset_size = 1000;
  double last = 0.0;
  for (std::size_t steps = 1; steps <= 40; steps += 3) {
    double eps = account_privacy(spec, steps).epsilon;
    CHECK(eps >= last);
    last = eps;
  }
}

TEST_CASE("sigma calibration meets the budget") {
  DpSpec spec;
  spec.delta = 1e-6;
  spec.sample_rate_q = 0.05;
  spec.dataset_size = 1000;
  spec.target_epsilon = 3.0;
  std::size_t steps = 800;
  double sigma = calibrate_sigma(spec, steps);
  DpSpec tuned = spec;
  tuned.noise_sigma = sigma;
  double spent = account_privacy(tuned, steps).epsilon;
  CHECK(spent <= 3.0 + 1e-9);
  CHECK(spent > 2.9);  // binary search stops close to the budget
}

TEST_CASE("private steps clip per-example gradients") {
  SynthSpec sspec;
  sspec.train_size = 60;
  sspec.test_size = 20;
  sspec.seed = 4;
  SynthTask task = make_blob_task(sspec);
  Model m = make_topology("mlp16", {1, 8, 8}, 10);
  init_params(m, 5);
  DpSpec spec;
  spec.clip_c = 0.7;
  spec.noise_sigma = 1.0;
  spec.sample_rate_q = 0.5;
  spec.dataset_size = 60;
  Rng rng = make_rng(99);
  DpStepDiag diag;
  for (int step = 0; step < 5; ++step) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < 30; ++i) idx.push_back((step * 30 + i) % 60);
    std::vector<int> labels;
    Tensor batch = gather_batch(task.train, idx, &labels);
    dp_train_step(m, batch, labels, spec, 0.05, rng, &diag);
    REQUIRE_FALSE(diag.clipped_norms.empty());
    for (double n : diag.clipped_norms) CHECK(n <= spec.clip_c + 1e-6);
    for (const Tensor& w : m.weights) CHECK(w.all_finite());
  }
}

TEST_CASE("private step with a fixed seed is reproducible") {
  SynthSpec sspec;
  sspec.train_size = 40;
  sspec.test_size = 20;
  sspec.seed = 6;
  SynthTask task = make_blob_task(sspec);
  Model a = make_topology("mlp12", {1, 8, 8}, 10);
  init_params(a, 8);
  Model b = a;
  DpSpec spec;
  spec.clip_c = 1.0;
  spec.noise_sigma = 0.8;
  spec.sample_rate_q = 1.0;
  spec.dataset_size = 40;
  std::vector<std::size_t> idx(40);
  for (std::size_t i = 0; i < 40; ++i) idx[i] = i;
  std::vector<int> labels;
  Tensor batch = gather_batch(task.train, idx, &labels);
  dp_train_step(a, batch, labels, spec, 0.1, std::uint64_t{1234});
  dp_train_step(b, batch, labels, spec, 0.1, std::uint64_t{1234});
  CHECK(a.weights[0].data == b.weights[0].data);
  CHECK(a.biases.back().data == b.biases.back().data);
}

TEST_CASE("pgd step size defaults to 2.5 gamma over steps") {
  AdvSpec spec;
  spec.gamma = 0.2;
  spec.steps = 10;
  CHECK(pgd_step_size(spec) == doctest::Approx(0.05));
  spec.step_size = 0.013;
  CHECK(pgd_step_size(spec) == doctest::Approx(0.013));
}

TEST_CASE("pgd attacks stay inside the ball and the pixel range") {
  Model m = make_topology("cnn4h8", {1, 6, 6}, 4);
  init_params(m, 61);
  AdvSpec spec;
  spec.gamma = 0.13;
  spec.steps = 6;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    std::vector<int> labels;
    Tensor batch = random_batch(5, {1, 6, 6}, 400 + trial, &labels, 4);
    Tensor adv = pgd_attack(m, batch, labels, spec, 500 + trial);
    REQUIRE(adv.shape == batch.shape);
    for (std::size_t j = 0; j < adv.size(); ++j) {
      CHECK(std::fabs(adv.data[j] - batch.data[j]) <= spec.gamma + 1e-12);
      CHECK(adv.data[j] >= 0.0);
      CHECK(adv.data[j] <= 1.0);
    }
  }
  AdvSpec zero;
  zero.gamma = 0.0;
  std::vector<int> labels;
  Tensor batch = random_batch(3, {1, 6, 6}, 402, &labels, 4);
  Tensor same = pgd_attack(m, batch, labels, zero, 1);
  CHECK(max_abs_diff(same, batch) == 0.0);
  AdvSpec bad;
  bad.gamma = -0.1;
  CHECK_THROWS_AS(pgd_attack(m, batch, labels, bad, 1), ConfigError);
}

TEST_CASE("pgd on a two-class linear model reaches the worst corner") {
  // With linear logits and two classes the loss gradient keeps a constant
  // sign per pixel, so enough sign steps saturate the projected ball.
  Model m = make_topology("linear", {1, 4, 4}, 2);
  init_params(m, 71);
  AdvSpec spec;
  spec.gamma = 0.08;
  spec.steps = 12;
  std::vector<int> labels;
  Tensor batch = random_batch(4, {1, 4, 4}, 72, &labels, 2);
  Tensor adv = pgd_attack(m, batch, labels, spec, 73);
  const Tensor& w = m.weights.back();  // classifier weights, shape {2, 16}
  for (std::size_t i = 0; i < 4; ++i) {
    int y = labels[i];
    for (std::size_t j = 0; j < 16; ++j) {
      // Ascending the loss moves toward the non-true class weights.
      double diff = w.data[(1 - y) * 16 + j] - w.data[y * 16 + j];
      double target = batch.data[i * 16 + j] + (diff > 0.0 ? spec.gamma : -spec.gamma);
      target = std::clamp(target, 0.0, 1.0);
      CHECK(adv.data[i * 16 + j] == doctest::Approx(target).epsilon(1e-6));
    }
  }
}

TEST_CASE("robust accuracy does not exceed clean accuracy") {
  SynthSpec sspec;
  sspec.train_size = 250;
  sspec.test_size = 150;
  sspec.seed = 12;
  SynthTask task = make_blob_task(sspec);
  Model topo = make_topology("mlp24", {1, 8, 8}, 10);
  TrainPlan plan;
  plan.epochs = 6;
  plan.batch_size = 25;
  plan.lr_max = 0.05;
  plan.seed = 2;
  Model m = train_model(topo, task.train, plan);
  AdvSpec spec;
  spec.gamma = 0.1;
  spec.steps = 5;
  double clean = eval_accuracy(m, task.test);
  double robust = eval_robust_accuracy(m, task.test, spec, 9);
  CHECK(robust <= clean);
  CHECK(robust >= 0.0);
}
