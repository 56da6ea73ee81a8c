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

#include "conflictbench/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "conflictbench/errors.hpp"

namespace conflictbench {
namespace {

constexpr int kMinOrder = 2;
constexpr int kMaxOrder = 64;
constexpr double kSigmaLo = 0.3;
constexpr double kSigmaHi = 100.0;
constexpr double kSigmaTol = 1e-3;

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double logsumexp(const std::vector<double>& terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : terms) m = std::max(m, t);
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

void check_spec(const DpSpec& spec) {
  if (!(spec.clip_c > 0.0)) throw ConfigError("clip norm must be positive");
  if (!(spec.noise_sigma > 0.0)) throw ConfigError("noise multiplier must be positive");
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1)");
  }
  if (!(spec.sample_rate_q > 0.0 && spec.sample_rate_q <= 1.0)) {
    throw ConfigError("sample rate must lie in (0, 1]");
  }
}

}  // namespace

void dp_train_step(Model& model, const Tensor& batch,
                   const std::vector<int>& labels, const DpSpec& spec,
                   double lr, Rng& rng, DpStepDiag* diag) {
  check_spec(spec);
  if (spec.dataset_size == 0) {
    throw ConfigError("private training needs the governed dataset size");
  }
  if (diag != nullptr) diag->clipped_norms.clear();
  GradStore sum = GradStore::zeros_like(model);
  if (!batch.shape.empty() && batch.shape[0] > 0) {
    std::vector<GradStore> per = per_example_grads(model, batch, labels);
    for (GradStore& g : per) {
      double norm = g.l2_norm();
      if (norm > spec.clip_c) g.scale(spec.clip_c / norm);
      if (diag != nullptr) diag->clipped_norms.push_back(g.l2_norm());
      sum.add(g);
    }
  }
  std::normal_distribution<double> noise(0.0, spec.noise_sigma * spec.clip_c);
  for (std::size_t i = 0; i < sum.weights.size(); ++i) {
    for (double& v : sum.weights[i].data) v += noise(rng);
    for (double& v : sum.biases[i].data) v += noise(rng);
  }
  double expected_batch = spec.sample_rate_q * static_cast<double>(spec.dataset_size);
  sum.scale(1.0 / expected_batch);
  apply_grads(model, sum, lr);
}

void dp_train_step(Model& model, const Tensor& batch,
                   const std::vector<int>& labels, const DpSpec& spec,
                   double lr, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  dp_train_step(model, batch, labels, spec, lr, rng);
}

double rdp_subsampled_gaussian(double q, double sigma, int alpha) {
  if (alpha < kMinOrder) throw ConfigError("Renyi order must be at least 2");
  if (!(sigma > 0.0)) throw ConfigError("noise multiplier must be positive");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("sample rate must lie in (0, 1]");
  if (q == 1.0) {
    // Plain Gaussian mechanism.
    return static_cast<double>(alpha) / (2.0 * sigma * sigma);
  }
  // log E[(P'(x)/P(x))^alpha] expanded over the binomial mixture.
  std::vector<double> terms;
  terms.reserve(alpha + 1);
  for (int j = 0; j <= alpha; ++j) {
    double lt = log_choose(alpha, j) +
                (alpha - j) * std::log1p(-q) + j * std::log(q) +
                j * (j - 1.0) / (2.0 * sigma * sigma);
    terms.push_back(lt);
  }
  double lse = logsumexp(terms);
  double rdp = lse / (alpha - 1.0);
  return rdp < 0.0 ? 0.0 : rdp;
}

PrivacyBudget account_privacy(const DpSpec& spec, std::size_t steps) {
  check_spec(spec);
  PrivacyBudget budget;
  budget.delta = spec.delta;
  budget.steps = steps;
  double best = std::numeric_limits<double>::infinity();
  double log_inv_delta = std::log(1.0 / spec.delta);
  for (int alpha = kMinOrder; alpha <= kMaxOrder; ++alpha) {
    double one = rdp_subsampled_gaussian(spec.sample_rate_q, spec.noise_sigma, alpha);
    double total = static_cast<double>(steps) * one;
    budget.trace.emplace_back(alpha, total);
    double eps = total + log_inv_delta / (alpha - 1.0);
    if (eps < best) {
      best = eps;
      budget.best_order = alpha;
    }
  }
  budget.epsilon = steps == 0 ? 0.0 : best;
  if (steps == 0) budget.best_order = kMaxOrder;
  return budget;
}

double calibrate_sigma(const DpSpec& spec, std::size_t steps) {
  if (!(spec.target_epsilon > 0.0)) {
    throw ConfigError("epsilon target must be positive");
  }
  if (steps == 0) return kSigmaLo;
  DpSpec probe = spec;
  auto eps_at = [&](double sigma) {
    probe.noise_sigma = sigma;
    return account_privacy(probe, steps).epsilon;
  };
  if (eps_at(kSigmaLo) <= spec.target_epsilon) return kSigmaLo;
  if (eps_at(kSigmaHi) > spec.target_epsilon) {
    throw ConfigError("epsilon target unreachable within the noise grid");
  }
  double lo = kSigmaLo, hi = kSigmaHi;  // lo infeasible, hi feasible
  while (hi - lo > kSigmaTol) {
    double mid = 0.5 * (lo + hi);
    if (eps_at(mid) <= spec.target_epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::string budget_to_json(const PrivacyBudget& budget) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"epsilon\":" << budget.epsilon << ",\"delta\":" << budget.delta
      << ",\"steps\":" << budget.steps << ",\"best_order\":" << budget.best_order
      << ",\"orders\":[";
  for (std::size_t i = 0; i < budget.trace.size(); ++i) {
    if (i) out << ',';
    out << "{\"alpha\":" << budget.trace[i].first
        << ",\"rdp\":" << budget.trace[i].second << '}';
  }
  out << "]}";
  return out.str();
}

}  // namespace conflictbench
