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

#include "conflictbench/fingerprint.hpp"

#include <algorithm>
#include <cmath>

#include "conflictbench/errors.hpp"
#include "conflictbench/parallel.hpp"
#include "conflictbench/rng.hpp"
#include "conflictbench/stats.hpp"

namespace conflictbench {
namespace {

std::size_t argmax_row(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < logits.size(); ++j) {
    if (logits.data[j] > logits.data[best]) best = j;
  }
  return best;
}

}  // namespace

std::vector<std::vector<double>> blind_walk_embed(const Model& model,
                                                  const LabeledSet& records,
                                                  const DiSpec& spec,
                                                  std::uint64_t seed) {
  validate_set(records);
  if (spec.walk_count == 0 || spec.max_hops == 0 || !(spec.walk_step > 0.0)) {
    throw ConfigError("walk embedding needs positive counts and step");
  }
  // One direction set per embedding call, shared by every record, so column
  // d measures the margin along the same probe axis for all rows and a
  // distinguisher fitted on one embedding transfers to another that used the
  // same seed.
  std::size_t pixels = records.example_numel();
  std::vector<Tensor> dirs;
  dirs.reserve(spec.walk_count);
  for (std::size_t d = 0; d < spec.walk_count; ++d) {
    Rng rng = make_rng(mix_seed(seed, d));
    std::uniform_int_distribution<int> coin(0, 1);
    Tensor dir({pixels});
    for (double& v : dir.data) v = coin(rng) ? 1.0 : -1.0;
    dirs.push_back(std::move(dir));
  }
  std::vector<std::vector<double>> emb(records.size());
  double cap = static_cast<double>(spec.max_hops) * spec.walk_step;
  parallel_for(records.size(), [&](std::size_t i) {
    Tensor x = records.example(i);
    Tensor base_logits = forward_logits(model, x);
    std::size_t base_pred = argmax_row(base_logits);
    std::vector<double>& row = emb[i];
    row.resize(spec.walk_count);
    for (std::size_t d = 0; d < spec.walk_count; ++d) {
      const Tensor& dir = dirs[d];
      double dist = cap;
      Tensor probe = x;
      for (std::size_t hop = 1; hop <= spec.max_hops; ++hop) {
        for (std::size_t j = 0; j < probe.size(); ++j) {
          probe.data[j] = x.data[j] + static_cast<double>(hop) * spec.walk_step *
                                          dir.data[j];
        }
        if (argmax_row(forward_logits(model, probe)) != base_pred) {
          dist = static_cast<double>(hop) * spec.walk_step;
          break;
        }
      }
      row[d] = dist;
    }
  });
  return emb;
}

double Distinguisher::score(const std::vector<double>& embedding) const {
  if (embedding.size() != weights.size()) {
    throw InputError("embedding width does not match the distinguisher");
  }
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    z += weights[j] * (embedding[j] - feat_mean[j]) / feat_scale[j];
  }
  return z;
}

Distinguisher train_distinguisher(
    const std::vector<std::vector<double>>& member_emb,
    const std::vector<std::vector<double>>& nonmember_emb) {
  if (member_emb.size() < 2 || nonmember_emb.size() < 2) {
    throw InputError("distinguisher needs at least two embeddings per side");
  }
  std::size_t width = member_emb[0].size();
  for (const auto& row : member_emb) {
    if (row.size() != width) throw InputError("ragged member embeddings");
  }
  for (const auto& row : nonmember_emb) {
    if (row.size() != width) throw InputError("ragged non-member embeddings");
  }
  std::size_t n = member_emb.size() + nonmember_emb.size();

  Distinguisher d;
  d.weights.assign(width, 0.0);
  d.feat_mean.assign(width, 0.0);
  d.feat_scale.assign(width, 1.0);
  for (std::size_t j = 0; j < width; ++j) {
    double s = 0.0;
    for (const auto& row : member_emb) s += row[j];
    for (const auto& row : nonmember_emb) s += row[j];
    d.feat_mean[j] = s / static_cast<double>(n);
    double v = 0.0;
    for (const auto& row : member_emb) {
      v += (row[j] - d.feat_mean[j]) * (row[j] - d.feat_mean[j]);
    }
    for (const auto& row : nonmember_emb) {
      v += (row[j] - d.feat_mean[j]) * (row[j] - d.feat_mean[j]);
    }
    double sd = std::sqrt(v / static_cast<double>(n));
    if (sd > 1e-12) d.feat_scale[j] = sd;
  }

  // If every column is flat the fit cannot separate anything; flag it
  // instead of returning an arbitrary-looking zero scorer silently.
  double total_var = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    for (const auto& row : member_emb) {
      total_var += (row[j] - d.feat_mean[j]) * (row[j] - d.feat_mean[j]);
    }
    for (const auto& row : nonmember_emb) {
      total_var += (row[j] - d.feat_mean[j]) * (row[j] - d.feat_mean[j]);
    }
  }
  if (total_var <= 1e-18) {
    d.degenerate = true;
    return d;
  }

  // Full-batch gradient descent on the logistic loss.
  constexpr std::size_t kIters = 400;
  constexpr double kRate = 0.5;
  std::vector<std::vector<double>> z(n, std::vector<double>(width));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < member_emb.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      z[i][j] = (member_emb[i][j] - d.feat_mean[j]) / d.feat_scale[j];
    }
    y[i] = 1;
  }
  for (std::size_t i = 0; i < nonmember_emb.size(); ++i) {
    std::size_t at = member_emb.size() + i;
    for (std::size_t j = 0; j < width; ++j) {
      z[at][j] = (nonmember_emb[i][j] - d.feat_mean[j]) / d.feat_scale[j];
    }
    y[at] = 0;
  }
  for (std::size_t it = 0; it < kIters; ++it) {
    std::vector<double> gw(width, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double logit = d.bias;
      for (std::size_t j = 0; j < width; ++j) logit += d.weights[j] * z[i][j];
      double p = 1.0 / (1.0 + std::exp(-logit));
      double err = p - static_cast<double>(y[i]);
      for (std::size_t j = 0; j < width; ++j) gw[j] += err * z[i][j];
      gb += err;
    }
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < width; ++j) d.weights[j] -= kRate * gw[j] * inv_n;
    d.bias -= kRate * gb * inv_n;
  }
  return d;
}

double di_pvalue(const Model& suspect, const LabeledSet& ver_records,
                 const LabeledSet& held_out, const Distinguisher& dist,
                 const DiSpec& spec, std::uint64_t seed) {
  if (dist.degenerate) return 1.0;
  // Both embeddings use the caller's seed unchanged: the distinguisher was
  // fitted on embeddings with these directions, and column meanings must not
  // shift between fit and decision.
  std::vector<std::vector<double>> ver_emb =
      blind_walk_embed(suspect, ver_records, spec, seed);
  std::vector<std::vector<double>> held_emb =
      blind_walk_embed(suspect, held_out, spec, seed);
  std::vector<double> ver_scores, held_scores;
  ver_scores.reserve(ver_emb.size());
  held_scores.reserve(held_emb.size());
  for (const auto& e : ver_emb) ver_scores.push_back(dist.score(e));
  for (const auto& e : held_emb) held_scores.push_back(dist.score(e));
  return welch_p_greater(ver_scores, held_scores);
}

VerifySplit make_verify_split(const LabeledSet& owner_train,
                              const LabeledSet& test, const DiSpec& spec,
                              std::uint64_t seed) {
  if (owner_train.size() < spec.fit_size + spec.ver_size ||
      test.size() < spec.fit_size + spec.ver_size) {
    throw ConfigError("dataset too small for the fingerprint fit and decision splits");
  }
  std::vector<std::size_t> tr = sample_indices(
      owner_train.size(), spec.fit_size + spec.ver_size, mix_seed(seed, "tr"));
  std::vector<std::size_t> te = sample_indices(
      test.size(), spec.fit_size + spec.ver_size, mix_seed(seed, "te"));
  VerifySplit s;
  s.fit_members = owner_train.subset({tr.begin(), tr.begin() + spec.fit_size});
  s.ver = owner_train.subset({tr.begin() + spec.fit_size, tr.end()});
  s.fit_nonmembers = test.subset({te.begin(), te.begin() + spec.fit_size});
  s.held = test.subset({te.begin() + spec.fit_size, te.end()});
  return s;
}

double verify_dataset_use(const Model& suspect, const LabeledSet& owner_train,
                          const LabeledSet& test, const DiSpec& spec,
                          std::uint64_t seed) {
  VerifySplit split = make_verify_split(owner_train, test, spec,
                                        mix_seed(seed, "split"));
  // One direction seed for every embedding in this verification, so the
  // fitted weights apply to the decision embeddings.
  std::uint64_t dirs = mix_seed(seed, "dirs");
  std::vector<std::vector<double>> fit_m =
      blind_walk_embed(suspect, split.fit_members, spec, dirs);
  std::vector<std::vector<double>> fit_n =
      blind_walk_embed(suspect, split.fit_nonmembers, spec, dirs);
  Distinguisher dist = train_distinguisher(fit_m, fit_n);
  return di_pvalue(suspect, split.ver, split.held, dist, spec, dirs);
}

}  // namespace conflictbench
