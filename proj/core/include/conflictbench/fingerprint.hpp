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

#ifndef CONFLICTBENCH_FINGERPRINT_HPP_
#define CONFLICTBENCH_FINGERPRINT_HPP_

#include <cstdint>
#include <vector>

#include "conflictbench/data.hpp"
#include "conflictbench/model.hpp"

namespace conflictbench {

struct DiSpec {
  std::size_t walk_count = 8;    // directions per record = embedding width
  double walk_step = 0.02;       // L-inf hop length
  std::size_t max_hops = 50;
  std::size_t fit_size = 300;    // records per side for the distinguisher
  std::size_t ver_size = 150;    // records per side for the decision
};

// Blind-walk margin embedding: draw walk_count random sign directions from
// the seed, then for each record hop outward along each direction in
// walk_step increments until the predicted class changes, and record the
// distance walked (no input clipping; capped at max_hops * walk_step).
// Every record shares the same directions, so column d is a comparable
// feature across rows and across embeddings made with the same seed. Rows
// parallelize; the result depends only on (model, records, spec, seed).
std::vector<std::vector<double>> blind_walk_embed(const Model& model,
                                                  const LabeledSet& records,
                                                  const DiSpec& spec,
                                                  std::uint64_t seed);

// Logistic regression separating member embeddings (label 1) from
// non-member embeddings, fit by full-batch gradient descent on
// standardized features. Deterministic: no random initialization.
struct Distinguisher {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feat_mean;
  std::vector<double> feat_scale;
  bool degenerate = false;  // embeddings carried no usable signal

  // Train-likeness score (logit scale, monotone in membership confidence).
  double score(const std::vector<double>& embedding) const;
};

Distinguisher train_distinguisher(
    const std::vector<std::vector<double>>& member_emb,
    const std::vector<std::vector<double>>& nonmember_emb);

// One-sided Welch p-value for "verification records score more
// train-like than held-out records" under the suspect model. Small values
// mean the suspect's behavior separates the two sets, i.e. the verifier's
// data left a fingerprint. Pass the same seed used to embed the
// distinguisher's fit sets: the fitted weights only apply to embeddings
// built from the same directions.
double di_pvalue(const Model& suspect, const LabeledSet& ver_records,
                 const LabeledSet& held_out, const Distinguisher& dist,
                 const DiSpec& spec, std::uint64_t seed);

// Disjoint owner-side subsets for one verification: fit_size records per
// side train the distinguisher, ver_size per side feed the decision.
struct VerifySplit {
  LabeledSet fit_members;
  LabeledSet fit_nonmembers;
  LabeledSet ver;
  LabeledSet held;
};

VerifySplit make_verify_split(const LabeledSet& owner_train,
                              const LabeledSet& test, const DiSpec& spec,
                              std::uint64_t seed);

// Full verification against a suspect model: embed the owner's splits
// under the suspect, fit the distinguisher, and return the decision
// p-value. This is the quantity the conflict engine thresholds.
double verify_dataset_use(const Model& suspect, const LabeledSet& owner_train,
                          const LabeledSet& test, const DiSpec& spec,
                          std::uint64_t seed);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_FINGERPRINT_HPP_
