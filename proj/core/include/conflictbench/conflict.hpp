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

#ifndef CONFLICTBENCH_CONFLICT_HPP_
#define CONFLICTBENCH_CONFLICT_HPP_

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "conflictbench/stats.hpp"

namespace conflictbench {

enum class Metric { kAcc, kWm, kAdv, kRad, kDi, kEpsilon };

std::string metric_name(Metric m);

// Decision bounds: how much each protection is allowed to degrade before
// the combination counts as broken.
struct ThresholdPolicy {
  double acc_drop = 0.10;      // absolute test-accuracy drop
  double wm_drop = 0.30;       // absolute trigger-accuracy drop
  double adv_drop = 0.10;      // absolute robust-accuracy drop
  double di_p_max = 1e-3;      // fingerprint verification must stay below
  double rad_min = 1e-2;       // mark score must stay above
  double epsilon_cap_factor = 1.0;  // spent epsilon vs configured target
};

struct StatsPolicy {
  double alpha = 0.05;       // significance gate for observed drops
  double alpha_star = 0.05;  // level of the recorded equivalence test
};

// Per-seed metric values for one mechanism pair: each baseline is keyed by
// its mechanism tag ("dpsgd", "advtr", "wm", "rad", "di") and maps metrics
// to one value per seed; `combined` holds the same for the joint run.
struct PairSamples {
  std::string pair_name;
  std::string dataset;
  std::map<std::string, std::map<Metric, std::vector<double>>> baselines;
  std::map<Metric, std::vector<double>> combined;
  double target_epsilon = std::numeric_limits<double>::quiet_NaN();
};

struct MetricReport {
  Metric metric = Metric::kAcc;
  std::string baseline_tag;  // which baseline the comparison used
  double baseline_mean = std::numeric_limits<double>::quiet_NaN();
  double combined_mean = std::numeric_limits<double>::quiet_NaN();
  double delta = 0.0;  // baseline - combined for drop metrics
  WelchResult welch;   // two-sided test baseline vs combined
  TostResult tost;     // equivalence within the drop bound
  bool tested = false; // drop metrics run the two tests above
  bool conflict = false;
  std::string detail;
};

struct ConflictVerdict {
  std::string pair_name;
  std::string dataset;
  std::vector<MetricReport> reports;
  bool conflict = false;
  // Sanity bound: combined accuracy should not exceed the weaker
  // single-mechanism accuracy by more than the slack.
  bool accuracy_bound_ok = true;
  std::string summary;
};

// A drop metric conflicts when the baseline/combined difference is both
// statistically significant at stats.alpha and larger than its bound.
// The mark score must stay above rad_min, the median fingerprint p-value
// at or below di_p_max, and spent epsilon within the configured target.
ConflictVerdict decide_conflict(const PairSamples& samples,
                                const ThresholdPolicy& thresholds,
                                const StatsPolicy& stats);

bool check_accuracy_bound(double combined_mean, double base1_mean,
                          double base2_mean, double slack = 0.02);

double median_of(std::vector<double> v);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_CONFLICT_HPP_
