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

#include "conflictbench/conflict.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "conflictbench/errors.hpp"

namespace conflictbench {

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::kAcc: return "acc";
    case Metric::kWm: return "wm";
    case Metric::kAdv: return "adv";
    case Metric::kRad: return "rad";
    case Metric::kDi: return "di";
    case Metric::kEpsilon: return "epsilon";
  }
  return "unknown";
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw InputError("median of an empty sample");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool check_accuracy_bound(double combined_mean, double base1_mean,
                          double base2_mean, double slack) {
  return combined_mean <= std::min(base1_mean, base2_mean) + slack;
}

namespace {

const std::vector<double>* find_metric(
    const std::map<std::string, std::map<Metric, std::vector<double>>>& baselines,
    Metric m, std::string* tag) {
  for (const auto& [name, metrics] : baselines) {
    auto it = metrics.find(m);
    if (it != metrics.end()) {
      *tag = name;
      return &it->second;
    }
  }
  return nullptr;
}

// Baseline accuracy is the weaker of the two single-mechanism accuracies:
// a combination cannot be asked to beat the stronger one.
const std::vector<double>* min_mean_acc(
    const std::map<std::string, std::map<Metric, std::vector<double>>>& baselines,
    std::string* tag) {
  const std::vector<double>* best = nullptr;
  double best_mean = 0.0;
  for (const auto& [name, metrics] : baselines) {
    auto it = metrics.find(Metric::kAcc);
    if (it == metrics.end()) continue;
    double m = mean_of(it->second);
    if (!best || m < best_mean) {
      best = &it->second;
      best_mean = m;
      *tag = name;
    }
  }
  return best;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

MetricReport drop_report(Metric metric, const std::string& tag,
                         const std::vector<double>& baseline,
                         const std::vector<double>& combined, double bound,
                         const StatsPolicy& stats) {
  if (baseline.size() < 2 || combined.size() < 2) {
    throw InputError("drop test needs at least two seeds per side");
  }
  MetricReport r;
  r.metric = metric;
  r.baseline_tag = tag;
  r.tested = true;
  r.welch = welch_t(baseline, combined);
  r.tost = tost_equivalence(baseline, combined, bound, stats.alpha_star);
  r.baseline_mean = r.welch.mean_a;
  r.combined_mean = r.welch.mean_b;
  r.delta = r.baseline_mean - r.combined_mean;
  bool significant = r.welch.p < stats.alpha;
  r.conflict = significant && r.delta > bound;
  std::ostringstream d;
  d << metric_name(metric) << " drop " << fmt(r.delta) << " vs bound "
    << fmt(bound) << " (p=" << fmt(r.welch.p) << ", "
    << (significant ? "significant" : "not significant") << ")";
  r.detail = d.str();
  return r;
}

}  // namespace

ConflictVerdict decide_conflict(const PairSamples& samples,
                                const ThresholdPolicy& thresholds,
                                const StatsPolicy& stats) {
  if (samples.baselines.empty() || samples.combined.empty()) {
    throw InputError("verdict needs baseline and combined samples");
  }
  ConflictVerdict verdict;
  verdict.pair_name = samples.pair_name;
  verdict.dataset = samples.dataset;

  for (const auto& [metric, values] : samples.combined) {
    if (values.empty()) throw InputError("empty combined sample");
    switch (metric) {
      case Metric::kAcc: {
        std::string tag;
        const std::vector<double>* base = min_mean_acc(samples.baselines, &tag);
        if (!base) throw InputError("no baseline accuracy sample");
        verdict.reports.push_back(drop_report(metric, tag, *base, values,
                                              thresholds.acc_drop, stats));
        break;
      }
      case Metric::kWm: {
        std::string tag;
        const std::vector<double>* base =
            find_metric(samples.baselines, Metric::kWm, &tag);
        if (!base) throw InputError("no baseline trigger-accuracy sample");
        verdict.reports.push_back(drop_report(metric, tag, *base, values,
                                              thresholds.wm_drop, stats));
        break;
      }
      case Metric::kAdv: {
        std::string tag;
        const std::vector<double>* base =
            find_metric(samples.baselines, Metric::kAdv, &tag);
        if (!base) throw InputError("no baseline robust-accuracy sample");
        verdict.reports.push_back(drop_report(metric, tag, *base, values,
                                              thresholds.adv_drop, stats));
        break;
      }
      case Metric::kRad: {
        MetricReport r;
        r.metric = metric;
        r.combined_mean = mean_of(values);
        std::string tag;
        if (const std::vector<double>* base =
                find_metric(samples.baselines, Metric::kRad, &tag)) {
          r.baseline_tag = tag;
          r.baseline_mean = mean_of(*base);
          r.delta = r.baseline_mean - r.combined_mean;
        }
        r.conflict = r.combined_mean < thresholds.rad_min;
        r.detail = "mark score " + fmt(r.combined_mean) + " vs floor " +
                   fmt(thresholds.rad_min);
        verdict.reports.push_back(std::move(r));
        break;
      }
      case Metric::kDi: {
        MetricReport r;
        r.metric = metric;
        r.combined_mean = median_of(values);
        std::string tag;
        if (const std::vector<double>* base =
                find_metric(samples.baselines, Metric::kDi, &tag)) {
          r.baseline_tag = tag;
          r.baseline_mean = median_of(*base);
        }
        r.conflict = r.combined_mean > thresholds.di_p_max;
        r.detail = "median fingerprint p " + fmt(r.combined_mean) +
                   " vs ceiling " + fmt(thresholds.di_p_max);
        verdict.reports.push_back(std::move(r));
        break;
      }
      case Metric::kEpsilon: {
        MetricReport r;
        r.metric = metric;
        r.combined_mean = *std::max_element(values.begin(), values.end());
        if (std::isnan(samples.target_epsilon)) {
          throw InputError("epsilon sample without a configured target");
        }
        double cap = samples.target_epsilon * thresholds.epsilon_cap_factor;
        r.conflict = r.combined_mean > cap + 1e-9;
        r.detail = "spent epsilon " + fmt(r.combined_mean) + " vs cap " + fmt(cap);
        verdict.reports.push_back(std::move(r));
        break;
      }
    }
  }

  for (const MetricReport& r : verdict.reports) {
    verdict.conflict = verdict.conflict || r.conflict;
  }

  // Sanity bound on the accuracy of the combination against both
  // single-mechanism baselines, recorded but not itself a conflict.
  auto acc_it = samples.combined.find(Metric::kAcc);
  if (acc_it != samples.combined.end()) {
    std::vector<double> base_means;
    for (const auto& [name, metrics] : samples.baselines) {
      auto it = metrics.find(Metric::kAcc);
      if (it != metrics.end()) base_means.push_back(mean_of(it->second));
    }
    if (base_means.size() >= 2) {
      verdict.accuracy_bound_ok = check_accuracy_bound(
          mean_of(acc_it->second), base_means[0], base_means[1]);
    } else if (base_means.size() == 1) {
      verdict.accuracy_bound_ok =
          mean_of(acc_it->second) <= base_means[0] + 0.02;
    }
  }

  std::ostringstream s;
  s << samples.pair_name << " on " << samples.dataset << ": "
    << (verdict.conflict ? "conflict" : "no conflict");
  for (const MetricReport& r : verdict.reports) {
    if (r.conflict) s << "; " << r.detail;
  }
  verdict.summary = s.str();
  return verdict;
}

}  // namespace conflictbench
