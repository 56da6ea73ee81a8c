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

#ifndef CONFLICTBENCH_STATS_HPP_
#define CONFLICTBENCH_STATS_HPP_

#include <cstddef>
#include <vector>

namespace conflictbench {

double mean_of(const std::vector<double>& v);
// Sample variance with the n-1 denominator; 0 when n < 2.
double sample_var(const std::vector<double>& v);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

// CDF of Student's t with (possibly fractional) df degrees of freedom.
double student_t_cdf(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided unless noted by the caller
  double mean_a = 0.0;
  double mean_b = 0.0;
  bool degenerate = false;  // both samples had zero variance
};

// Welch's unequal-variance t-test on two samples (each needs >= 2 values).
// Zero-variance conventions: both zero and equal means -> t = 0, p = 1;
// both zero and unequal means -> p = 0 with the degenerate flag set.
WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b);

// One-sided p for the alternative mean(a) > mean(b).
double welch_p_greater(const std::vector<double>& a, const std::vector<double>& b);

struct TostResult {
  double p_lower = 1.0;
  double p_upper = 1.0;
  bool equivalent = false;
};

// Two one-sided Welch tests against the interval [-bound, +bound] on
// mean(a) - mean(b); equivalent when max(p_lower, p_upper) < alpha.
TostResult tost_equivalence(const std::vector<double>& a,
                            const std::vector<double>& b, double bound,
                            double alpha);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_STATS_HPP_
