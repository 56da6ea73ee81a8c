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

#include "conflictbench/stats.hpp"

#include <cmath>
#include <limits>

#include "conflictbench/errors.hpp"

namespace conflictbench {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw InputError("mean of an empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  // The continued fraction converges fast for x below the distribution bulk;
  // use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw InputError("student t needs positive degrees of freedom");
  if (std::isnan(t)) throw InputError("student t of NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  if (t == 0.0) return 0.5;
  double x = df / (df + t * t);
  double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);  // P(|T| >= |t|) / 2
  return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw InputError("welch test needs at least two values per sample");
  }
  WelchResult r;
  r.mean_a = mean_of(a);
  r.mean_b = mean_of(b);
  double va = sample_var(a), vb = sample_var(b);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    // No within-sample variation at all: equality is decided exactly.
    r.df = na + nb - 2.0;
    if (r.mean_a == r.mean_b) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = r.mean_a > r.mean_b ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
      r.degenerate = true;
    }
    return r;
  }
  r.t = (r.mean_a - r.mean_b) / std::sqrt(se2);
  double num = se2 * se2;
  double den = (va / na) * (va / na) / (na - 1.0) +
               (vb / nb) * (vb / nb) / (nb - 1.0);
  r.df = num / den;
  r.p = 2.0 * (1.0 - student_t_cdf(std::fabs(r.t), r.df));
  return r;
}

double welch_p_greater(const std::vector<double>& a, const std::vector<double>& b) {
  WelchResult r = welch_t(a, b);
  if (std::isinf(r.t)) return r.t > 0 ? 0.0 : 1.0;
  return 1.0 - student_t_cdf(r.t, r.df);
}

TostResult tost_equivalence(const std::vector<double>& a,
                            const std::vector<double>& b, double bound,
                            double alpha) {
  if (!(bound > 0.0)) throw InputError("equivalence bound must be positive");
  if (a.size() < 2 || b.size() < 2) {
    throw InputError("equivalence test needs at least two values per sample");
  }
  double ma = mean_of(a), mb = mean_of(b);
  double diff = ma - mb;
  double va = sample_var(a), vb = sample_var(b);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double se2 = va / na + vb / nb;
  TostResult r;
  if (se2 == 0.0) {
    // Point comparison: each one-sided hypothesis is decided exactly.
    r.p_lower = diff > -bound ? 0.0 : (diff == -bound ? 0.5 : 1.0);
    r.p_upper = diff < bound ? 0.0 : (diff == bound ? 0.5 : 1.0);
  } else {
    double se = std::sqrt(se2);
    double num = se2 * se2;
    double den = (va / na) * (va / na) / (na - 1.0) +
                 (vb / nb) * (vb / nb) / (nb - 1.0);
    double df = num / den;
    // H0_lower: diff <= -bound, rejected for large (diff + bound) / se.
    r.p_lower = 1.0 - student_t_cdf((diff + bound) / se, df);
    // H0_upper: diff >= +bound, rejected for small (diff - bound) / se.
    r.p_upper = student_t_cdf((diff - bound) / se, df);
  }
  r.equivalent = std::max(r.p_lower, r.p_upper) < alpha;
  return r;
}

}  // namespace conflictbench
