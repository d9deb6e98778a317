// Copyright 2026 The ldp-testing Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ldp/chi2.hpp"

#include <cmath>
#include <stdexcept>

namespace ldp {

namespace {

constexpr int kMaxIterations = 500;
constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;

// Series expansion of P(a, x), converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < kMaxIterations; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x) = 1 - P(a, x), for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("regularized_gamma_p: a must be positive");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_continued_fraction(a, x);
}

double chi2_cdf(int k, double x) {
  if (k < 1) throw std::invalid_argument("chi2_cdf: degrees of freedom must be >= 1");
  if (x < 0.0) throw std::invalid_argument("chi2_cdf: x must be nonnegative");
  return regularized_gamma_p(0.5 * k, 0.5 * x);
}

double chi2_quantile(int k, double q) {
  if (k < 1) throw std::invalid_argument("chi2_quantile: degrees of freedom must be >= 1");
  if (q < 0.0 || q >= 1.0) throw std::invalid_argument("chi2_quantile: q must lie in [0, 1)");
  if (q == 0.0) return 0.0;

  // Bracket the root, then bisect and finish with Newton steps on the CDF.
  double lo = 0.0;
  double hi = static_cast<double>(k);
  while (chi2_cdf(k, hi) < q) hi *= 2.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(k, mid) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  const double half_k = 0.5 * k;
  const double log_norm = -half_k * std::log(2.0) - std::lgamma(half_k);
  for (int i = 0; i < 4; ++i) {
    const double pdf = std::exp(log_norm + (half_k - 1.0) * std::log(x) - 0.5 * x);
    if (pdf <= 0.0) break;
    const double step = (chi2_cdf(k, x) - q) / pdf;
    const double next = x - step;
    if (next <= lo || next >= hi) break;
    x = next;
  }
  return x;
}

Chi2Table::Chi2Table(int degrees_of_freedom) : dof_(degrees_of_freedom) {
  if (dof_ < 1) throw std::invalid_argument("Chi2Table: degrees of freedom must be >= 1");
}

double Chi2Table::cdf(double x) const { return chi2_cdf(dof_, x); }

double Chi2Table::quantile(double q) const {
  auto it = quantile_cache_.find(q);
  if (it != quantile_cache_.end()) return it->second;
  const double value = chi2_quantile(dof_, q);
  quantile_cache_.emplace(q, value);
  return value;
}

}  // namespace ldp
