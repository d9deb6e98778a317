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

#ifndef LDP_CHI2_HPP_
#define LDP_CHI2_HPP_

#include <map>

namespace ldp {

// Regularized lower incomplete gamma P(a, x), series for x < a+1 and a
// continued fraction otherwise.
double regularized_gamma_p(double a, double x);

// Chi-square CDF with k degrees of freedom: P(k/2, x/2).
double chi2_cdf(int k, double x);

// Inverse of chi2_cdf, accurate to 1e-6 absolute or better. q must lie in
// [0, 1); q = 0 maps to 0 and q = 1 is rejected (unbounded).
double chi2_quantile(int k, double q);

// Chi-square distribution with memoized quantiles for repeated thresholding.
class Chi2Table {
 public:
  explicit Chi2Table(int degrees_of_freedom);

  int degrees_of_freedom() const { return dof_; }
  double cdf(double x) const;
  double quantile(double q) const;

 private:
  int dof_;
  mutable std::map<double, double> quantile_cache_;
};

}  // namespace ldp

#endif  // LDP_CHI2_HPP_
