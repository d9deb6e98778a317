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

#ifndef LDP_MECH_SYMMETRIC_HPP_
#define LDP_MECH_SYMMETRIC_HPP_

#include <span>
#include <vector>

#include "ldp/prob.hpp"
#include "ldp/rng.hpp"

namespace ldp {

// Classic randomized response over signal alphabet S = X: a user of type x
// emits x with probability rho + gamma and any other fixed signal with
// probability rho, where rho = 1/(T-1+e^eps) and gamma = (e^eps-1)/(T-1+e^eps).
// The induced channel matrix is G = rho * ones + gamma * I, and it carries a
// type distribution p to the signal distribution phi(p) = rho + gamma * p(x).
class SymmetricMechanism {
 public:
  SymmetricMechanism(int domain_size, double epsilon);

  int domain_size() const { return domain_size_; }
  double epsilon() const { return epsilon_; }
  double rho() const { return rho_; }
  double gamma() const { return gamma_; }

  // The affine signal map; fixes the uniform distribution.
  Vector phi(const Eigen::Ref<const Vector>& p) const;
  ProbVector phi(const ProbVector& p) const;

  // Inverse of phi: (q - rho)/gamma. Valid for any vector; feeding it an
  // empirical frequency vector may produce a point outside the simplex, and
  // callers decide whether to project. Requires gamma > 0.
  Vector phi_inverse(const Eigen::Ref<const Vector>& q) const;

  // One signal draw for a user of type x, O(1) per datum.
  int randomize(int x, Rng& rng) const;
  std::vector<int> randomize_all(std::span<const int> types, Rng& rng) const;

 private:
  int domain_size_;
  double epsilon_;
  double rho_;
  double gamma_;
};

// Per-feature signal marginal map: (1-gamma)/Tj + gamma * pj(x), the image of
// a feature marginal under the channel projected onto that feature.
Vector phi_marginal(double gamma, const Eigen::Ref<const Vector>& feature_marginal);
Vector phi_marginal(const SymmetricMechanism& mech, const Eigen::Ref<const Vector>& feature_marginal);

// Applies (1/gamma)(I - ((1-gamma)/Tj) * ones) to an estimated signal
// marginal; inverts phi_marginal whenever the estimate sums to one.
Vector invert_marginal_estimate(double gamma, const Eigen::Ref<const Vector>& estimate);

// Exact signal counts <n_s> over S = X.
struct SignalHistogram {
  std::vector<long long> counts;
  long long total = 0;

  static SignalHistogram from_signals(int domain_size, std::span<const int> signals);
  static SignalHistogram from_counts(std::vector<long long> counts);

  int alphabet_size() const { return static_cast<int>(counts.size()); }
  // Empirical signal frequencies <n_s/n>.
  Vector frequencies() const;
};

}  // namespace ldp

#endif  // LDP_MECH_SYMMETRIC_HPP_
