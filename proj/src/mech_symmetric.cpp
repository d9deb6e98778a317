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

#include "ldp/mech_symmetric.hpp"

#include <cmath>
#include <stdexcept>

namespace ldp {

SymmetricMechanism::SymmetricMechanism(int domain_size, double epsilon)
    : domain_size_(domain_size), epsilon_(epsilon) {
  if (domain_size_ < 1) throw std::invalid_argument("SymmetricMechanism: domain size must be positive");
  if (epsilon_ < 0.0) throw std::invalid_argument("SymmetricMechanism: epsilon must be nonnegative");
  const double e = std::exp(epsilon_);
  rho_ = 1.0 / (domain_size_ - 1 + e);
  gamma_ = (e - 1.0) / (domain_size_ - 1 + e);
}

Vector SymmetricMechanism::phi(const Eigen::Ref<const Vector>& p) const {
  if (p.size() != domain_size_) throw std::invalid_argument("phi: dimension mismatch");
  return (rho_ + gamma_ * p.array()).matrix();
}

ProbVector SymmetricMechanism::phi(const ProbVector& p) const {
  return ProbVector(phi(p.weights()));
}

Vector SymmetricMechanism::phi_inverse(const Eigen::Ref<const Vector>& q) const {
  if (q.size() != domain_size_) throw std::invalid_argument("phi_inverse: dimension mismatch");
  if (gamma_ <= 0.0) throw std::domain_error("phi_inverse: channel is non-invertible at epsilon = 0");
  return ((q.array() - rho_) / gamma_).matrix();
}

int SymmetricMechanism::randomize(int x, Rng& rng) const {
  if (x < 0 || x >= domain_size_) throw std::out_of_range("randomize: type out of range");
  if (domain_size_ == 1) return x;
  const double keep = rho_ + gamma_;
  const double u = rng.unit();
  if (u < keep) return x;
  // Remaining mass is uniform over the other T-1 signals.
  int other = static_cast<int>((u - keep) / rho_);
  if (other >= domain_size_ - 1) other = domain_size_ - 2;
  return other < x ? other : other + 1;
}

std::vector<int> SymmetricMechanism::randomize_all(std::span<const int> types, Rng& rng) const {
  std::vector<int> signals(types.size());
  for (std::size_t i = 0; i < types.size(); ++i) signals[i] = randomize(types[i], rng);
  return signals;
}

Vector phi_marginal(double gamma, const Eigen::Ref<const Vector>& feature_marginal) {
  const double dim = static_cast<double>(feature_marginal.size());
  return ((1.0 - gamma) / dim + gamma * feature_marginal.array()).matrix();
}

Vector phi_marginal(const SymmetricMechanism& mech, const Eigen::Ref<const Vector>& feature_marginal) {
  return phi_marginal(mech.gamma(), feature_marginal);
}

Vector invert_marginal_estimate(double gamma, const Eigen::Ref<const Vector>& estimate) {
  if (gamma <= 0.0) throw std::domain_error("invert_marginal_estimate: gamma must be positive");
  const double dim = static_cast<double>(estimate.size());
  const double mass = estimate.sum();
  return ((estimate.array() - (1.0 - gamma) / dim * mass) / gamma).matrix();
}

SignalHistogram SignalHistogram::from_signals(int domain_size, std::span<const int> signals) {
  SignalHistogram hist;
  hist.counts.assign(static_cast<std::size_t>(domain_size), 0);
  for (int s : signals) {
    if (s < 0 || s >= domain_size) throw std::out_of_range("SignalHistogram: signal out of range");
    ++hist.counts[static_cast<std::size_t>(s)];
  }
  hist.total = static_cast<long long>(signals.size());
  return hist;
}

SignalHistogram SignalHistogram::from_counts(std::vector<long long> counts) {
  SignalHistogram hist;
  hist.total = 0;
  for (long long c : counts) {
    if (c < 0) throw std::invalid_argument("SignalHistogram: negative count");
    hist.total += c;
  }
  hist.counts = std::move(counts);
  return hist;
}

Vector SignalHistogram::frequencies() const {
  if (total == 0) throw std::domain_error("SignalHistogram: frequencies of an empty histogram");
  Vector f(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    f(static_cast<Eigen::Index>(i)) = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return f;
}

}  // namespace ldp
