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

#include "ldp/mech_nonsymmetric.hpp"

#include <cmath>
#include <stdexcept>

namespace ldp {

PatternBits::PatternBits(int size) : size_(size) {
  if (size_ < 1) throw std::invalid_argument("PatternBits: size must be positive");
  words_.assign(static_cast<std::size_t>((size_ + 63) / 64), 0);
}

PatternBits PatternBits::random(int size, Rng& rng) {
  PatternBits p(size);
  for (std::size_t w = 0; w < p.words_.size(); ++w) p.words_[w] = rng.bits();
  const int tail = size % 64;
  if (tail != 0) p.words_.back() &= (std::uint64_t{1} << tail) - 1;
  return p;
}

void PatternBits::set_sign(int i, int sign) {
  if (i < 0 || i >= size_) throw std::out_of_range("PatternBits: index out of range");
  if (sign != 1 && sign != -1) throw std::invalid_argument("PatternBits: sign must be +1 or -1");
  const std::uint64_t mask = std::uint64_t{1} << (static_cast<unsigned>(i) & 63u);
  if (sign == 1) {
    words_[static_cast<std::size_t>(i) >> 6] |= mask;
  } else {
    words_[static_cast<std::size_t>(i) >> 6] &= ~mask;
  }
}

double PatternBits::signed_dot(const Eigen::Ref<const Vector>& v) const {
  if (v.size() != size_) throw std::invalid_argument("PatternBits: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < size_; ++i) acc += sign(i) * v(i);
  return acc;
}

PatternBits PatternBits::from_words(int size, std::vector<std::uint64_t> words) {
  PatternBits p(size);
  if (words.size() != p.words_.size()) throw std::invalid_argument("PatternBits: word count mismatch");
  p.words_ = std::move(words);
  const int tail = size % 64;
  if (tail != 0) p.words_.back() &= (std::uint64_t{1} << tail) - 1;
  return p;
}

NonSymmetricMechanism::NonSymmetricMechanism(double epsilon) : epsilon_(epsilon) {
  if (epsilon_ < 0.0) throw std::invalid_argument("NonSymmetricMechanism: epsilon must be nonnegative");
  const double e = std::exp(epsilon_);
  eta_ = (e - 1.0) / (2.0 * (e + 1.0));
}

int NonSymmetricMechanism::respond(const PatternBits& pattern, int x, Rng& rng) const {
  if (x < 0 || x >= pattern.size()) throw std::out_of_range("respond: type out of range");
  const int likely = pattern.sign(x);
  return rng.unit() < 0.5 + eta_ ? likely : -likely;
}

Vector contribution(const NonSymUser& user) {
  Vector v(user.pattern.size());
  for (int i = 0; i < user.pattern.size(); ++i) v(i) = user.y * user.pattern.sign(i);
  return v;
}

ThetaEstimator aggregate_theta(std::span<const NonSymUser> users, double eta) {
  if (users.empty()) throw std::invalid_argument("aggregate_theta: empty user sequence");
  if (eta <= 0.0) throw std::invalid_argument("aggregate_theta: eta must be positive");
  const int dim = users[0].pattern.size();
  std::vector<long long> plus(static_cast<std::size_t>(dim), 0);
  for (const NonSymUser& u : users) {
    if (u.pattern.size() != dim) throw std::invalid_argument("aggregate_theta: pattern size mismatch");
    if (u.y != 1 && u.y != -1) throw std::invalid_argument("aggregate_theta: signal must be +1 or -1");
    for (int i = 0; i < dim; ++i) {
      // y * b(i) == +1 iff the sign bits agree.
      if (u.pattern.sign(i) == u.y) ++plus[static_cast<std::size_t>(i)];
    }
  }
  ThetaEstimator est;
  est.n = static_cast<long long>(users.size());
  est.eta = eta;
  est.theta.resize(dim);
  for (int i = 0; i < dim; ++i) {
    est.theta(i) = static_cast<double>(2 * plus[static_cast<std::size_t>(i)] - est.n) / static_cast<double>(est.n);
  }
  return est;
}

Cohort simulate_cohort(const ProbVector& p, long long n, const NonSymmetricMechanism& mech, Rng& rng,
                       Vector* type_frequency) {
  if (n < 1) throw std::invalid_argument("simulate_cohort: n must be positive");
  Cohort cohort;
  cohort.domain_size = p.dim();
  cohort.epsilon = mech.epsilon();
  cohort.users.reserve(static_cast<std::size_t>(n));

  std::vector<long long> counts(static_cast<std::size_t>(p.dim()), 0);
  std::vector<double> cumulative(static_cast<std::size_t>(p.dim()));
  double acc = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    acc += p(i);
    cumulative[static_cast<std::size_t>(i)] = acc;
  }
  cumulative.back() = 1.0;

  for (long long i = 0; i < n; ++i) {
    const double u = rng.unit();
    int x = 0;
    while (cumulative[static_cast<std::size_t>(x)] <= u) ++x;
    ++counts[static_cast<std::size_t>(x)];
    NonSymUser user{PatternBits::random(p.dim(), rng), 0};
    user.y = mech.respond(user.pattern, x, rng);
    cohort.users.push_back(std::move(user));
  }

  if (type_frequency != nullptr) {
    type_frequency->resize(p.dim());
    for (int i = 0; i < p.dim(); ++i) {
      (*type_frequency)(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(n);
    }
  }
  return cohort;
}

ThetaEstimator aggregate_theta(const Cohort& cohort) {
  const NonSymmetricMechanism mech(cohort.epsilon);
  return aggregate_theta(std::span<const NonSymUser>(cohort.users), mech.eta());
}

}  // namespace ldp
