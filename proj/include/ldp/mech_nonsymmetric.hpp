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

#ifndef LDP_MECH_NONSYMMETRIC_HPP_
#define LDP_MECH_NONSYMMETRIC_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ldp/prob.hpp"
#include "ldp/rng.hpp"

namespace ldp {

// Per-user sign pattern b in {-1,+1}^T, stored as packed bits (bit set means
// +1). b(x) = +1 marks signal "1" as the likely signal for type x.
class PatternBits {
 public:
  explicit PatternBits(int size);

  // Each coordinate independently uniform on {-1,+1}.
  static PatternBits random(int size, Rng& rng);

  int size() const { return size_; }
  int sign(int i) const {
    return (words_[static_cast<std::size_t>(i) >> 6] >> (static_cast<unsigned>(i) & 63u)) & 1u ? 1 : -1;
  }
  void set_sign(int i, int sign);

  // Sum_x b(x) * v(x).
  double signed_dot(const Eigen::Ref<const Vector>& v) const;

  const std::vector<std::uint64_t>& words() const { return words_; }
  static PatternBits from_words(int size, std::vector<std::uint64_t> words);

  bool operator==(const PatternBits& other) const {
    return size_ == other.size_ && words_ == other.words_;
  }

 private:
  int size_;
  std::vector<std::uint64_t> words_;
};

// Two-signal mechanism: every user gets a fresh random pattern and emits
// y = b(x) with probability 1/2 + eta, where 1/2 + eta = e^eps/(1+e^eps).
class NonSymmetricMechanism {
 public:
  explicit NonSymmetricMechanism(double epsilon);

  double epsilon() const { return epsilon_; }
  double eta() const { return eta_; }

  // Signal for a user with pattern b and type x, in {-1,+1}.
  int respond(const PatternBits& pattern, int x, Rng& rng) const;

 private:
  double epsilon_;
  double eta_;
};

// One user's public pattern and emitted signal.
struct NonSymUser {
  PatternBits pattern;
  int y = 1;  // in {-1,+1}
};

// The per-user estimator summand: y * b, which equals (1/eta)(g^y - 1/2).
Vector contribution(const NonSymUser& user);

// Aggregate estimator theta = (1/n) sum_i y_i * b_i. Entries are averages of
// signs, hence in [-1,1]; the sum is accumulated in integers so the result is
// independent of user order. Requires eta > 0 (otherwise theta is undefined).
struct ThetaEstimator {
  Vector theta;
  long long n = 0;
  double eta = 0.0;

  // theta / (2 eta), the estimate of the type-frequency vector; may leave the
  // simplex and is deliberately not projected.
  Vector scaled() const { return theta / (2.0 * eta); }
};

ThetaEstimator aggregate_theta(std::span<const NonSymUser> users, double eta);

struct Cohort {
  int domain_size = 0;
  double epsilon = 0.0;
  std::vector<NonSymUser> users;
};

// Draws n types i.i.d. from p, a fresh pattern per user and one signal per
// user. When type_frequency is non-null the hidden empirical type-frequency
// vector is written there; that diagnostic is for test harnesses only and is
// never available through tester-facing files.
Cohort simulate_cohort(const ProbVector& p, long long n, const NonSymmetricMechanism& mech, Rng& rng,
                       Vector* type_frequency = nullptr);

ThetaEstimator aggregate_theta(const Cohort& cohort);

}  // namespace ldp

#endif  // LDP_MECH_NONSYMMETRIC_HPP_
