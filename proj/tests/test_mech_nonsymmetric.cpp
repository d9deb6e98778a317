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

#include <Eigen/Dense>
#include <cmath>
#include <doctest.h>

#include "ldp/mech_nonsymmetric.hpp"

using ldp::Cohort;
using ldp::NonSymmetricMechanism;
using ldp::NonSymUser;
using ldp::PatternBits;
using ldp::ProbVector;
using ldp::Rng;
using ldp::ThetaEstimator;
using ldp::Vector;

TEST_CASE("mechanism bias eta") {
  const NonSymmetricMechanism flat(0.0);
  CHECK(flat.eta() == 0.0);
  const NonSymmetricMechanism mech(std::log(3.0));
  CHECK(mech.eta() == doctest::Approx(0.25).epsilon(1e-12));
  for (double eps : {0.1, 0.25, 0.5, 2.0}) {
    const NonSymmetricMechanism m(eps);
    CHECK(m.eta() > 0.0);
    CHECK(m.eta() < 0.5);
    CHECK(0.5 + m.eta() == doctest::Approx(std::exp(eps) / (1.0 + std::exp(eps))).epsilon(1e-12));
    // Per-signal likelihood ratio equals e^eps exactly.
    CHECK((0.5 + m.eta()) / (0.5 - m.eta()) == doctest::Approx(std::exp(eps)).epsilon(1e-9));
  }
}

TEST_CASE("pattern generation") {
  Rng rng(41);
  // Coordinatewise means vanish.
  const int trials = 100000;
  Eigen::ArrayXd sums = Eigen::ArrayXd::Zero(8);
  for (int i = 0; i < trials; ++i) {
    const PatternBits b = PatternBits::random(8, rng);
    for (int x = 0; x < 8; ++x) sums(x) += b.sign(x);
  }
  CHECK((sums / trials).abs().maxCoeff() <= 0.02);

  // One-coordinate patterns are fair coins.
  int plus = 0;
  for (int i = 0; i < 10000; ++i) plus += PatternBits::random(1, rng).sign(0) == 1 ? 1 : 0;
  CHECK(std::fabs(plus / 10000.0 - 0.5) < 0.02);

  // Distinct streams produce distinct wide patterns (collision odds 2^-T).
  for (int i = 0; i < 20; ++i) {
    Rng a = rng.derive(2 * i);
    Rng b = rng.derive(2 * i + 1);
    CHECK(!(PatternBits::random(64, a) == PatternBits::random(64, b)));
  }

  // Packing round-trips through words.
  const PatternBits original = PatternBits::random(70, rng);
  const PatternBits copy = PatternBits::from_words(70, original.words());
  CHECK(original == copy);
}

TEST_CASE("respond") {
  Rng rng(43);
  PatternBits b(4);
  b.set_sign(0, 1);
  b.set_sign(1, -1);
  b.set_sign(2, 1);
  b.set_sign(3, -1);

  // eta = 0 makes the signal a fair coin regardless of type.
  const NonSymmetricMechanism flat(0.0);
  int plus = 0;
  for (int i = 0; i < 20000; ++i) plus += flat.respond(b, 1, rng) == 1 ? 1 : 0;
  CHECK(std::fabs(plus / 20000.0 - 0.5) < 0.02);

  // eta = 1/4: the likely signal is sent with frequency 3/4.
  const NonSymmetricMechanism mech(std::log(3.0));
  int match = 0;
  for (int i = 0; i < 100000; ++i) match += mech.respond(b, 1, rng) == b.sign(1) ? 1 : 0;
  CHECK(std::fabs(match / 100000.0 - 0.75) < 0.01);

  // Large eps pins the signal to the pattern.
  const NonSymmetricMechanism sharp(30.0);
  for (int i = 0; i < 1000000; ++i) {
    if (sharp.respond(b, 2, rng) != b.sign(2)) FAIL("unexpected flip at eps = 30");
  }
}

TEST_CASE("contribution identity") {
  Rng rng(47);
  const double eta = 0.2;
  for (int trial = 0; trial < 50; ++trial) {
    NonSymUser user{PatternBits::random(6, rng), rng.sign_bernoulli(0.5)};
    const Vector v = contribution(user);
    for (int x = 0; x < 6; ++x) {
      CHECK(v(x) == user.y * user.pattern.sign(x));
      // (1/eta)(g^y(x) - 1/2) with g^y = 1/2 + eta*y*b reproduces y*b exactly.
      const double g = 0.5 + eta * user.y * user.pattern.sign(x);
      CHECK((g - 0.5) / eta == doctest::Approx(v(x)).epsilon(1e-12));
    }
    if (user.y == 1) {
      for (int x = 0; x < 6; ++x) CHECK(v(x) == user.pattern.sign(x));
    } else {
      for (int x = 0; x < 6; ++x) CHECK(v(x) == -user.pattern.sign(x));
    }
  }
}

TEST_CASE("contribution mean at the user's own type is 2 eta") {
  Rng rng(53);
  const NonSymmetricMechanism mech(std::log(3.0));  // eta = 1/4
  const int trials = 100000;
  double sum = 0.0;
  for (int i = 0; i < trials; ++i) {
    NonSymUser user{PatternBits::random(5, rng), 0};
    user.y = mech.respond(user.pattern, 3, rng);
    sum += user.y * user.pattern.sign(3);
  }
  CHECK(sum / trials == doctest::Approx(0.5).epsilon(0.05));  // 2 eta = 1/2
}

TEST_CASE("aggregate_theta") {
  PatternBits all_plus(3);
  for (int i = 0; i < 3; ++i) all_plus.set_sign(i, 1);
  const std::vector<NonSymUser> single{{all_plus, 1}};
  const ThetaEstimator est = ldp::aggregate_theta(single, 0.25);
  CHECK((est.theta - Vector::Ones(3)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS(ldp::aggregate_theta(std::vector<NonSymUser>{}, 0.25));
  CHECK_THROWS(ldp::aggregate_theta(single, 0.0));

  Rng rng(59);
  const NonSymmetricMechanism mech(std::log(3.0));
  std::vector<NonSymUser> users;
  for (int i = 0; i < 100000; ++i) {
    NonSymUser user{PatternBits::random(4, rng), 0};
    user.y = mech.respond(user.pattern, 1, rng);
    users.push_back(std::move(user));
  }
  const ThetaEstimator theta = ldp::aggregate_theta(users, mech.eta());
  CHECK(theta.theta.cwiseAbs().maxCoeff() <= 1.0);
  // All users share type 1, so theta/(2 eta) concentrates on e_1.
  const Vector scaled = theta.scaled();
  CHECK(scaled(1) == doctest::Approx(1.0).epsilon(0.05));
  for (int x : {0, 2, 3}) CHECK(std::fabs(scaled(x)) < 0.05);
}

TEST_CASE("unbiasedness over mechanism randomness") {
  Rng rng(61);
  const double eta = 0.1;
  const int n = 100;
  const int resamplings = 10000;
  // Fixed type assignment: 40 of type 0, 35 of type 1, 25 of type 2.
  std::vector<int> types;
  types.insert(types.end(), 40, 0);
  types.insert(types.end(), 35, 1);
  types.insert(types.end(), 25, 2);
  const Vector f = (Vector(3) << 0.40, 0.35, 0.25).finished();

  Vector mean = Vector::Zero(3);
  for (int r = 0; r < resamplings; ++r) {
    std::vector<NonSymUser> users;
    users.reserve(n);
    for (int i = 0; i < n; ++i) {
      NonSymUser u{PatternBits::random(3, rng), 0};
      const int likely = u.pattern.sign(types[static_cast<std::size_t>(i)]);
      u.y = rng.unit() < 0.5 + eta ? likely : -likely;
      users.push_back(std::move(u));
    }
    mean += ldp::aggregate_theta(users, eta).theta;
  }
  mean /= resamplings;
  const double bound = 4.0 * std::sqrt(std::log(3.0) / n);
  CHECK((mean - 2.0 * eta * f).cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("per-coordinate variance is at most 1.1/n") {
  Rng rng(67);
  const double eta = 0.12;
  const int n = 400;
  const int resamplings = 4000;
  std::vector<int> types;
  for (int i = 0; i < n; ++i) types.push_back(i % 5);

  Eigen::MatrixXd samples(resamplings, 5);
  for (int r = 0; r < resamplings; ++r) {
    std::vector<NonSymUser> users;
    users.reserve(n);
    for (int i = 0; i < n; ++i) {
      NonSymUser u{PatternBits::random(5, rng), 0};
      const int likely = u.pattern.sign(types[static_cast<std::size_t>(i)]);
      u.y = rng.unit() < 0.5 + eta ? likely : -likely;
      users.push_back(std::move(u));
    }
    samples.row(r) = ldp::aggregate_theta(users, eta).theta.transpose();
  }
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  for (int x = 0; x < 5; ++x) {
    const double var = (samples.col(x).array() - mean(x)).square().sum() / (resamplings - 1);
    CHECK(var <= 1.1 / n);
  }
}

TEST_CASE("simulate_cohort") {
  const ProbVector point = ProbVector::point_mass(4, 2);
  const NonSymmetricMechanism sharp(20.0);
  Rng rng(71);
  Vector freq;
  const Cohort cohort = ldp::simulate_cohort(point, 100000, sharp, rng, &freq);
  CHECK(cohort.users.size() == 100000);
  CHECK(freq(2) == doctest::Approx(1.0));
  const ThetaEstimator theta = ldp::aggregate_theta(cohort.users, sharp.eta());
  CHECK(theta.scaled()(2) == doctest::Approx(1.0).epsilon(0.05));

  Rng one(73);
  CHECK(ldp::simulate_cohort(point, 1, NonSymmetricMechanism(0.5), one).users.size() == 1);

  // Same seed, same cohort.
  Rng r1(75);
  Rng r2(75);
  const Cohort a = ldp::simulate_cohort(ProbVector::uniform(3), 200, NonSymmetricMechanism(0.5), r1);
  const Cohort b = ldp::simulate_cohort(ProbVector::uniform(3), 200, NonSymmetricMechanism(0.5), r2);
  for (std::size_t i = 0; i < a.users.size(); ++i) {
    CHECK(a.users[i].pattern == b.users[i].pattern);
    CHECK(a.users[i].y == b.users[i].y);
  }
}

TEST_CASE("restricted Gram matrix stays strongly curved") {
  // At T = 5 and n = 1e5 the empirical second-moment matrix of the g^y rows,
  // restricted to the subspace orthogonal to the all-ones vector, keeps its
  // smallest Rayleigh quotient above eta^2 / 2.
  Rng rng(79);
  const int T = 5;
  const long long n = 100000;
  const NonSymmetricMechanism mech(0.5);
  const double eta = mech.eta();
  const ProbVector p = ProbVector::uniform(T);
  Vector freq;
  const Cohort cohort = ldp::simulate_cohort(p, n, mech, rng, &freq);

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(T, T);
  for (const NonSymUser& u : cohort.users) {
    Vector g(T);
    for (int x = 0; x < T; ++x) g(x) = 0.5 + eta * u.y * u.pattern.sign(x);
    gram.noalias() += g * g.transpose();
  }
  gram /= static_cast<double>(n);

  // Orthonormal basis of the subspace orthogonal to the all-ones vector.
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(T, T) -
                          Eigen::MatrixXd::Constant(T, T, 1.0 / T);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis, Eigen::ComputeThinU);
  Eigen::MatrixXd u_basis = svd.matrixU().leftCols(T - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(u_basis.transpose() * gram * u_basis);
  CHECK(eig.eigenvalues().minCoeff() >= eta * eta / 2.0);
}
