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

#include <cmath>
#include <doctest.h>
#include <functional>

#include "ldp/mech_nonsymmetric.hpp"
#include "ldp/mle.hpp"

using ldp::NonSymLogLoss;
using ldp::NonSymmetricMechanism;
using ldp::NonSymUser;
using ldp::PatternBits;
using ldp::ProbVector;
using ldp::Rng;
using ldp::SignalHistogram;
using ldp::SymmetricLogLoss;
using ldp::SymmetricMechanism;
using ldp::Vector;

namespace {

ProbVector random_interior_point(int dim, Rng& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.unit() + 0.2;
  return ProbVector(v / v.sum());
}

// Central finite differences in ambient coordinates.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& p, double h = 1e-5) {
  Vector g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Vector hi = p;
    Vector lo = p;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

std::vector<NonSymUser> random_users(int dim, int count, double eta, const ProbVector& p, Rng& rng) {
  std::vector<NonSymUser> users;
  users.reserve(static_cast<std::size_t>(count));
  const auto types = ldp::sample_types(p, count, rng);
  for (int i = 0; i < count; ++i) {
    NonSymUser u{PatternBits::random(dim, rng), 0};
    const int likely = u.pattern.sign(types[static_cast<std::size_t>(i)]);
    u.y = rng.unit() < 0.5 + eta ? likely : -likely;
    users.push_back(std::move(u));
  }
  return users;
}

}  // namespace

TEST_CASE("symmetric loss closed forms") {
  const SymmetricMechanism mech(2, std::log(3.0));
  const auto hist = SignalHistogram::from_counts({5, 5});
  const SymmetricLogLoss loss(hist, mech);

  // Uniform counts at the uniform point: all gradient entries are equal, so
  // the projected direction vanishes.
  const Vector u2 = Vector::Constant(2, 0.5);
  const Vector g = loss.gradient(u2);
  CHECK(g(0) == doctest::Approx(g(1)).epsilon(1e-12));

  const Vector h = loss.hessian_diagonal(u2);
  CHECK(h(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h(1) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS(SymmetricLogLoss(hist, SymmetricMechanism(2, 0.0)));
}

TEST_CASE("symmetric gradient and hessian match finite differences") {
  Rng rng(101);
  const SymmetricMechanism mech(5, 0.7);
  const auto hist = SignalHistogram::from_counts({11, 3, 7, 19, 5});
  const SymmetricLogLoss loss(hist, mech);
  auto f = [&](const Vector& p) { return loss.value(p); };

  for (int trial = 0; trial < 100; ++trial) {
    const Vector p = random_interior_point(5, rng).weights();
    const Vector analytic = loss.gradient(p);
    CHECK((analytic - fd_gradient(f, p)).cwiseAbs().maxCoeff() < 1e-6);

    // Diagonal Hessian entries via second differences of the value.
    const double h = 1e-4;
    for (int i = 0; i < 5; ++i) {
      Vector hi = p, lo = p;
      hi(i) += h;
      lo(i) -= h;
      const double numeric = (f(hi) - 2.0 * f(p) + f(lo)) / (h * h);
      CHECK(loss.hessian_diagonal(p)(i) == doctest::Approx(numeric).epsilon(1e-4));
    }
  }
}

TEST_CASE("nonsymmetric loss value, gradient and convexity") {
  Rng rng(103);
  const double eta = 0.25;

  // A single all-plus user emitting +1 has the constant form 3/4.
  PatternBits all_plus(3);
  for (int i = 0; i < 3; ++i) all_plus.set_sign(i, 1);
  const std::vector<NonSymUser> single{{all_plus, 1}};
  const NonSymLogLoss constant_loss(single, eta);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector p = random_interior_point(3, rng).weights();
    CHECK(constant_loss.value(p) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  }

  const auto users = random_users(4, 300, eta, ProbVector::uniform(4), rng);
  const NonSymLogLoss loss(users, eta);
  auto f = [&](const Vector& p) { return loss.value(p); };

  for (int trial = 0; trial < 100; ++trial) {
    const Vector p = random_interior_point(4, rng).weights();
    CHECK((loss.gradient(p) - fd_gradient(f, p)).cwiseAbs().maxCoeff() < 1e-6);
  }

  // Midpoint convexity on random segment endpoints.
  for (int trial = 0; trial < 50; ++trial) {
    const Vector p = random_interior_point(4, rng).weights();
    const Vector q = random_interior_point(4, rng).weights();
    CHECK(f(0.5 * (p + q)) <= 0.5 * f(p) + 0.5 * f(q) + 1e-12);
  }
}

TEST_CASE("nonsymmetric gradient norm stays below 3 sqrt(T)") {
  Rng rng(107);
  for (int T : {3, 8, 16}) {
    const NonSymmetricMechanism mech(0.9);  // eta < 1/4
    const auto users = random_users(T, 500, mech.eta(), ProbVector::uniform(T), rng);
    const NonSymLogLoss loss(users, mech.eta());
    for (int trial = 0; trial < 30; ++trial) {
      const Vector p = ldp::simplex_project_raw(Vector::Random(T));
      CHECK(loss.gradient(p).norm() <= 3.0 * std::sqrt(static_cast<double>(T)) + 1e-9);
    }
  }
}

TEST_CASE("symmetric hessian quadratic form is nonnegative") {
  Rng rng(109);
  const SymmetricMechanism mech(6, 0.5);
  const auto hist = SignalHistogram::from_counts({4, 9, 2, 11, 6, 8});
  const SymmetricLogLoss loss(hist, mech);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector p = random_interior_point(6, rng).weights();
    const Vector h = loss.hessian_diagonal(p);
    const Vector dir = Vector::Random(6);
    CHECK((h.array() * dir.array().square()).sum() >= 0.0);
  }
}

TEST_CASE("closed form solution") {
  const SymmetricMechanism mech(2, std::log(3.0));

  const auto uniform = ldp::closed_form_symmetric(SignalHistogram::from_counts({5, 5}), mech);
  CHECK(uniform.in_simplex);
  CHECK(uniform.p_star(0) == doctest::Approx(0.5));

  const auto interior = ldp::closed_form_symmetric(SignalHistogram::from_counts({6, 4}), mech);
  CHECK(interior.in_simplex);
  CHECK(interior.p_star(0) == doctest::Approx(0.7));
  CHECK(interior.p_star(1) == doctest::Approx(0.3));

  // An extreme histogram pushes the candidate outside the simplex.
  const auto outside = ldp::closed_form_symmetric(SignalHistogram::from_counts({9, 1}), mech);
  CHECK(!outside.in_simplex);
  CHECK(outside.p_star(0) == doctest::Approx(1.3));
  CHECK(outside.p_star(1) == doctest::Approx(-0.3));

  CHECK_THROWS(ldp::closed_form_symmetric(SignalHistogram::from_counts({1, 1, 1}), mech));
}

TEST_CASE("pgd matches the closed form when that lies in the simplex") {
  const SymmetricMechanism mech(2, std::log(3.0));
  const SymmetricLogLoss loss(SignalHistogram::from_counts({6, 4}), mech);
  const auto report = ldp::pgd_solve(loss);
  CHECK(report.converged);
  CHECK(ldp::tv_distance(report.p_hat, (Vector(2) << 0.7, 0.3).finished()) < 1e-4);

  // Near-noiseless channel: the estimate approaches the empirical histogram.
  const SymmetricMechanism sharp(4, 18.0);
  const auto hist = SignalHistogram::from_counts({100, 200, 300, 400});
  const auto sharp_report = ldp::pgd_solve(SymmetricLogLoss(hist, sharp));
  CHECK(ldp::tv_distance(sharp_report.p_hat, hist.frequencies()) < 1e-3);
}

TEST_CASE("pgd on the nonsymmetric loss recovers the distribution") {
  Rng rng(113);
  const NonSymmetricMechanism mech(0.5);
  const auto users = random_users(5, 200000, mech.eta(), ProbVector::uniform(5), rng);
  const NonSymLogLoss loss(users, mech.eta());
  const auto report = ldp::pgd_solve(loss);
  CHECK(ldp::tv_distance(report.p_hat, Vector::Constant(5, 0.2)) <= 0.05);
}

TEST_CASE("pgd respects affine equality constraints") {
  const SymmetricMechanism mech(3, 1.0);
  const SymmetricLogLoss loss(SignalHistogram::from_counts({10, 20, 30}), mech);
  // Pin the first coordinate to 0.5.
  ldp::AffineEqualityConstraint constraint;
  constraint.lhs = Eigen::MatrixXd::Zero(1, 3);
  constraint.lhs(0, 0) = 1.0;
  constraint.rhs = Vector::Constant(1, 0.5);
  const auto report = ldp::pgd_solve(
      [&loss](const Eigen::Ref<const Vector>& p) { return loss.value(p); },
      [&loss](const Eigen::Ref<const Vector>& p) { return loss.gradient(p); }, 3, {}, constraint);
  CHECK(report.p_hat(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(report.p_hat.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.p_hat.minCoeff() >= -1e-12);
}

TEST_CASE("solver config validation") {
  const SymmetricMechanism mech(2, 1.0);
  const SymmetricLogLoss loss(SignalHistogram::from_counts({1, 1}), mech);
  ldp::SolverConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS(ldp::pgd_solve(loss, bad));
}

TEST_CASE("strong convexity estimate") {
  const SymmetricMechanism mech(2, std::log(3.0));
  const SymmetricLogLoss loss(SignalHistogram::from_counts({5, 5}), mech);
  CHECK(ldp::strong_convexity_estimate(loss) == doctest::Approx(0.2222222222).epsilon(1e-8));

  const SymmetricLogLoss degenerate(SignalHistogram::from_counts({10, 0}), mech);
  CHECK(ldp::strong_convexity_estimate(degenerate) == 0.0);

  // The bound dominates (eps^2/9) * min_x n_x / n on random instances.
  Rng rng(127);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 2 + static_cast<int>(rng.uniform_int(5));
    const double eps = 0.05 + 0.9 * rng.unit();
    std::vector<long long> counts;
    long long total = 0;
    long long min_count = 1 << 30;
    for (int x = 0; x < T; ++x) {
      counts.push_back(1 + rng.uniform_int(50));
      total += counts.back();
      min_count = std::min(min_count, counts.back());
    }
    const SymmetricLogLoss random_loss(SignalHistogram::from_counts(counts), SymmetricMechanism(T, eps));
    const double bound = ldp::strong_convexity_estimate(random_loss);
    CHECK(bound >= (eps * eps / 9.0) * static_cast<double>(min_count) / static_cast<double>(total) - 1e-15);
  }
}

TEST_CASE("statistical consistency of the symmetric mle") {
  // T = 5, eps = 0.5, n = 1e5: the estimate lands within TV 0.1 of the truth
  // in at least 18 of 20 seeded trials.
  int hits = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(900 + trial);
    Vector raw(5);
    for (int i = 0; i < 5; ++i) raw(i) = rng.unit() + 0.1;
    const ProbVector p(raw / raw.sum());
    const SymmetricMechanism mech(5, 0.5);
    const auto types = ldp::sample_types(p, 100000, rng);
    const auto signals = mech.randomize_all(types, rng);
    const auto hist = SignalHistogram::from_signals(5, signals);
    const auto report = ldp::pgd_solve(SymmetricLogLoss(hist, mech));
    if (ldp::tv_distance(report.p_hat, p.weights()) <= 0.1) ++hits;
  }
  CHECK(hits >= 18);
}
