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

#include "ldp/mle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ldp {

SymmetricLogLoss::SymmetricLogLoss(SignalHistogram histogram, SymmetricMechanism mech)
    : histogram_(std::move(histogram)), mech_(std::move(mech)) {
  if (histogram_.alphabet_size() != mech_.domain_size()) {
    throw std::invalid_argument("SymmetricLogLoss: histogram alphabet does not match the mechanism");
  }
  if (histogram_.total <= 0) throw std::invalid_argument("SymmetricLogLoss: empty histogram");
  if (mech_.gamma() <= 0.0) {
    throw std::domain_error("SymmetricLogLoss: loss is constant at epsilon = 0");
  }
}

double SymmetricLogLoss::value(const Eigen::Ref<const Vector>& p) const {
  if (p.size() != dim()) throw std::invalid_argument("SymmetricLogLoss: dimension mismatch");
  const double n = static_cast<double>(histogram_.total);
  double acc = 0.0;
  for (int x = 0; x < dim(); ++x) {
    const long long nx = histogram_.counts[static_cast<std::size_t>(x)];
    if (nx == 0) continue;  // zero-count signals contribute nothing
    acc -= static_cast<double>(nx) * std::log(mech_.rho() + mech_.gamma() * p(x));
  }
  return acc / n;
}

Vector SymmetricLogLoss::gradient(const Eigen::Ref<const Vector>& p) const {
  if (p.size() != dim()) throw std::invalid_argument("SymmetricLogLoss: dimension mismatch");
  const double n = static_cast<double>(histogram_.total);
  Vector g = Vector::Zero(dim());
  for (int x = 0; x < dim(); ++x) {
    const long long nx = histogram_.counts[static_cast<std::size_t>(x)];
    if (nx == 0) continue;
    g(x) = -mech_.gamma() * static_cast<double>(nx) / (n * (mech_.rho() + mech_.gamma() * p(x)));
  }
  return g;
}

Vector SymmetricLogLoss::hessian_diagonal(const Eigen::Ref<const Vector>& p) const {
  if (p.size() != dim()) throw std::invalid_argument("SymmetricLogLoss: dimension mismatch");
  const double n = static_cast<double>(histogram_.total);
  const double g2 = mech_.gamma() * mech_.gamma();
  Vector h = Vector::Zero(dim());
  for (int x = 0; x < dim(); ++x) {
    const long long nx = histogram_.counts[static_cast<std::size_t>(x)];
    if (nx == 0) continue;
    const double form = mech_.rho() + mech_.gamma() * p(x);
    h(x) = g2 * static_cast<double>(nx) / (n * form * form);
  }
  return h;
}

NonSymLogLoss::NonSymLogLoss(std::span<const NonSymUser> users, double eta) : eta_(eta) {
  if (users.empty()) throw std::invalid_argument("NonSymLogLoss: empty user sequence");
  if (eta_ <= 0.0 || eta_ >= 0.5) throw std::invalid_argument("NonSymLogLoss: eta must lie in (0, 1/2)");
  dim_ = users[0].pattern.size();
  n_ = static_cast<long long>(users.size());

  std::map<std::vector<std::uint64_t>, long long> groups;
  for (const NonSymUser& u : users) {
    if (u.pattern.size() != dim_) throw std::invalid_argument("NonSymLogLoss: pattern size mismatch");
    // Key on the sign vector y*b: flip pattern bits when y = -1.
    std::vector<std::uint64_t> key = u.pattern.words();
    if (u.y == -1) {
      for (auto& w : key) w = ~w;
      const int tail = dim_ % 64;
      if (tail != 0) key.back() &= (std::uint64_t{1} << tail) - 1;
    }
    ++groups[std::move(key)];
  }
  group_signs_.reserve(groups.size());
  group_counts_.reserve(groups.size());
  for (const auto& [key, count] : groups) {
    Vector signs(dim_);
    for (int i = 0; i < dim_; ++i) {
      signs(i) = (key[static_cast<std::size_t>(i) >> 6] >> (static_cast<unsigned>(i) & 63u)) & 1u ? 1.0 : -1.0;
    }
    group_signs_.push_back(std::move(signs));
    group_counts_.push_back(count);
  }
}

double NonSymLogLoss::value(const Eigen::Ref<const Vector>& p) const {
  double v = 0.0;
  value_and_gradient(p, &v, nullptr);
  return v;
}

Vector NonSymLogLoss::gradient(const Eigen::Ref<const Vector>& p) const {
  Vector g;
  value_and_gradient(p, nullptr, &g);
  return g;
}

void NonSymLogLoss::value_and_gradient(const Eigen::Ref<const Vector>& p, double* value, Vector* gradient) const {
  if (p.size() != dim_) throw std::invalid_argument("NonSymLogLoss: dimension mismatch");
  const double mass = p.sum();
  double acc = 0.0;
  if (gradient != nullptr) *gradient = Vector::Zero(dim_);
  for (std::size_t g = 0; g < group_signs_.size(); ++g) {
    const Vector& signs = group_signs_[g];
    const double count = static_cast<double>(group_counts_[g]);
    // g^y' p = (1/2) sum(p) + eta * (y b)' p.
    const double form = 0.5 * mass + eta_ * signs.dot(p);
    if (form <= 0.0) throw std::domain_error("NonSymLogLoss: nonpositive linear form");
    if (value != nullptr) acc -= count * std::log(form);
    if (gradient != nullptr) {
      gradient->noalias() -= (count / form) * (0.5 * Vector::Ones(dim_) + eta_ * signs);
    }
  }
  const double n = static_cast<double>(n_);
  if (value != nullptr) *value = acc / n;
  if (gradient != nullptr) *gradient /= n;
}

namespace {

Vector project_feasible(const Eigen::Ref<const Vector>& v,
                        const std::optional<AffineEqualityConstraint>& constraint) {
  if (!constraint.has_value()) return simplex_project_raw(v);
  // Alternating projections between the simplex and the affine subspace.
  const Eigen::MatrixXd& A = constraint->lhs;
  const Vector& b = constraint->rhs;
  const Eigen::MatrixXd gram = A * A.transpose();
  const auto solver = gram.ldlt();
  Vector x = v;
  for (int round = 0; round < 1000; ++round) {
    Vector on_simplex = simplex_project_raw(x);
    Vector residual = A * on_simplex - b;
    Vector on_affine = on_simplex - A.transpose() * solver.solve(residual);
    const double movement = (on_affine - x).norm();
    x = std::move(on_affine);
    if (movement < 1e-12) break;
  }
  return simplex_project_raw(x);
}

}  // namespace

SolverReport pgd_solve(const std::function<double(const Eigen::Ref<const Vector>&)>& loss_value,
                       const std::function<Vector(const Eigen::Ref<const Vector>&)>& loss_gradient,
                       int dim, const SolverConfig& config,
                       const std::optional<AffineEqualityConstraint>& constraint) {
  if (dim < 1) throw std::invalid_argument("pgd_solve: dimension must be positive");
  if (config.max_iterations < 1 || config.initial_step <= 0.0 || config.step_decay <= 0.0 ||
      config.step_decay >= 1.0 || config.tolerance <= 0.0) {
    throw std::invalid_argument("pgd_solve: invalid solver configuration");
  }

  SolverReport report;
  Vector p = project_feasible(Vector::Constant(dim, 1.0 / dim), constraint);
  double value = loss_value(p);
  double step = config.initial_step;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const Vector grad = loss_gradient(p);

    // Backtrack until the candidate satisfies sufficient decrease.
    Vector candidate;
    double candidate_value = 0.0;
    bool accepted = false;
    while (step > 1e-18) {
      candidate = project_feasible(p - step * grad, constraint);
      candidate_value = loss_value(candidate);
      const Vector delta = candidate - p;
      // Armijo rule along the projection arc; grad.dot(delta) <= 0, so every
      // accepted step strictly decreases the loss.
      if (candidate_value <= value + config.armijo_constant * grad.dot(delta) + 1e-15) {
        accepted = true;
        break;
      }
      step *= config.step_decay;
    }

    report.iterations = iter + 1;
    if (!accepted) {
      report.p_hat = p;
      report.final_loss = value;
      report.grad_mapping_norm = (p - project_feasible(p - grad, constraint)).norm();
      report.diverged = true;
      report.message = "line search failed to find a decreasing step";
      return report;
    }

    const double mapping_norm = (p - candidate).norm() / step;
    p = candidate;
    value = candidate_value;
    if (mapping_norm <= config.tolerance) {
      report.p_hat = p;
      report.final_loss = value;
      report.grad_mapping_norm = mapping_norm;
      report.converged = true;
      return report;
    }
    // Allow the step to recover between iterations.
    step = std::min(step / config.step_decay, config.initial_step);
  }

  report.p_hat = p;
  report.final_loss = value;
  const Vector grad = loss_gradient(p);
  report.grad_mapping_norm = (p - project_feasible(p - grad, constraint)).norm();
  report.converged = false;
  report.message = "iteration budget exhausted";
  return report;
}

SolverReport pgd_solve(const SymmetricLogLoss& loss, const SolverConfig& config) {
  return pgd_solve([&loss](const Eigen::Ref<const Vector>& p) { return loss.value(p); },
                   [&loss](const Eigen::Ref<const Vector>& p) { return loss.gradient(p); },
                   loss.dim(), config);
}

SolverReport pgd_solve(const NonSymLogLoss& loss, const SolverConfig& config) {
  return pgd_solve([&loss](const Eigen::Ref<const Vector>& p) { return loss.value(p); },
                   [&loss](const Eigen::Ref<const Vector>& p) { return loss.gradient(p); },
                   loss.dim(), config);
}

ClosedFormResult closed_form_symmetric(const SignalHistogram& histogram, const SymmetricMechanism& mech) {
  if (histogram.alphabet_size() != mech.domain_size()) {
    throw std::invalid_argument("closed_form_symmetric: histogram alphabet does not match the mechanism");
  }
  if (histogram.total <= 0) throw std::invalid_argument("closed_form_symmetric: empty histogram");
  ClosedFormResult result;
  result.p_star = mech.phi_inverse(histogram.frequencies());
  // Boundary points belong to the simplex; only genuine negatives disqualify.
  result.in_simplex = result.p_star.minCoeff() >= -1e-12;
  return result;
}

double strong_convexity_estimate(const SymmetricLogLoss& loss) {
  const SymmetricMechanism& mech = loss.mechanism();
  const double n = static_cast<double>(loss.histogram().total);
  const double worst_form = mech.rho() + mech.gamma();
  long long min_count = loss.histogram().counts[0];
  for (long long c : loss.histogram().counts) min_count = std::min(min_count, c);
  const double bound =
      mech.gamma() * mech.gamma() * (static_cast<double>(min_count) / n) / (worst_form * worst_form);
  if (mech.epsilon() < 1.0) {
    const double eps = mech.epsilon();
    const double floor = (eps * eps / 9.0) * static_cast<double>(min_count) / n;
    if (bound + 1e-15 < floor) throw std::logic_error("strong_convexity_estimate: bound fell below eps^2/9 floor");
  }
  return bound;
}

}  // namespace ldp
