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

#ifndef LDP_MLE_HPP_
#define LDP_MLE_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ldp/mech_nonsymmetric.hpp"
#include "ldp/mech_symmetric.hpp"
#include "ldp/prob.hpp"

namespace ldp {

// Negative average log-likelihood of randomized-response signals:
//   f(p) = -(1/n) sum_x n_x log(rho + gamma p(x)).
// Finite on the whole simplex since rho > 0; the Hessian is diagonal.
class SymmetricLogLoss {
 public:
  SymmetricLogLoss(SignalHistogram histogram, SymmetricMechanism mech);

  const SignalHistogram& histogram() const { return histogram_; }
  const SymmetricMechanism& mechanism() const { return mech_; }
  int dim() const { return mech_.domain_size(); }

  double value(const Eigen::Ref<const Vector>& p) const;
  Vector gradient(const Eigen::Ref<const Vector>& p) const;
  Vector hessian_diagonal(const Eigen::Ref<const Vector>& p) const;

 private:
  SignalHistogram histogram_;
  SymmetricMechanism mech_;
};

// Negative average log-likelihood of two-signal responses:
//   f(p) = -(1/n) sum_i log(g_i^{y_i}' p),  g_i^{y_i} = 1/2 + eta * y_i b_i.
// Every linear form is >= 1/2 - eta > 0 on the simplex. Users with identical
// y*b share a term, so evaluation groups them by that sign vector.
class NonSymLogLoss {
 public:
  NonSymLogLoss(std::span<const NonSymUser> users, double eta);

  double eta() const { return eta_; }
  int dim() const { return dim_; }
  long long user_count() const { return n_; }

  double value(const Eigen::Ref<const Vector>& p) const;
  Vector gradient(const Eigen::Ref<const Vector>& p) const;
  void value_and_gradient(const Eigen::Ref<const Vector>& p, double* value, Vector* gradient) const;

 private:
  double eta_;
  int dim_;
  long long n_;
  // Distinct y*b sign vectors (as +-1 doubles) with multiplicities.
  std::vector<Vector> group_signs_;
  std::vector<long long> group_counts_;
};

struct SolverConfig {
  int max_iterations = 10000;
  double initial_step = 1.0;
  double step_decay = 0.5;
  double armijo_constant = 1e-4;
  double tolerance = 1e-8;  // on the gradient-mapping norm
  std::optional<double> strong_convexity_hint;
};

// Affine equality constraints A p = b intersected with the simplex; handled by
// alternating projections inside the solver's projection step.
struct AffineEqualityConstraint {
  Eigen::MatrixXd lhs;
  Vector rhs;
};

struct SolverReport {
  Vector p_hat;
  int iterations = 0;
  double final_loss = 0.0;
  double grad_mapping_norm = 0.0;
  bool converged = false;
  bool diverged = false;
  std::string message;
};

// Projected gradient descent over the simplex (optionally intersected with
// affine equalities) with backtracking line search. Accepted steps never
// increase the loss; stops when the gradient-mapping norm falls below the
// configured tolerance or the iteration budget runs out.
SolverReport pgd_solve(const std::function<double(const Eigen::Ref<const Vector>&)>& loss_value,
                       const std::function<Vector(const Eigen::Ref<const Vector>&)>& loss_gradient,
                       int dim, const SolverConfig& config = {},
                       const std::optional<AffineEqualityConstraint>& constraint = std::nullopt);

SolverReport pgd_solve(const SymmetricLogLoss& loss, const SolverConfig& config = {});
SolverReport pgd_solve(const NonSymLogLoss& loss, const SolverConfig& config = {});

// Closed-form candidate p* = phi^{-1}(<n_s/n>). When p* lies in the simplex it
// is the exact maximum-likelihood solution over the simplex; otherwise the raw
// vector is reported and callers fall back to the iterative solver.
struct ClosedFormResult {
  Vector p_star;
  bool in_simplex = false;
};

ClosedFormResult closed_form_symmetric(const SignalHistogram& histogram, const SymmetricMechanism& mech);

// Lower bound on the symmetric loss's Hessian diagonal over the simplex:
//   min_x gamma^2 (n_x/n) / (rho + gamma)^2.
double strong_convexity_estimate(const SymmetricLogLoss& loss);

}  // namespace ldp

#endif  // LDP_MLE_HPP_
