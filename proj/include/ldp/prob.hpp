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

#ifndef LDP_PROB_HPP_
#define LDP_PROB_HPP_

#include <Eigen/Core>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ldp/domain.hpp"
#include "ldp/rng.hpp"

namespace ldp {

using Vector = Eigen::VectorXd;

// Tolerance on |sum - 1| accepted at construction before renormalizing.
inline constexpr double kProbSumTolerance = 1e-9;

// A probability distribution over a finite type domain: nonnegative weights
// summing to one. Construction renormalizes exactly so downstream arithmetic
// starts from a clean simplex point.
class ProbVector {
 public:
  explicit ProbVector(Vector weights);
  ProbVector(std::initializer_list<double> weights) : ProbVector(Vector(Eigen::Map<const Vector>(weights.begin(), static_cast<Eigen::Index>(weights.size())))) {}

  static ProbVector uniform(int dim);
  static ProbVector point_mass(int dim, int x);

  int dim() const { return static_cast<int>(weights_.size()); }
  double operator()(int x) const { return weights_(x); }
  const Vector& weights() const { return weights_; }

 private:
  Vector weights_;
};

// -- Distances and norms (expression-friendly) -------------------------------

// Total-variation distance: half the L1 distance. Also applied to raw vectors
// that are merely nearby estimates of distributions, with the same definition.
template <typename DerivedA, typename DerivedB>
double tv_distance(const Eigen::MatrixBase<DerivedA>& p, const Eigen::MatrixBase<DerivedB>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: dimension mismatch");
  return 0.5 * (p.derived().template cast<double>().array() - q.derived().template cast<double>().array()).abs().sum();
}
inline double tv_distance(const ProbVector& p, const ProbVector& q) { return tv_distance(p.weights(), q.weights()); }
template <typename Derived>
double tv_distance(const ProbVector& p, const Eigen::MatrixBase<Derived>& q) { return tv_distance(p.weights(), q); }
template <typename Derived>
double tv_distance(const Eigen::MatrixBase<Derived>& p, const ProbVector& q) { return tv_distance(p, q.weights()); }

// Chi-square divergence sum_x (p(x)-q(x))^2 / p(x); the first argument is the
// denominator distribution. Returns +inf when some p(x)=0 with q(x) != p(x).
template <typename DerivedA, typename DerivedB>
double chi2_divergence(const Eigen::MatrixBase<DerivedA>& p, const Eigen::MatrixBase<DerivedB>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("chi2_divergence: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p.derived()(i);
    const double diff = pi - q.derived()(i);
    if (pi == 0.0) {
      if (diff != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    total += diff * diff / pi;
  }
  return total;
}
inline double chi2_divergence(const ProbVector& p, const ProbVector& q) { return chi2_divergence(p.weights(), q.weights()); }

// The 2/3 quasi-norm (sum_i |v_i|^(2/3))^(3/2).
template <typename Derived>
double two_thirds_norm(const Eigen::MatrixBase<Derived>& v) {
  const double s = v.derived().array().abs().pow(2.0 / 3.0).sum();
  return std::pow(s, 1.5);
}

// -- Product structure --------------------------------------------------------

// Joint distribution with weight prod_j p^j(x^j) at each tuple.
ProbVector product_distribution(const std::vector<ProbVector>& marginals);

// Raw tensor product of vectors under the same row-major indexing; the inputs
// need not be distributions.
Vector tensor_product(const std::vector<Vector>& factors);

// Sum of joint entries sharing the j-th coordinate, as a linear projection.
Vector marginal(const Eigen::Ref<const Vector>& joint, const DomainSpec& spec, int j);
ProbVector marginal(const ProbVector& joint, const DomainSpec& spec, int j);

// -- Perturbation, sampling, projection ---------------------------------------

// Pairs types (0,1),(2,3),... and moves 2*alpha/T mass within each pair in a
// direction chosen by one fair coin per pair. For odd T the last type is left
// untouched and the shift is 2*alpha/(T-1). For uniform p and even T the
// result is exactly alpha-far in total variation. Throws if any entry would
// turn negative.
ProbVector paninski_perturb(const ProbVector& p, double alpha, Rng& rng);

// n i.i.d. type draws from p.
std::vector<int> sample_types(const ProbVector& p, long long n, Rng& rng);

// Euclidean projection onto the probability simplex (sorted-threshold rule).
ProbVector simplex_project(const Eigen::Ref<const Vector>& v);
Vector simplex_project_raw(const Eigen::Ref<const Vector>& v);

}  // namespace ldp

#endif  // LDP_PROB_HPP_
