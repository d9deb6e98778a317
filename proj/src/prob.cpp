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

#include "ldp/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ldp {

ProbVector::ProbVector(Vector weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw std::invalid_argument("ProbVector: empty weight vector");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (weights_(i) < 0.0) {
      if (weights_(i) < -kProbSumTolerance) throw std::invalid_argument("ProbVector: negative weight");
      weights_(i) = 0.0;  // clamp roundoff
    }
  }
  const double sum = weights_.sum();
  if (std::fabs(sum - 1.0) > kProbSumTolerance) throw std::invalid_argument("ProbVector: weights do not sum to one");
  weights_ /= sum;
}

ProbVector ProbVector::uniform(int dim) {
  if (dim < 1) throw std::invalid_argument("ProbVector::uniform: dim must be positive");
  return ProbVector(Vector::Constant(dim, 1.0 / dim));
}

ProbVector ProbVector::point_mass(int dim, int x) {
  if (dim < 1) throw std::invalid_argument("ProbVector::point_mass: dim must be positive");
  if (x < 0 || x >= dim) throw std::out_of_range("ProbVector::point_mass: index out of range");
  Vector w = Vector::Zero(dim);
  w(x) = 1.0;
  return ProbVector(std::move(w));
}

Vector tensor_product(const std::vector<Vector>& factors) {
  if (factors.empty()) throw std::invalid_argument("tensor_product: no factors");
  Vector result = factors[0];
  for (std::size_t j = 1; j < factors.size(); ++j) {
    const Vector& f = factors[j];
    Vector next(result.size() * f.size());
    for (Eigen::Index a = 0; a < result.size(); ++a) {
      next.segment(a * f.size(), f.size()) = result(a) * f;
    }
    result.swap(next);
  }
  return result;
}

ProbVector product_distribution(const std::vector<ProbVector>& marginals) {
  std::vector<Vector> factors;
  factors.reserve(marginals.size());
  for (const ProbVector& m : marginals) factors.push_back(m.weights());
  return ProbVector(tensor_product(factors));
}

Vector marginal(const Eigen::Ref<const Vector>& joint, const DomainSpec& spec, int j) {
  if (joint.size() != spec.total()) throw std::invalid_argument("marginal: joint dimension mismatch");
  if (j < 0 || j >= spec.feature_count()) throw std::out_of_range("marginal: feature index out of range");
  Vector out = Vector::Zero(spec.feature_size(j));
  for (int x = 0; x < spec.total(); ++x) {
    out(spec.coordinate(x, j)) += joint(x);
  }
  return out;
}

ProbVector marginal(const ProbVector& joint, const DomainSpec& spec, int j) {
  return ProbVector(marginal(joint.weights(), spec, j));
}

ProbVector paninski_perturb(const ProbVector& p, double alpha, Rng& rng) {
  if (alpha < 0.0) throw std::invalid_argument("paninski_perturb: alpha must be nonnegative");
  const int dim = p.dim();
  Vector q = p.weights();
  if (alpha == 0.0 || dim < 2) return ProbVector(std::move(q));

  const int paired = dim - (dim % 2);  // odd domains leave the last type untouched
  const double shift = 2.0 * alpha / static_cast<double>(paired);
  for (int a = 0; a + 1 < dim; a += 2) {
    // Either coin direction must keep both entries nonnegative.
    if (std::min(q(a), q(a + 1)) < shift) {
      throw std::invalid_argument("paninski_perturb: shift would make an entry negative");
    }
  }
  for (int a = 0; a + 1 < dim; a += 2) {
    const int direction = rng.sign_bernoulli(0.5);
    q(a) += direction * shift;
    q(a + 1) -= direction * shift;
  }
  return ProbVector(std::move(q));
}

std::vector<int> sample_types(const ProbVector& p, long long n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("sample_types: n must be nonnegative");
  std::vector<double> cumulative(p.dim());
  double acc = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    acc += p(i);
    cumulative[i] = acc;
  }
  cumulative.back() = 1.0;

  std::vector<int> types(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const double u = rng.unit();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    types[static_cast<std::size_t>(i)] = static_cast<int>(it - cumulative.begin());
  }
  return types;
}

Vector simplex_project_raw(const Eigen::Ref<const Vector>& v) {
  const Eigen::Index dim = v.size();
  if (dim == 0) throw std::invalid_argument("simplex_project: empty vector");
  std::vector<double> sorted(v.data(), v.data() + dim);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());

  double running = 0.0;
  double tau = 0.0;
  int support = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    running += sorted[static_cast<std::size_t>(i)];
    const double candidate = (running - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) {
      tau = candidate;
      support = static_cast<int>(i + 1);
    }
  }
  (void)support;
  return (v.array() - tau).max(0.0).matrix();
}

ProbVector simplex_project(const Eigen::Ref<const Vector>& v) {
  return ProbVector(simplex_project_raw(v));
}

}  // namespace ldp
