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

#include "ldp/testers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ldp {

namespace {

// Multinomial draw via conditional binomials.
std::vector<long long> multinomial(long long n, const Eigen::Ref<const Vector>& probs, Rng& rng) {
  std::vector<long long> counts(static_cast<std::size_t>(probs.size()), 0);
  long long remaining = n;
  double mass = 1.0;
  for (Eigen::Index i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
    const double p = std::clamp(probs(i) / mass, 0.0, 1.0);
    const long long c = rng.binomial(remaining, p);
    counts[static_cast<std::size_t>(i)] = c;
    remaining -= c;
    mass -= probs(i);
    if (mass <= 0.0) break;
  }
  counts.back() += remaining;
  return counts;
}

}  // namespace

double robust_z_statistic(const SignalHistogram& sample, const Eigen::Ref<const Vector>& reference) {
  if (sample.alphabet_size() != reference.size()) {
    throw std::invalid_argument("robust_z_statistic: alphabet mismatch");
  }
  const double n = static_cast<double>(sample.total);
  double z = 0.0;
  for (Eigen::Index x = 0; x < reference.size(); ++x) {
    const double expected = n * reference(x);
    if (expected <= 0.0) throw std::invalid_argument("robust_z_statistic: reference has a zero entry");
    const double observed = static_cast<double>(sample.counts[static_cast<std::size_t>(x)]);
    const double diff = observed - expected;
    z += (diff * diff - observed) / expected;
  }
  return z;
}

RobustIdentityTester RobustIdentityTester::calibrate(const ProbVector& reference, long long n,
                                                     double distance, double confidence, Rng& rng,
                                                     int calibration_trials) {
  if (n <= 0) throw std::invalid_argument("RobustIdentityTester: n must be positive");
  if (confidence <= 0.0 || confidence >= 1.0) {
    throw std::invalid_argument("RobustIdentityTester: confidence must lie in (0, 1)");
  }
  if (calibration_trials < 10) throw std::invalid_argument("RobustIdentityTester: too few calibration trials");
  if (reference.weights().minCoeff() <= 0.0) {
    throw std::invalid_argument("RobustIdentityTester: reference has a zero entry; restrict the alphabet first");
  }

  std::vector<double> null_values(static_cast<std::size_t>(calibration_trials));
  for (int t = 0; t < calibration_trials; ++t) {
    const auto counts = multinomial(n, reference.weights(), rng);
    null_values[static_cast<std::size_t>(t)] =
        robust_z_statistic(SignalHistogram::from_counts(counts), reference.weights());
  }
  std::sort(null_values.begin(), null_values.end());

  // Smallest value with at least a (1 - confidence) share of null draws at or
  // below it, so Pr[Z > threshold | null] <= confidence.
  const int rank = static_cast<int>(std::ceil((1.0 - confidence) * calibration_trials));
  const int index = std::clamp(rank - 1, 0, calibration_trials - 1);

  RobustIdentityTester tester;
  tester.reference_ = reference.weights();
  tester.n_ = n;
  tester.distance_ = distance;
  tester.confidence_ = confidence;
  tester.threshold_ = null_values[static_cast<std::size_t>(index)];
  return tester;
}

TestOutcome RobustIdentityTester::test(const SignalHistogram& sample) const {
  if (sample.alphabet_size() != reference_.size()) {
    return TestOutcome::make_error("sample alphabet does not match the calibrated reference");
  }
  if (sample.total != n_) {
    return TestOutcome::make_error("sample size does not match the calibrated sample size");
  }
  TestOutcome out;
  out.statistic = robust_z_statistic(sample, reference_);
  out.threshold = threshold_;
  out.decision = *out.statistic <= threshold_ ? Decision::kAccept : Decision::kReject;
  out.diagnostics["distance"] = distance_;
  out.diagnostics["confidence"] = confidence_;
  out.diagnostics["alphabet"] = static_cast<double>(reference_.size());
  out.diagnostics["n"] = static_cast<double>(n_);
  return out;
}

TestOutcome sym_identity_tester(const ProbVector& p, std::span<const int> signals, double alpha,
                                const SymmetricMechanism& mech, Rng& calibration_rng, double confidence,
                                int calibration_trials) {
  if (alpha <= 0.0) throw std::invalid_argument("sym_identity_tester: alpha must be positive");
  if (p.dim() != mech.domain_size()) {
    return TestOutcome::make_error("hypothesis dimension does not match the mechanism");
  }
  if (mech.gamma() <= 0.0) return TestOutcome::make_error("channel is non-informative at epsilon = 0");
  if (signals.empty()) return TestOutcome::make_error("no signals provided");

  const ProbVector reference = mech.phi(p);
  const auto tester = RobustIdentityTester::calibrate(reference, static_cast<long long>(signals.size()),
                                                      mech.gamma() * alpha, confidence, calibration_rng,
                                                      calibration_trials);
  TestOutcome out = tester.test(SignalHistogram::from_signals(mech.domain_size(), signals));
  out.diagnostics["alpha"] = alpha;
  out.diagnostics["gamma"] = mech.gamma();
  return out;
}

IndependencePreprocess sym_independence_preprocess(const DomainSpec& spec, std::span<const int> signals,
                                                   double alpha, const SymmetricMechanism& mech) {
  if (spec.feature_count() < 2) throw std::invalid_argument("independence preprocessing needs at least two features");
  if (spec.total() != mech.domain_size()) throw std::invalid_argument("domain does not match the mechanism");
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  if (signals.empty()) throw std::invalid_argument("no signals provided");

  const int d = spec.feature_count();
  const double gamma = mech.gamma();
  const double n = static_cast<double>(signals.size());

  // Per-feature marginal counts of the signals.
  std::vector<std::vector<long long>> counts(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) counts[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(spec.feature_size(j)), 0);
  for (int s : signals) {
    if (s < 0 || s >= spec.total()) throw std::out_of_range("signal out of range");
    for (int j = 0; j < d; ++j) ++counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(spec.coordinate(s, j))];
  }

  IndependencePreprocess pre;
  pre.tau.resize(static_cast<std::size_t>(d));
  pre.large_mask.resize(static_cast<std::size_t>(d));
  pre.large_types.resize(static_cast<std::size_t>(d));
  pre.restricted_counts.resize(static_cast<std::size_t>(d));
  pre.feature_signal_totals.resize(static_cast<std::size_t>(d));

  for (int j = 0; j < d; ++j) {
    const int tj = spec.feature_size(j);
    const double tau = alpha / (10.0 * d * tj);
    pre.tau[static_cast<std::size_t>(j)] = tau;
    const double threshold = (1.0 - gamma) / tj + gamma * tau;
    auto& mask = pre.large_mask[static_cast<std::size_t>(j)];
    mask.assign(static_cast<std::size_t>(tj), false);
    long long kept = 0;
    for (int x = 0; x < tj; ++x) {
      const double freq = static_cast<double>(counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)]) / n;
      if (freq > threshold) {
        mask[static_cast<std::size_t>(x)] = true;
        pre.large_types[static_cast<std::size_t>(j)].push_back(x);
        pre.restricted_counts[static_cast<std::size_t>(j)].push_back(
            counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)]);
        kept += counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)];
      }
    }
    pre.feature_signal_totals[static_cast<std::size_t>(j)] = kept;
    if (pre.large_types[static_cast<std::size_t>(j)].empty()) {
      pre.degenerate = true;
      pre.degenerate_feature = j;
    }
  }

  // Empirical share of signals with at least one small coordinate.
  long long touched = 0;
  for (int s : signals) {
    for (int j = 0; j < d; ++j) {
      if (!pre.large_mask[static_cast<std::size_t>(j)][static_cast<std::size_t>(spec.coordinate(s, j))]) {
        ++touched;
        break;
      }
    }
  }
  pre.removed_fraction_estimate = static_cast<double>(touched) / n;
  return pre;
}

Vector add_one_estimate(std::span<const long long> counts) {
  if (counts.empty()) throw std::invalid_argument("add_one_estimate: empty counts");
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw std::invalid_argument("add_one_estimate: negative count");
    total += c;
  }
  Vector estimate(static_cast<Eigen::Index>(counts.size()));
  const double denom = static_cast<double>(static_cast<long long>(counts.size()) + total);
  for (std::size_t x = 0; x < counts.size(); ++x) {
    estimate(static_cast<Eigen::Index>(x)) = static_cast<double>(1 + counts[x]) / denom;
  }
  return estimate;
}

IndependenceReference sym_independence_reference(const DomainSpec& spec, std::span<const int> signals,
                                                 double alpha, const SymmetricMechanism& mech) {
  IndependenceReference ref;
  try {
    ref.preprocess = sym_independence_preprocess(spec, signals, alpha, mech);
  } catch (const std::exception& e) {
    ref.error = e.what();
    return ref;
  }
  const IndependencePreprocess& pre = ref.preprocess;
  if (pre.degenerate) {
    ref.error = "every type of feature " + std::to_string(pre.degenerate_feature) + " was classified small";
    return ref;
  }
  const double gamma = mech.gamma();
  const int d = spec.feature_count();

  // Per feature: add-1 estimate over large types (post-restriction counts),
  // then the inverse channel map.
  ref.z_factors.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto& kept_counts = pre.restricted_counts[static_cast<std::size_t>(j)];
    Vector z = invert_marginal_estimate(gamma, add_one_estimate(kept_counts));
    if (z.minCoeff() <= 0.0) {
      ref.error = "inverse map produced a nonpositive entry for feature " + std::to_string(j) +
                  "; sample is too small";
      return ref;
    }
    ref.z_factors[static_cast<std::size_t>(j)] = std::move(z);
  }

  // Product estimate over the all-large sub-domain and its signal image
  // (1-gamma)/T_eff + gamma * z, which reduces to the full-domain map when no
  // type was removed.
  ref.z_bar = tensor_product(ref.z_factors);
  const double t_eff = static_cast<double>(ref.z_bar.size());
  ref.reference = ((1.0 - gamma) / t_eff + gamma * ref.z_bar.array()).matrix();

  // Histogram of signals whose every coordinate is large, indexed on the
  // restricted product domain.
  std::vector<int> compact_index(static_cast<std::size_t>(spec.total()), -1);
  {
    std::vector<std::vector<int>> position(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      position[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(spec.feature_size(j)), -1);
      const auto& kept = pre.large_types[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < kept.size(); ++k) {
        position[static_cast<std::size_t>(j)][static_cast<std::size_t>(kept[k])] = static_cast<int>(k);
      }
    }
    for (int s = 0; s < spec.total(); ++s) {
      int index = 0;
      bool all_large = true;
      for (int j = 0; j < d && all_large; ++j) {
        const int pos = position[static_cast<std::size_t>(j)][static_cast<std::size_t>(spec.coordinate(s, j))];
        if (pos < 0) {
          all_large = false;
        } else {
          index = index * static_cast<int>(pre.large_types[static_cast<std::size_t>(j)].size()) + pos;
        }
      }
      if (all_large) compact_index[static_cast<std::size_t>(s)] = index;
    }
  }
  std::vector<long long> kept_counts(static_cast<std::size_t>(ref.z_bar.size()), 0);
  long long kept_total = 0;
  for (int s : signals) {
    const int idx = compact_index[static_cast<std::size_t>(s)];
    if (idx >= 0) {
      ++kept_counts[static_cast<std::size_t>(idx)];
      ++kept_total;
    }
  }
  if (kept_total == 0) {
    ref.error = "no signal lies on the all-large sub-domain";
    return ref;
  }
  ref.histogram = SignalHistogram::from_counts(std::move(kept_counts));
  return ref;
}

TestOutcome sym_independence_tester(const DomainSpec& spec, std::span<const int> signals, double alpha,
                                    const SymmetricMechanism& mech, Rng& calibration_rng,
                                    int calibration_trials) {
  const IndependenceReference ref = sym_independence_reference(spec, signals, alpha, mech);
  if (!ref.ok()) return TestOutcome::make_error(ref.error);

  const double gamma = mech.gamma();
  const ProbVector reference(ref.reference / ref.reference.sum());
  const auto tester = RobustIdentityTester::calibrate(reference, ref.histogram.total, alpha * gamma / 2.0,
                                                      1.0 / 9.0, calibration_rng, calibration_trials);
  TestOutcome out = tester.test(ref.histogram);
  out.diagnostics["alpha"] = alpha;
  out.diagnostics["gamma"] = gamma;
  out.diagnostics["removed_fraction_estimate"] = ref.preprocess.removed_fraction_estimate;
  out.diagnostics["effective_domain"] = static_cast<double>(ref.z_bar.size());
  out.diagnostics["effective_n"] = static_cast<double>(ref.histogram.total);
  return out;
}

TestOutcome ns_identity_tester(const ProbVector& p, const ThetaEstimator& theta, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("ns_identity_tester: alpha must be positive");
  if (theta.eta <= 0.0) throw std::invalid_argument("ns_identity_tester: estimator eta must be positive");
  if (theta.theta.size() != p.dim()) {
    return TestOutcome::make_error("hypothesis dimension does not match the estimator");
  }
  TestOutcome out;
  out.statistic = tv_distance(theta.scaled(), p.weights());
  out.threshold = alpha / 2.0;
  out.decision = *out.statistic <= *out.threshold ? Decision::kAccept : Decision::kReject;
  out.diagnostics["alpha"] = alpha;
  out.diagnostics["n"] = static_cast<double>(theta.n);
  return out;
}

TestOutcome ns_independence_tester(const DomainSpec& spec, const ThetaEstimator& theta, double alpha) {
  if (spec.feature_count() < 2) throw std::invalid_argument("ns_independence_tester: needs at least two features");
  if (alpha <= 0.0) throw std::invalid_argument("ns_independence_tester: alpha must be positive");
  if (theta.eta <= 0.0) throw std::invalid_argument("ns_independence_tester: estimator eta must be positive");
  if (theta.theta.size() != spec.total()) {
    return TestOutcome::make_error("domain does not match the estimator");
  }
  const Vector scaled = theta.scaled();
  std::vector<Vector> marginals(static_cast<std::size_t>(spec.feature_count()));
  for (int j = 0; j < spec.feature_count(); ++j) {
    marginals[static_cast<std::size_t>(j)] = marginal(scaled, spec, j);
  }
  const Vector product = tensor_product(marginals);

  TestOutcome out;
  out.statistic = tv_distance(scaled, product);
  out.threshold = alpha / 2.0;
  out.decision = *out.statistic <= *out.threshold ? Decision::kAccept : Decision::kReject;
  out.diagnostics["alpha"] = alpha;
  out.diagnostics["n"] = static_cast<double>(theta.n);
  return out;
}

double p_statistic(const ThetaEstimator& theta, const ProbVector& p) {
  if (theta.theta.size() != p.dim()) throw std::invalid_argument("p_statistic: dimension mismatch");
  if (theta.eta <= 0.0) throw std::invalid_argument("p_statistic: estimator eta must be positive");
  const double eta = theta.eta;
  double acc = 0.0;
  for (int x = 0; x < p.dim(); ++x) {
    const double denom = 1.0 - 4.0 * eta * eta * p(x) * p(x);
    const double diff = theta.theta(x) - 2.0 * eta * p(x);
    acc += diff * diff / denom;
  }
  return static_cast<double>(theta.n) * acc;
}

TestOutcome p_statistic_test(const ThetaEstimator& theta, const ProbVector& p) {
  TestOutcome out;
  out.statistic = p_statistic(theta, p);
  out.threshold = chi2_quantile(p.dim(), 2.0 / 3.0);
  out.decision = *out.statistic <= *out.threshold ? Decision::kAccept : Decision::kReject;
  out.diagnostics["n"] = static_cast<double>(theta.n);
  return out;
}

QStatistic q_statistic(const ThetaEstimator& theta, const DomainSpec& spec) {
  if (spec.feature_count() < 2) throw std::invalid_argument("q_statistic: needs at least two features");
  if (theta.theta.size() != spec.total()) throw std::invalid_argument("q_statistic: dimension mismatch");
  const Vector scaled = theta.scaled();
  std::vector<Vector> marginals(static_cast<std::size_t>(spec.feature_count()));
  for (int j = 0; j < spec.feature_count(); ++j) {
    marginals[static_cast<std::size_t>(j)] = marginal(scaled, spec, j);
  }
  const Vector product = tensor_product(marginals);

  QStatistic q;
  double acc = 0.0;
  for (int x = 0; x < spec.total(); ++x) {
    if (product(x) == 0.0) {
      ++q.excluded_terms;
      continue;
    }
    const double diff = scaled(x) - product(x);
    acc += diff * diff / product(x);
  }
  q.value = static_cast<double>(theta.n) * acc;
  return q;
}

int amplification_repetitions(double beta) {
  if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("amplification_repetitions: beta must lie in (0, 1)");
  // Majority over 2k+1 runs of a 2/3-correct tester errs with probability
  // <= exp(-k/9); pick the smallest odd count meeting beta.
  const int k = static_cast<int>(std::ceil(9.0 * std::log(1.0 / beta)));
  return 2 * std::max(k, 1) + 1;
}

TestOutcome majority_vote(int repetitions, const std::function<TestOutcome()>& run_once) {
  if (repetitions < 1 || repetitions % 2 == 0) {
    throw std::invalid_argument("majority_vote: repetitions must be odd and positive");
  }
  int accepts = 0;
  int rejects = 0;
  for (int i = 0; i < repetitions; ++i) {
    const TestOutcome outcome = run_once();
    if (outcome.decision == Decision::kError) return outcome;
    if (outcome.accepted()) {
      ++accepts;
    } else {
      ++rejects;
    }
  }
  TestOutcome out;
  out.decision = accepts > rejects ? Decision::kAccept : Decision::kReject;
  out.diagnostics["repetitions"] = static_cast<double>(repetitions);
  out.diagnostics["accept_votes"] = static_cast<double>(accepts);
  return out;
}

}  // namespace ldp
