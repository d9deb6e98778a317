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

#ifndef LDP_TESTERS_HPP_
#define LDP_TESTERS_HPP_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldp/chi2.hpp"
#include "ldp/domain.hpp"
#include "ldp/mech_nonsymmetric.hpp"
#include "ldp/mech_symmetric.hpp"
#include "ldp/prob.hpp"
#include "ldp/rng.hpp"

namespace ldp {

enum class Decision { kAccept, kReject, kError };

struct TestOutcome {
  Decision decision = Decision::kError;
  std::optional<double> statistic;
  std::optional<double> threshold;
  std::map<std::string, double> diagnostics;
  std::string error;  // non-empty iff decision == kError

  bool accepted() const { return decision == Decision::kAccept; }
  bool rejected() const { return decision == Decision::kReject; }

  static TestOutcome make_error(std::string message) {
    TestOutcome out;
    out.decision = Decision::kError;
    out.error = std::move(message);
    return out;
  }
};

// Robust chi-square identity statistic over a reference r with all r(x) > 0:
//   Z = sum_x ((N_x - n r(x))^2 - N_x) / (n r(x)).
// Under sampling from r each term has mean -r(x), so Z concentrates around -1
// and drifts by about n * chi2_divergence(r, truth) otherwise.
double robust_z_statistic(const SignalHistogram& sample, const Eigen::Ref<const Vector>& reference);

// Identity tester thresholded by Monte-Carlo calibration under the reference:
// the threshold is the empirical (1 - confidence)-quantile of Z over
// calibration draws of n samples from r, so the null rejection rate is at
// most the requested confidence (up to calibration noise).
class RobustIdentityTester {
 public:
  static constexpr int kDefaultCalibrationTrials = 2000;

  static RobustIdentityTester calibrate(const ProbVector& reference, long long n, double distance,
                                        double confidence, Rng& rng,
                                        int calibration_trials = kDefaultCalibrationTrials);

  TestOutcome test(const SignalHistogram& sample) const;

  const Vector& reference() const { return reference_; }
  double distance() const { return distance_; }
  double confidence() const { return confidence_; }
  double threshold() const { return threshold_; }
  long long sample_size() const { return n_; }

 private:
  Vector reference_;
  long long n_ = 0;
  double distance_ = 0.0;
  double confidence_ = 0.0;
  double threshold_ = 0.0;
};

// Identity tester for randomized-response signals: tests the translated
// hypothesis phi(p) against the raw signals at distance gamma * alpha.
TestOutcome sym_identity_tester(const ProbVector& p, std::span<const int> signals, double alpha,
                                const SymmetricMechanism& mech, Rng& calibration_rng,
                                double confidence = 1.0 / 9.0,
                                int calibration_trials = RobustIdentityTester::kDefaultCalibrationTrials);

// Small/large classification of per-feature signal types. A type is small iff
// n_{x^j}/n <= (1-gamma)/T^j + gamma * tau_j with tau_j = alpha/(10 d T^j).
struct IndependencePreprocess {
  std::vector<double> tau;                       // per feature
  std::vector<std::vector<bool>> large_mask;     // per feature, per type
  std::vector<std::vector<int>> large_types;     // per feature, kept type ids
  std::vector<std::vector<long long>> restricted_counts;  // per feature, counts on kept types
  std::vector<long long> feature_signal_totals;  // signals landing on kept types, per feature
  double removed_fraction_estimate = 0.0;        // empirical share of signals touching a small type
  bool degenerate = false;
  int degenerate_feature = -1;
};

IndependencePreprocess sym_independence_preprocess(const DomainSpec& spec, std::span<const int> signals,
                                                   double alpha, const SymmetricMechanism& mech);

// Smoothed frequency estimate (1 + n_x) / (|counts| + sum(counts)).
Vector add_one_estimate(std::span<const long long> counts);

// Product reference for the independence test: per feature the add-1 estimate
// over large types mapped back through the inverse channel map, their tensor
// product z_bar, and its signal image (1-gamma)/T_eff + gamma * z_bar over
// the all-large sub-domain (which is the full-domain map when nothing was
// removed). Also carries the histogram of the all-large signals.
struct IndependenceReference {
  IndependencePreprocess preprocess;
  std::vector<Vector> z_factors;   // per feature, over that feature's large types
  Vector z_bar;                    // tensor product of the factors
  Vector reference;                // signal image of z_bar on the sub-domain
  SignalHistogram histogram;       // all-large signal counts, restricted indexing
  std::string error;               // non-empty on failure

  bool ok() const { return error.empty(); }
};

IndependenceReference sym_independence_reference(const DomainSpec& spec, std::span<const int> signals,
                                                 double alpha, const SymmetricMechanism& mech);

// Independence tester for randomized-response signals: per feature, add-1
// estimate on large types, inverse channel map, product across features, then
// the robust identity test against the translated product on the all-large
// sub-domain at distance alpha*gamma/2 and confidence 1/9.
TestOutcome sym_independence_tester(const DomainSpec& spec, std::span<const int> signals, double alpha,
                                    const SymmetricMechanism& mech, Rng& calibration_rng,
                                    int calibration_trials = RobustIdentityTester::kDefaultCalibrationTrials);

// Identity tester for the two-signal mechanism: accept iff
// tv_distance(theta/(2 eta), p) <= alpha/2.
TestOutcome ns_identity_tester(const ProbVector& p, const ThetaEstimator& theta, double alpha);

// Independence tester for the two-signal mechanism: compare theta/(2 eta)
// against the product of its own feature marginals at threshold alpha/2.
TestOutcome ns_independence_tester(const DomainSpec& spec, const ThetaEstimator& theta, double alpha);

// Chi-square style identity statistic
//   P = n sum_x (theta(x) - 2 eta p(x))^2 / (1 - 4 eta^2 p(x)^2),
// approximately chi-square with T degrees of freedom under the null.
double p_statistic(const ThetaEstimator& theta, const ProbVector& p);

// Decision rule pairing P with the 2/3-quantile of chi^2_T.
TestOutcome p_statistic_test(const ThetaEstimator& theta, const ProbVector& p);

// Exploratory independence statistic
//   Q = n sum_x (theta(x)/(2 eta) - theta_bar(x))^2 / theta_bar(x)
// with theta_bar the product of theta/(2 eta)'s feature marginals. Terms with
// theta_bar(x) = 0 are excluded and counted. No decision is attached.
struct QStatistic {
  double value = 0.0;
  int excluded_terms = 0;
};

QStatistic q_statistic(const ThetaEstimator& theta, const DomainSpec& spec);

// Error-probability amplification: majority decision over repeated runs.
int amplification_repetitions(double beta);
TestOutcome majority_vote(int repetitions, const std::function<TestOutcome()>& run_once);

}  // namespace ldp

#endif  // LDP_TESTERS_HPP_
