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

#ifndef LDP_EXPERIMENTS_HPP_
#define LDP_EXPERIMENTS_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldp/domain.hpp"
#include "ldp/mech_nonsymmetric.hpp"
#include "ldp/prob.hpp"
#include "ldp/rng.hpp"

namespace ldp {

// Monte-Carlo harness configuration. Defaults: T = 10, uniform hypothesis,
// alpha = 0.2, n = 1000, epsilon = 0.25, t = 10000 trials.
struct ExperimentConfig {
  int T = 10;
  std::optional<ProbVector> p;  // defaults to uniform over T
  double alpha = 0.2;
  long long n = 1000;
  double epsilon = 0.25;
  int trials = 10000;
  std::uint64_t seed = 987654321;
  int threads = 1;

  // One-at-a-time sweep grids; empty means "just the scalar above".
  std::vector<int> T_sweep;
  std::vector<long long> n_sweep;
  std::vector<double> alpha_sweep;
  std::vector<double> epsilon_sweep;

  // Multi-feature domain for the independence statistic study.
  std::vector<int> feature_sizes = {3, 3};

  ProbVector hypothesis(int domain_size) const;
};

struct TrialRecord {
  int trial = 0;
  int T = 0;
  long long n = 0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double statistic = 0.0;
  bool reject = false;
  // Derived diagnostics, not part of the CSV schema.
  double theta_norm = 0.0;
  double tv_to_null = 0.0;
};

// Distributionally exact sampler for the aggregate two-signal estimator under
// type distribution q: the per-user summands y*b have independent coordinates,
// uniform off the user's own type and 2 eta biased on it, so theta reduces to
// a multinomial split followed by two binomials per coordinate.
ThetaEstimator simulate_theta(const ProbVector& q, long long n, double eta, Rng& rng);
ThetaEstimator simulate_theta_fixed_counts(std::span<const long long> type_counts, double eta, Rng& rng);

// Null-case statistic distribution: P values for t trials with types drawn
// from the hypothesis itself (alpha forced to 0), over the (T x n) sweep grid.
std::vector<TrialRecord> run_null_experiment(const ExperimentConfig& config);

// Alternative-case drift: per trial the far distribution is regenerated by
// the pairwise perturbation at the configured alpha, over (alpha x n).
std::vector<TrialRecord> run_alternative_experiment(const ExperimentConfig& config);

// Sample-complexity search over a monotone probe r(n):
// doubling finds a bracket, bisection narrows it until the midpoint's
// empirical rate enters [band_lo, band_hi], then the bracket is equipartioned
// and the point whose rate is closest to the target wins.
struct SampleComplexitySearch {
  double band_lo = 0.30;
  double band_hi = 0.35;
  double target = 0.33;
  long long n_start = 16;
  long long n_cap = 10'000'000;
  int equipartition_points = 8;
};

struct SampleComplexityResult {
  int T = 0;
  double alpha = 0.0;
  double epsilon = 0.0;
  long long n_lower = 0;
  long long n_upper = 0;
  long long n_star = 0;
  double rate_at_n_star = 0.0;
  bool bracketed = false;
  std::string note;
};

SampleComplexityResult find_sample_complexity(const std::function<double(long long)>& rate,
                                              const SampleComplexitySearch& search = {});

// Probe for the chi-square identity statistic: the fraction of trials in
// which the test errs (accepts) under a fixed far distribution q, evaluated
// with `probe_trials` Monte-Carlo trials per n. The far distribution is fixed
// once per parameter point.
std::function<double(long long)> make_p_test_error_probe(int T, double alpha, double epsilon,
                                                         std::uint64_t seed, int probe_trials,
                                                         int threads);

// Full sweep: one search per parameter point, varying one of T/alpha/epsilon
// at a time while the others stay at the configured defaults.
std::vector<SampleComplexityResult> run_sample_complexity_experiment(const ExperimentConfig& config,
                                                                     int probe_trials = 400,
                                                                     const SampleComplexitySearch& search = {});

// Power-law exponents from pairwise log ratios: for results differing in
// exactly one parameter, c = log(N_i/N_j)/log(xi_i/xi_j); the estimate per
// parameter is the median over all such pairs.
struct ExponentFit {
  std::optional<double> c_T;
  std::optional<double> c_alpha;
  std::optional<double> c_epsilon;
};

ExponentFit fit_exponents(std::span<const SampleComplexityResult> results);

// Paired null/alternative study of the independence statistic Q on a
// multi-feature domain; the null arm uses the product of uniform marginals,
// the alternative arm perturbs that joint at the configured alpha.
struct QTrialRecord {
  int trial = 0;
  bool alternative_arm = false;
  double q_value = 0.0;
  int excluded_terms = 0;
};

std::vector<QTrialRecord> run_q_experiment(const ExperimentConfig& config);

}  // namespace ldp

#endif  // LDP_EXPERIMENTS_HPP_
