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

#include "ldp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "ldp/chi2.hpp"
#include "ldp/parallel.hpp"
#include "ldp/testers.hpp"

namespace ldp {

namespace {

// Stream ids per experiment so sweeps and trials never share a stream.
enum StreamId : std::uint64_t {
  kNullExperiment = 1,
  kAlternativeExperiment = 2,
  kSampleComplexity = 3,
  kQExperiment = 4,
  kPerturbation = 99,
};

std::vector<long long> multinomial_counts(long long n, const ProbVector& q, Rng& rng) {
  std::vector<long long> counts(static_cast<std::size_t>(q.dim()), 0);
  long long remaining = n;
  double mass = 1.0;
  for (int i = 0; i + 1 < q.dim() && remaining > 0; ++i) {
    const double p = std::clamp(q(i) / mass, 0.0, 1.0);
    const long long c = rng.binomial(remaining, p);
    counts[static_cast<std::size_t>(i)] = c;
    remaining -= c;
    mass -= q(i);
    if (mass <= 0.0) break;
  }
  counts.back() += remaining;
  return counts;
}

}  // namespace

ProbVector ExperimentConfig::hypothesis(int domain_size) const {
  if (p.has_value()) {
    if (p->dim() != domain_size) throw std::invalid_argument("ExperimentConfig: hypothesis dimension mismatch");
    return *p;
  }
  return ProbVector::uniform(domain_size);
}

ThetaEstimator simulate_theta_fixed_counts(std::span<const long long> type_counts, double eta, Rng& rng) {
  if (eta <= 0.0) throw std::invalid_argument("simulate_theta: eta must be positive");
  long long n = 0;
  for (long long c : type_counts) n += c;
  if (n <= 0) throw std::invalid_argument("simulate_theta: empty cohort");
  ThetaEstimator est;
  est.n = n;
  est.eta = eta;
  est.theta.resize(static_cast<Eigen::Index>(type_counts.size()));
  for (std::size_t x = 0; x < type_counts.size(); ++x) {
    const long long own = type_counts[x];
    const long long plus = rng.binomial(own, 0.5 + eta) + rng.binomial(n - own, 0.5);
    est.theta(static_cast<Eigen::Index>(x)) = static_cast<double>(2 * plus - n) / static_cast<double>(n);
  }
  return est;
}

ThetaEstimator simulate_theta(const ProbVector& q, long long n, double eta, Rng& rng) {
  const auto counts = multinomial_counts(n, q, rng);
  return simulate_theta_fixed_counts(counts, eta, rng);
}

std::vector<TrialRecord> run_null_experiment(const ExperimentConfig& config) {
  const std::vector<int> t_grid = config.T_sweep.empty() ? std::vector<int>{config.T} : config.T_sweep;
  const std::vector<long long> n_grid = config.n_sweep.empty() ? std::vector<long long>{config.n} : config.n_sweep;

  std::vector<TrialRecord> records;
  records.reserve(t_grid.size() * n_grid.size() * static_cast<std::size_t>(config.trials));
  const NonSymmetricMechanism mech(config.epsilon);
  std::uint64_t point = 0;
  for (int T : t_grid) {
    const ProbVector p = config.hypothesis(T);
    const double threshold = chi2_quantile(T, 2.0 / 3.0);
    for (long long n : n_grid) {
      std::vector<TrialRecord> block(static_cast<std::size_t>(config.trials));
      parallel_for(config.trials, config.threads, [&](long long trial) {
        Rng rng = Rng::from_path(config.seed, {kNullExperiment, point, static_cast<std::uint64_t>(trial)});
        const ThetaEstimator theta = simulate_theta(p, n, mech.eta(), rng);
        TrialRecord rec;
        rec.trial = static_cast<int>(trial);
        rec.T = T;
        rec.n = n;
        rec.epsilon = config.epsilon;
        rec.alpha = 0.0;
        rec.statistic = p_statistic(theta, p);
        rec.reject = rec.statistic > threshold;
        rec.theta_norm = theta.theta.norm();
        rec.tv_to_null = tv_distance(theta.scaled(), p.weights());
        block[static_cast<std::size_t>(trial)] = rec;
      });
      records.insert(records.end(), block.begin(), block.end());
      ++point;
    }
  }
  return records;
}

std::vector<TrialRecord> run_alternative_experiment(const ExperimentConfig& config) {
  const std::vector<double> a_grid = config.alpha_sweep.empty() ? std::vector<double>{config.alpha} : config.alpha_sweep;
  const std::vector<long long> n_grid = config.n_sweep.empty() ? std::vector<long long>{config.n} : config.n_sweep;

  std::vector<TrialRecord> records;
  records.reserve(a_grid.size() * n_grid.size() * static_cast<std::size_t>(config.trials));
  const NonSymmetricMechanism mech(config.epsilon);
  const ProbVector p = config.hypothesis(config.T);
  const double threshold = chi2_quantile(config.T, 2.0 / 3.0);
  std::uint64_t point = 0;
  for (double alpha : a_grid) {
    for (long long n : n_grid) {
      std::vector<TrialRecord> block(static_cast<std::size_t>(config.trials));
      parallel_for(config.trials, config.threads, [&](long long trial) {
        Rng rng = Rng::from_path(config.seed, {kAlternativeExperiment, point, static_cast<std::uint64_t>(trial)});
        const ProbVector q = alpha > 0.0 ? paninski_perturb(p, alpha, rng) : p;
        const ThetaEstimator theta = simulate_theta(q, n, mech.eta(), rng);
        TrialRecord rec;
        rec.trial = static_cast<int>(trial);
        rec.T = config.T;
        rec.n = n;
        rec.epsilon = config.epsilon;
        rec.alpha = alpha;
        rec.statistic = p_statistic(theta, p);
        rec.reject = rec.statistic > threshold;
        rec.theta_norm = theta.theta.norm();
        rec.tv_to_null = tv_distance(theta.scaled(), p.weights());
        block[static_cast<std::size_t>(trial)] = rec;
      });
      records.insert(records.end(), block.begin(), block.end());
      ++point;
    }
  }
  return records;
}

SampleComplexityResult find_sample_complexity(const std::function<double(long long)>& rate,
                                              const SampleComplexitySearch& search) {
  if (search.band_lo >= search.band_hi || search.target < search.band_lo || search.target > search.band_hi) {
    throw std::invalid_argument("find_sample_complexity: inconsistent band");
  }
  if (search.equipartition_points < 2) throw std::invalid_argument("find_sample_complexity: need >= 2 grid points");

  SampleComplexityResult result;
  const auto in_band = [&](double r) { return r >= search.band_lo && r <= search.band_hi; };

  // Doubling phase: march until the rate crosses or enters the band. The
  // probe may be increasing or decreasing in n; track the side we started on.
  long long n = std::max<long long>(search.n_start, 2);
  double r = rate(n);
  if (in_band(r)) {
    // Already inside at the starting point; treat the start as the bracket.
    result.n_lower = std::max<long long>(n / 2, 1);
    result.n_upper = n;
  } else {
    const bool started_below = r < search.band_lo;
    long long prev_n = n;
    bool crossed = false;
    while (n < search.n_cap) {
      prev_n = n;
      n = std::min(n * 2, search.n_cap);
      r = rate(n);
      const bool now_below = r < search.band_lo;
      if (in_band(r) || now_below != started_below) {
        crossed = true;
        break;
      }
    }
    if (!crossed) {
      result.note = "rate never crossed the band below the probe cap";
      return result;
    }
    result.n_lower = prev_n;
    result.n_upper = n;
  }

  // Bisection phase: shrink the bracket until its midpoint lands in the band.
  double lo_rate = rate(result.n_lower);
  for (int i = 0; i < 60; ++i) {
    const long long mid = (result.n_lower + result.n_upper) / 2;
    if (mid == result.n_lower || mid == result.n_upper) break;
    const double mid_rate = rate(mid);
    if (in_band(mid_rate)) break;
    // Move the endpoint on the same side of the band as the midpoint.
    const bool mid_below = mid_rate < search.band_lo;
    const bool lo_below = lo_rate < search.band_lo;
    if (mid_below == lo_below) {
      result.n_lower = mid;
      lo_rate = mid_rate;
    } else {
      result.n_upper = mid;
    }
  }

  // Equipartition phase: probe the grid and keep the point closest to target.
  const int points = search.equipartition_points;
  double best_gap = 2.0;
  for (int i = 0; i < points; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(points - 1);
    const long long grid_n = result.n_lower +
        static_cast<long long>(std::llround(frac * static_cast<double>(result.n_upper - result.n_lower)));
    const double grid_rate = rate(grid_n);
    const double gap = std::fabs(grid_rate - search.target);
    if (gap < best_gap) {
      best_gap = gap;
      result.n_star = grid_n;
      result.rate_at_n_star = grid_rate;
    }
  }
  result.bracketed = true;
  return result;
}

std::function<double(long long)> make_p_test_error_probe(int T, double alpha, double epsilon,
                                                         std::uint64_t seed, int probe_trials,
                                                         int threads) {
  const NonSymmetricMechanism mech(epsilon);
  const ProbVector p = ProbVector::uniform(T);
  // The far distribution is fixed once per parameter point.
  Rng perturbation_rng = Rng::from_path(seed, {kSampleComplexity, kPerturbation});
  const ProbVector q = paninski_perturb(p, alpha, perturbation_rng);
  const double threshold = chi2_quantile(T, 2.0 / 3.0);
  const double eta = mech.eta();

  auto probe_counter = std::make_shared<std::uint64_t>(0);
  return [=](long long n) {
    const std::uint64_t probe_id = (*probe_counter)++;
    std::vector<int> errors(static_cast<std::size_t>(probe_trials), 0);
    parallel_for(probe_trials, threads, [&](long long trial) {
      Rng rng = Rng::from_path(seed, {kSampleComplexity, probe_id, static_cast<std::uint64_t>(trial)});
      const ThetaEstimator theta = simulate_theta(q, n, eta, rng);
      // The tester errs under the alternative when the statistic stays below
      // the null threshold.
      errors[static_cast<std::size_t>(trial)] = p_statistic(theta, p) <= threshold ? 1 : 0;
    });
    long long total = 0;
    for (int e : errors) total += e;
    return static_cast<double>(total) / static_cast<double>(probe_trials);
  };
}

std::vector<SampleComplexityResult> run_sample_complexity_experiment(const ExperimentConfig& config,
                                                                     int probe_trials,
                                                                     const SampleComplexitySearch& search) {
  struct Point {
    int T;
    double alpha;
    double epsilon;
  };
  std::vector<Point> points;
  for (int T : config.T_sweep) points.push_back({T, config.alpha, config.epsilon});
  for (double a : config.alpha_sweep) points.push_back({config.T, a, config.epsilon});
  for (double e : config.epsilon_sweep) points.push_back({config.T, config.alpha, e});
  if (points.empty()) points.push_back({config.T, config.alpha, config.epsilon});

  std::vector<SampleComplexityResult> results;
  results.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& pt = points[i];
    const std::uint64_t point_seed = detail::mix_key(config.seed, 1000 + i);
    auto probe = make_p_test_error_probe(pt.T, pt.alpha, pt.epsilon, point_seed, probe_trials, config.threads);
    SampleComplexityResult res = find_sample_complexity(probe, search);
    res.T = pt.T;
    res.alpha = pt.alpha;
    res.epsilon = pt.epsilon;
    results.push_back(std::move(res));
  }
  return results;
}

ExponentFit fit_exponents(std::span<const SampleComplexityResult> results) {
  auto median = [](std::vector<double> v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    if (v.size() % 2 == 1) return v[m];
    return 0.5 * (v[m - 1] + v[m]);
  };

  std::vector<double> t_estimates;
  std::vector<double> alpha_estimates;
  std::vector<double> epsilon_estimates;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t j = i + 1; j < results.size(); ++j) {
      const auto& a = results[i];
      const auto& b = results[j];
      if (!a.bracketed || !b.bracketed || a.n_star <= 0 || b.n_star <= 0) continue;
      const bool t_differs = a.T != b.T;
      const bool alpha_differs = a.alpha != b.alpha;
      const bool epsilon_differs = a.epsilon != b.epsilon;
      if (t_differs + alpha_differs + epsilon_differs != 1) continue;
      const double log_ratio = std::log(static_cast<double>(a.n_star) / static_cast<double>(b.n_star));
      if (t_differs) {
        t_estimates.push_back(log_ratio / std::log(static_cast<double>(a.T) / static_cast<double>(b.T)));
      } else if (alpha_differs) {
        alpha_estimates.push_back(log_ratio / std::log(a.alpha / b.alpha));
      } else {
        epsilon_estimates.push_back(log_ratio / std::log(a.epsilon / b.epsilon));
      }
    }
  }
  ExponentFit fit;
  fit.c_T = median(std::move(t_estimates));
  fit.c_alpha = median(std::move(alpha_estimates));
  fit.c_epsilon = median(std::move(epsilon_estimates));
  return fit;
}

std::vector<QTrialRecord> run_q_experiment(const ExperimentConfig& config) {
  const DomainSpec spec(config.feature_sizes);
  std::vector<ProbVector> uniform_marginals;
  for (int j = 0; j < spec.feature_count(); ++j) {
    uniform_marginals.push_back(ProbVector::uniform(spec.feature_size(j)));
  }
  const ProbVector null_joint = product_distribution(uniform_marginals);
  const NonSymmetricMechanism mech(config.epsilon);

  std::vector<QTrialRecord> records(static_cast<std::size_t>(config.trials) * 2);
  parallel_for(config.trials, config.threads, [&](long long trial) {
    for (int arm = 0; arm < 2; ++arm) {
      Rng rng = Rng::from_path(config.seed, {kQExperiment, static_cast<std::uint64_t>(arm),
                                             static_cast<std::uint64_t>(trial)});
      const ProbVector q = arm == 0 ? null_joint : paninski_perturb(null_joint, config.alpha, rng);
      const ThetaEstimator theta = simulate_theta(q, config.n, mech.eta(), rng);
      const QStatistic stat = q_statistic(theta, spec);
      QTrialRecord rec;
      rec.trial = static_cast<int>(trial);
      rec.alternative_arm = arm == 1;
      rec.q_value = stat.value;
      rec.excluded_terms = stat.excluded_terms;
      records[static_cast<std::size_t>(trial) * 2 + static_cast<std::size_t>(arm)] = rec;
    }
  });
  return records;
}

}  // namespace ldp
