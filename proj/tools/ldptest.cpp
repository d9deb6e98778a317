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

// Command-line front end. Subcommands: mechanize, test-identity,
// test-independence, mle, experiment {1,2,3,4}. Exit codes: 0 = accept or
// success, 3 = reject, 2 = error. All randomness flows from --seed, so equal
// invocations produce byte-identical outputs.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ldp/chi2.hpp"
#include "ldp/experiments.hpp"
#include "ldp/io.hpp"
#include "ldp/mle.hpp"
#include "ldp/testers.hpp"

namespace {

using nlohmann::json;

constexpr int kExitAccept = 0;
constexpr int kExitError = 2;
constexpr int kExitReject = 3;
constexpr std::uint64_t kDefaultSeed = 20260809;

int outcome_exit_code(const ldp::TestOutcome& outcome) {
  switch (outcome.decision) {
    case ldp::Decision::kAccept: return kExitAccept;
    case ldp::Decision::kReject: return kExitReject;
    case ldp::Decision::kError: return kExitError;
  }
  return kExitError;
}

struct MechanizeArgs {
  std::string mechanism;
  std::string dist_path;
  long long n = 0;
  double epsilon = 0.25;
  std::uint64_t seed = kDefaultSeed;
  std::string out_path;
  std::string csv_path;  // optional cohort CSV export
};

int run_mechanize(const MechanizeArgs& args) {
  const ldp::ProbVector p = ldp::read_distribution_json(args.dist_path);

  ldp::RunManifest manifest;
  manifest.subcommand = "mechanize";
  manifest.seed = args.seed;
  json config;
  config["mechanism"] = args.mechanism;
  config["n"] = args.n;
  config["epsilon"] = args.epsilon;
  config["T"] = p.dim();
  manifest.config_json = config.dump();
  manifest.inputs = {args.dist_path};
  manifest.outputs = {args.out_path};

  ldp::Rng rng(args.seed);
  if (args.mechanism == "symmetric") {
    const ldp::SymmetricMechanism mech(p.dim(), args.epsilon);
    const std::vector<int> types = ldp::sample_types(p, args.n, rng);
    const std::vector<int> signals = mech.randomize_all(types, rng);
    ldp::write_signals_csv(args.out_path, signals, &manifest);
  } else {
    const ldp::NonSymmetricMechanism mech(args.epsilon);
    ldp::Cohort cohort;
    if (args.n == 0) {
      cohort.domain_size = p.dim();
      cohort.epsilon = args.epsilon;
    } else {
      cohort = ldp::simulate_cohort(p, args.n, mech, rng);
    }
    ldp::write_cohort(args.out_path, cohort, &manifest);
    if (!args.csv_path.empty()) ldp::write_cohort_csv(args.csv_path, cohort, &manifest);
  }
  std::cout << manifest.to_json_string() << "\n";
  return kExitAccept;
}

struct TestArgs {
  std::string mechanism;
  std::string hypothesis_path;
  std::string signals_path;
  std::string cohort_path;
  std::uint64_t seed = kDefaultSeed;
};

int run_test(const TestArgs& args, bool independence) {
  const ldp::HypothesisFile hyp = ldp::read_hypothesis_json(args.hypothesis_path);

  ldp::RunManifest manifest;
  manifest.subcommand = independence ? "test-independence" : "test-identity";
  manifest.seed = args.seed;
  json config;
  config["mechanism"] = args.mechanism;
  config["alpha"] = hyp.alpha;
  config["epsilon"] = hyp.epsilon;
  manifest.config_json = config.dump();

  ldp::TestOutcome outcome;
  if (args.mechanism == "symmetric") {
    manifest.inputs = {args.hypothesis_path, args.signals_path};
    const std::vector<int> signals = ldp::read_signals(args.signals_path);
    ldp::Rng rng(args.seed);
    if (independence) {
      if (hyp.feature_sizes.empty()) {
        outcome = ldp::TestOutcome::make_error("hypothesis file lacks feature_sizes");
      } else {
        const ldp::DomainSpec spec(hyp.feature_sizes);
        const ldp::SymmetricMechanism mech(spec.total(), hyp.epsilon);
        outcome = ldp::sym_independence_tester(spec, signals, hyp.alpha, mech, rng);
      }
    } else if (!hyp.p.has_value()) {
      outcome = ldp::TestOutcome::make_error("identity hypothesis file lacks p");
    } else {
      const ldp::SymmetricMechanism mech(hyp.p->dim(), hyp.epsilon);
      if (!signals.empty() &&
          *std::max_element(signals.begin(), signals.end()) >= mech.domain_size()) {
        outcome = ldp::TestOutcome::make_error("signal alphabet exceeds the hypothesis domain");
      } else {
        outcome = ldp::sym_identity_tester(*hyp.p, signals, hyp.alpha, mech, rng);
      }
    }
  } else {
    manifest.inputs = {args.hypothesis_path, args.cohort_path};
    const ldp::Cohort cohort = ldp::read_cohort(args.cohort_path);
    const ldp::NonSymmetricMechanism mech(cohort.epsilon);
    if (cohort.users.empty()) {
      outcome = ldp::TestOutcome::make_error("cohort file holds no users");
    } else {
      const ldp::ThetaEstimator theta = ldp::aggregate_theta(cohort.users, mech.eta());
      if (independence) {
        if (hyp.feature_sizes.empty()) {
          outcome = ldp::TestOutcome::make_error("hypothesis file lacks feature_sizes");
        } else {
          const ldp::DomainSpec spec(hyp.feature_sizes);
          if (spec.total() != cohort.domain_size) {
            outcome = ldp::TestOutcome::make_error("hypothesis domain does not match the cohort");
          } else {
            outcome = ldp::ns_independence_tester(spec, theta, hyp.alpha);
          }
        }
      } else if (!hyp.p.has_value()) {
        outcome = ldp::TestOutcome::make_error("identity hypothesis file lacks p");
      } else if (hyp.p->dim() != cohort.domain_size) {
        outcome = ldp::TestOutcome::make_error("hypothesis domain does not match the cohort");
      } else {
        outcome = ldp::ns_identity_tester(*hyp.p, theta, hyp.alpha);
      }
    }
  }

  json report = ldp::test_outcome_to_json(outcome);
  report["manifest"] = json::parse(manifest.to_json_string());
  std::cout << report.dump(2) << "\n";
  return outcome_exit_code(outcome);
}

struct MleArgs {
  std::string mechanism;
  std::string signals_path;
  std::string cohort_path;
  double epsilon = 0.25;
  int domain_size = 0;
  bool closed_form = false;
  std::string out_path;
};

int run_mle(const MleArgs& args) {
  ldp::RunManifest manifest;
  manifest.subcommand = "mle";
  json config;
  config["mechanism"] = args.mechanism;
  config["closed_form"] = args.closed_form;

  json report;
  if (args.mechanism == "symmetric") {
    manifest.inputs = {args.signals_path};
    config["epsilon"] = args.epsilon;
    const std::vector<int> signals = ldp::read_signals(args.signals_path);
    int domain_size = args.domain_size;
    if (domain_size == 0 && !signals.empty()) {
      domain_size = *std::max_element(signals.begin(), signals.end()) + 1;
    }
    const ldp::SymmetricMechanism mech(domain_size, args.epsilon);
    if (mech.gamma() <= 0.0) {
      std::cerr << "error: non-invertible channel (epsilon = 0)\n";
      return kExitError;
    }
    const auto hist = ldp::SignalHistogram::from_signals(domain_size, signals);
    if (args.closed_form) {
      const auto closed = ldp::closed_form_symmetric(hist, mech);
      report["closed_form"] = true;
      report["in_simplex"] = closed.in_simplex;
      report["p_hat"] = std::vector<double>(closed.p_star.data(), closed.p_star.data() + closed.p_star.size());
    } else {
      const ldp::SymmetricLogLoss loss(hist, mech);
      report = ldp::solver_report_to_json(ldp::pgd_solve(loss));
    }
  } else {
    manifest.inputs = {args.cohort_path};
    const ldp::Cohort cohort = ldp::read_cohort(args.cohort_path);
    config["epsilon"] = cohort.epsilon;
    const ldp::NonSymmetricMechanism mech(cohort.epsilon);
    const ldp::NonSymLogLoss loss(cohort.users, mech.eta());
    report = ldp::solver_report_to_json(ldp::pgd_solve(loss));
  }
  manifest.config_json = config.dump();
  report["manifest"] = json::parse(manifest.to_json_string());
  const std::string text = report.dump(2);
  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path);
    out << text << "\n";
  }
  std::cout << text << "\n";
  return kExitAccept;
}

struct ExperimentArgs {
  int experiment = 1;
  std::string out_dir = ".";
  std::uint64_t seed = kDefaultSeed;
  int trials = 0;  // 0 = config/default
  int T = 0;
  long long n = 0;
  double alpha = -1.0;
  double epsilon = -1.0;
  int threads = 1;
  int probe_trials = 400;
  std::string stub;  // e.g. "linear:3000" replaces the Monte-Carlo probe
  std::string config_path;
  std::vector<int> T_sweep;
  std::vector<long long> n_sweep;
  std::vector<double> alpha_sweep;
  std::vector<double> epsilon_sweep;
  std::vector<int> feature_sizes;
  // Which flags were set explicitly (flags > config file > defaults).
  bool trials_set = false, T_set = false, n_set = false, alpha_set = false, epsilon_set = false;
};

ldp::ExperimentConfig resolve_experiment_config(const ExperimentArgs& args, json* echo) {
  ldp::ExperimentConfig config;
  config.seed = args.seed;
  config.threads = args.threads;

  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + args.config_path);
    json file_config;
    in >> file_config;
    if (file_config.contains("T")) config.T = file_config["T"].get<int>();
    if (file_config.contains("n")) config.n = file_config["n"].get<long long>();
    if (file_config.contains("alpha")) config.alpha = file_config["alpha"].get<double>();
    if (file_config.contains("epsilon")) config.epsilon = file_config["epsilon"].get<double>();
    if (file_config.contains("trials")) config.trials = file_config["trials"].get<int>();
    if (file_config.contains("feature_sizes")) {
      config.feature_sizes = file_config["feature_sizes"].get<std::vector<int>>();
    }
  }

  if (args.T_set) config.T = args.T;
  if (args.n_set) config.n = args.n;
  if (args.alpha_set) config.alpha = args.alpha;
  if (args.epsilon_set) config.epsilon = args.epsilon;
  if (args.trials_set) config.trials = args.trials;
  config.T_sweep = args.T_sweep;
  config.n_sweep = args.n_sweep;
  config.alpha_sweep = args.alpha_sweep;
  config.epsilon_sweep = args.epsilon_sweep;
  if (!args.feature_sizes.empty()) config.feature_sizes = args.feature_sizes;

  // Default sweep grids when the invocation does not narrow the run.
  if (args.experiment == 1 && config.T_sweep.empty() && config.n_sweep.empty() && !args.T_set && !args.n_set) {
    config.T_sweep = {10, 25, 50, 100};
    config.n_sweep = {10, 100, 1000, 10000};
  } else if (args.experiment == 2 && config.alpha_sweep.empty() && config.n_sweep.empty() && !args.alpha_set &&
             !args.n_set) {
    config.alpha_sweep = {0.25, 0.2, 0.15, 0.1, 0.05};
    config.n_sweep = {2500, 5000, 7500, 10000, 20000};
  } else if (args.experiment == 3 && args.stub.empty() && config.T_sweep.empty() && config.alpha_sweep.empty() &&
             config.epsilon_sweep.empty() && !args.T_set && !args.alpha_set && !args.epsilon_set) {
    for (int T = 5; T <= 100; T += 5) config.T_sweep.push_back(T);
    for (int k = 1; k <= 10; ++k) config.alpha_sweep.push_back(0.05 * k);
    for (int k = 1; k <= 10; ++k) config.epsilon_sweep.push_back(0.05 * k);
  }

  json j;
  j["T"] = config.T;
  j["n"] = config.n;
  j["alpha"] = config.alpha;
  j["epsilon"] = config.epsilon;
  j["trials"] = config.trials;
  j["threads"] = config.threads;
  if (!config.T_sweep.empty()) j["T_sweep"] = config.T_sweep;
  if (!config.n_sweep.empty()) j["n_sweep"] = config.n_sweep;
  if (!config.alpha_sweep.empty()) j["alpha_sweep"] = config.alpha_sweep;
  if (!config.epsilon_sweep.empty()) j["epsilon_sweep"] = config.epsilon_sweep;
  if (args.experiment == 4) j["feature_sizes"] = config.feature_sizes;
  *echo = j;
  return config;
}

json basic_stats(const std::vector<double>& values) {
  json j;
  if (values.empty()) return j;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= std::max<std::size_t>(values.size() - 1, 1);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  j["count"] = values.size();
  j["mean"] = mean;
  j["variance"] = var;
  j["median"] = sorted[sorted.size() / 2];
  return j;
}

int run_experiment(const ExperimentArgs& args) {
  json config_echo;
  ldp::ExperimentConfig config = resolve_experiment_config(args, &config_echo);

  ldp::RunManifest manifest;
  manifest.subcommand = "experiment " + std::to_string(args.experiment);
  manifest.seed = args.seed;
  manifest.config_json = config_echo.dump();

  std::filesystem::create_directories(args.out_dir);
  const std::string base = args.out_dir + "/exp" + std::to_string(args.experiment);
  json summary;
  summary["seed"] = args.seed;
  summary["config"] = config_echo;

  if (args.experiment == 1 || args.experiment == 2) {
    const auto records = args.experiment == 1 ? ldp::run_null_experiment(config)
                                              : ldp::run_alternative_experiment(config);
    const std::string csv_path = base + "_trials.csv";
    manifest.outputs = {csv_path};
    ldp::write_trials_csv(csv_path, records, &manifest);
    std::vector<double> values;
    values.reserve(records.size());
    long long rejects = 0;
    for (const auto& r : records) {
      values.push_back(r.statistic);
      rejects += r.reject ? 1 : 0;
    }
    summary["statistic"] = basic_stats(values);
    summary["rejection_rate"] = static_cast<double>(rejects) / static_cast<double>(records.size());
  } else if (args.experiment == 3) {
    std::vector<ldp::SampleComplexityResult> results;
    if (!args.stub.empty()) {
      // Deterministic probe stubs for exercising the search machinery, e.g.
      // linear:3000 -> r(n) = min(1, n/3000).
      const auto colon = args.stub.find(':');
      if (colon == std::string::npos || args.stub.substr(0, colon) != "linear") {
        throw std::runtime_error("unknown stub spec: " + args.stub);
      }
      const double scale = std::stod(args.stub.substr(colon + 1));
      auto rate = [scale](long long n) { return std::min(1.0, static_cast<double>(n) / scale); };
      auto res = ldp::find_sample_complexity(rate);
      res.T = config.T;
      res.alpha = config.alpha;
      res.epsilon = config.epsilon;
      results.push_back(res);
      if (!res.bracketed) {
        std::cerr << "error: " << res.note << "\n";
        return kExitError;
      }
    } else {
      results = ldp::run_sample_complexity_experiment(config, args.probe_trials);
    }
    const std::string csv_path = base + "_complexity.csv";
    manifest.outputs = {csv_path};
    ldp::write_sample_complexity_csv(csv_path, results, &manifest);
    const auto fit = ldp::fit_exponents(results);
    json fit_json;
    if (fit.c_T.has_value()) fit_json["c_T"] = *fit.c_T;
    if (fit.c_alpha.has_value()) fit_json["c_alpha"] = *fit.c_alpha;
    if (fit.c_epsilon.has_value()) fit_json["c_epsilon"] = *fit.c_epsilon;
    summary["exponents"] = fit_json;
    json points = json::array();
    for (const auto& r : results) {
      json p;
      p["T"] = r.T;
      p["alpha"] = r.alpha;
      p["epsilon"] = r.epsilon;
      p["n_star"] = r.n_star;
      p["bracketed"] = r.bracketed;
      points.push_back(p);
    }
    summary["points"] = points;
  } else if (args.experiment == 4) {
    const auto records = ldp::run_q_experiment(config);
    const std::string csv_path = base + "_q.csv";
    manifest.outputs = {csv_path};
    ldp::write_q_trials_csv(csv_path, records, &manifest);
    std::vector<double> null_values;
    std::vector<double> alt_values;
    for (const auto& r : records) {
      (r.alternative_arm ? alt_values : null_values).push_back(r.q_value);
    }
    summary["null"] = basic_stats(null_values);
    summary["alternative"] = basic_stats(alt_values);
  } else {
    throw std::runtime_error("experiment must be 1, 2, 3 or 4");
  }

  summary["manifest"] = json::parse(manifest.to_json_string());
  const std::string summary_path = base + "_summary.json";
  {
    std::ofstream out(summary_path);
    out << summary.dump(2) << "\n";
  }
  std::cout << summary.dump(2) << "\n";
  return kExitAccept;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally private hypothesis testing toolkit"};
  app.require_subcommand(1);

  MechanizeArgs mechanize_args;
  auto* mechanize = app.add_subcommand("mechanize", "Randomize a sampled dataset into signals or a cohort");
  mechanize->add_option("--mechanism", mechanize_args.mechanism, "symmetric | nonsymmetric")
      ->required()
      ->check(CLI::IsMember({"symmetric", "nonsymmetric"}));
  mechanize->add_option("--dist", mechanize_args.dist_path, "distribution JSON {\"weights\": [...]}")->required();
  mechanize->add_option("--n", mechanize_args.n, "number of users")->required()->check(CLI::NonNegativeNumber);
  mechanize->add_option("--epsilon", mechanize_args.epsilon, "privacy parameter")->required();
  mechanize->add_option("--seed", mechanize_args.seed, "master seed");
  mechanize->add_option("--out", mechanize_args.out_path, "output signal/cohort file")->required();
  mechanize->add_option("--csv-out", mechanize_args.csv_path, "optional cohort CSV export");

  TestArgs test_args;
  auto* test_identity = app.add_subcommand("test-identity", "Identity test from a signal or cohort file");
  auto* test_independence = app.add_subcommand("test-independence", "Independence test from a signal or cohort file");
  for (auto* cmd : {test_identity, test_independence}) {
    cmd->add_option("--mechanism", test_args.mechanism, "symmetric | nonsymmetric")
        ->required()
        ->check(CLI::IsMember({"symmetric", "nonsymmetric"}));
    cmd->add_option("--hypothesis", test_args.hypothesis_path, "hypothesis JSON {p, alpha, epsilon, feature_sizes}")
        ->required();
    cmd->add_option("--signals", test_args.signals_path, "signal file (symmetric)");
    cmd->add_option("--cohort", test_args.cohort_path, "cohort file (nonsymmetric)");
    cmd->add_option("--seed", test_args.seed, "calibration seed");
  }

  MleArgs mle_args;
  auto* mle = app.add_subcommand("mle", "Maximum-likelihood estimate of the type distribution");
  mle->add_option("--mechanism", mle_args.mechanism, "symmetric | nonsymmetric")
      ->required()
      ->check(CLI::IsMember({"symmetric", "nonsymmetric"}));
  mle->add_option("--signals", mle_args.signals_path, "signal file (symmetric)");
  mle->add_option("--cohort", mle_args.cohort_path, "cohort file (nonsymmetric)");
  mle->add_option("--epsilon", mle_args.epsilon, "privacy parameter (symmetric)");
  mle->add_option("--T", mle_args.domain_size, "domain size (symmetric; inferred when omitted)");
  mle->add_flag("--closed-form", mle_args.closed_form, "use the closed-form solution instead of the solver");
  mle->add_option("--out", mle_args.out_path, "also write the report JSON here");

  ExperimentArgs exp_args;
  auto* experiment = app.add_subcommand("experiment", "Monte-Carlo experiments 1-4");
  experiment->add_option("id", exp_args.experiment, "experiment id (1-4)")->required()->check(CLI::Range(1, 4));
  experiment->add_option("--out-dir", exp_args.out_dir, "output directory");
  experiment->add_option("--seed", exp_args.seed, "master seed");
  auto* t_opt = experiment->add_option("--t", exp_args.trials, "trials per parameter point");
  auto* T_opt = experiment->add_option("--T", exp_args.T, "domain size");
  auto* n_opt = experiment->add_option("--n", exp_args.n, "cohort size");
  auto* a_opt = experiment->add_option("--alpha", exp_args.alpha, "distance parameter");
  auto* e_opt = experiment->add_option("--epsilon", exp_args.epsilon, "privacy parameter");
  experiment->add_option("--threads", exp_args.threads, "worker count (result-invariant)");
  experiment->add_option("--probe-trials", exp_args.probe_trials, "Monte-Carlo trials per search probe");
  experiment->add_option("--stub", exp_args.stub, "probe stub, e.g. linear:3000 (experiment 3)");
  experiment->add_option("--config", exp_args.config_path, "config JSON (flags override it)");
  experiment->add_option("--T-sweep", exp_args.T_sweep, "domain-size sweep")->delimiter(',');
  experiment->add_option("--n-sweep", exp_args.n_sweep, "cohort-size sweep")->delimiter(',');
  experiment->add_option("--alpha-sweep", exp_args.alpha_sweep, "alpha sweep")->delimiter(',');
  experiment->add_option("--epsilon-sweep", exp_args.epsilon_sweep, "epsilon sweep")->delimiter(',');
  experiment->add_option("--features", exp_args.feature_sizes, "feature sizes (experiment 4)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (mechanize->parsed()) return run_mechanize(mechanize_args);
    if (test_identity->parsed()) return run_test(test_args, /*independence=*/false);
    if (test_independence->parsed()) return run_test(test_args, /*independence=*/true);
    if (mle->parsed()) return run_mle(mle_args);
    if (experiment->parsed()) {
      exp_args.trials_set = t_opt->count() > 0;
      exp_args.T_set = T_opt->count() > 0;
      exp_args.n_set = n_opt->count() > 0;
      exp_args.alpha_set = a_opt->count() > 0;
      exp_args.epsilon_set = e_opt->count() > 0;
      return run_experiment(exp_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
