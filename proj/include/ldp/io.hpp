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

#ifndef LDP_IO_HPP_
#define LDP_IO_HPP_

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ldp/experiments.hpp"
#include "ldp/mech_nonsymmetric.hpp"
#include "ldp/mech_symmetric.hpp"
#include "ldp/mle.hpp"
#include "ldp/prob.hpp"
#include "ldp/testers.hpp"

namespace ldp {

inline constexpr const char* kToolVersion = "0.1.0";

// Provenance record echoed into every output artifact: re-running a command
// with an equal manifest must reproduce the data section byte for byte.
struct RunManifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string config_json;  // resolved configuration, serialized
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  std::string to_json_string() const;
};

// -- Hypothesis and distribution files ---------------------------------------

// {"weights": [...]}
ProbVector read_distribution_json(const std::string& path);
void write_distribution_json(const std::string& path, const ProbVector& p);

// {"p": [...], "alpha": ..., "epsilon": ..., "feature_sizes": [...]}
// p is required for identity hypotheses, feature_sizes for independence.
struct HypothesisFile {
  std::optional<ProbVector> p;
  double alpha = 0.0;
  double epsilon = 0.0;
  std::vector<int> feature_sizes;
};

HypothesisFile read_hypothesis_json(const std::string& path);

// -- Signal files -------------------------------------------------------------

// CSV with a "signal" column (optionally preceded by "# ..." comment lines
// carrying the manifest); plain one-integer-per-line files are also accepted.
void write_signals_csv(const std::string& path, std::span<const int> signals, const RunManifest* manifest);
std::vector<int> read_signals(const std::string& path);

// Histogram CSV: header "signal,count".
void write_histogram_csv(const std::string& path, const SignalHistogram& hist, const RunManifest* manifest);

// -- Cohort files --------------------------------------------------------------

// Binary layout: magic "LDPC", u32 version, u32 T, u64 n, f64 epsilon,
// u32 manifest length, manifest bytes; then per user ceil(T/8) pattern bytes
// (bit set = +1, coordinate i at byte i/8, bit i%8) and one signal byte
// (0x01 = +1, 0xFF = -1).
void write_cohort(const std::string& path, const Cohort& cohort, const RunManifest* manifest);
Cohort read_cohort(const std::string& path);

// CSV export: user_id, y, pattern_hex (most significant nibble first).
void write_cohort_csv(const std::string& path, const Cohort& cohort, const RunManifest* manifest);

// -- Result serialization -------------------------------------------------------

nlohmann::json test_outcome_to_json(const TestOutcome& outcome);
nlohmann::json solver_report_to_json(const SolverReport& report);

// Experiment outputs. CSV schemas:
//   statistic trials:    trial,T,n,epsilon,alpha,P
//   sample complexity:   T,alpha,epsilon,n_L,n_U,n_star,rejection_rate
//   paired study:        trial,arm,Q
void write_trials_csv(const std::string& path, std::span<const TrialRecord> records, const RunManifest* manifest);
void write_sample_complexity_csv(const std::string& path, std::span<const SampleComplexityResult> results,
                                 const RunManifest* manifest);
void write_q_trials_csv(const std::string& path, std::span<const QTrialRecord> records, const RunManifest* manifest);

}  // namespace ldp

#endif  // LDP_IO_HPP_
