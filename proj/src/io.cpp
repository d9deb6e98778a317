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

#include "ldp/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ldp {

namespace {

using nlohmann::json;

constexpr char kCohortMagic[4] = {'L', 'D', 'P', 'C'};
constexpr std::uint32_t kCohortVersion = 1;

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

void write_manifest_comment(std::ofstream& out, const RunManifest* manifest) {
  if (manifest != nullptr) out << "# manifest: " << manifest->to_json_string() << "\n";
}

json parse_json_file(const std::string& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated cohort file");
  return value;
}

// Formats doubles with enough digits to round-trip, so re-runs are
// byte-identical without locale or precision surprises.
std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string RunManifest::to_json_string() const {
  json j;
  j["tool"] = "ldptest";
  j["version"] = kToolVersion;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  return j.dump();
}

ProbVector read_distribution_json(const std::string& path) {
  const json j = parse_json_file(path);
  if (!j.contains("weights") || !j["weights"].is_array()) {
    throw std::runtime_error("distribution file needs a \"weights\" array: " + path);
  }
  const auto& w = j["weights"];
  Vector v(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) v(static_cast<Eigen::Index>(i)) = w[i].get<double>();
  return ProbVector(std::move(v));
}

void write_distribution_json(const std::string& path, const ProbVector& p) {
  json j;
  j["weights"] = std::vector<double>(p.weights().data(), p.weights().data() + p.dim());
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

HypothesisFile read_hypothesis_json(const std::string& path) {
  const json j = parse_json_file(path);
  HypothesisFile h;
  if (j.contains("p")) {
    const auto& w = j["p"];
    Vector v(static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) v(static_cast<Eigen::Index>(i)) = w[i].get<double>();
    h.p = ProbVector(std::move(v));
  }
  if (!j.contains("alpha") || !j.contains("epsilon")) {
    throw std::runtime_error("hypothesis file needs \"alpha\" and \"epsilon\": " + path);
  }
  h.alpha = j["alpha"].get<double>();
  h.epsilon = j["epsilon"].get<double>();
  if (j.contains("feature_sizes")) {
    for (const auto& s : j["feature_sizes"]) h.feature_sizes.push_back(s.get<int>());
  }
  return h;
}

void write_signals_csv(const std::string& path, std::span<const int> signals, const RunManifest* manifest) {
  auto out = open_out(path);
  write_manifest_comment(out, manifest);
  out << "signal\n";
  for (int s : signals) out << s << "\n";
}

std::vector<int> read_signals(const std::string& path) {
  auto in = open_in(path);
  std::vector<int> signals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line == "signal") continue;  // CSV header
    signals.push_back(std::stoi(line));
  }
  return signals;
}

void write_histogram_csv(const std::string& path, const SignalHistogram& hist, const RunManifest* manifest) {
  auto out = open_out(path);
  write_manifest_comment(out, manifest);
  out << "signal,count\n";
  for (std::size_t s = 0; s < hist.counts.size(); ++s) out << s << "," << hist.counts[s] << "\n";
}

void write_cohort(const std::string& path, const Cohort& cohort, const RunManifest* manifest) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kCohortMagic, 4);
  write_raw(out, kCohortVersion);
  write_raw(out, static_cast<std::uint32_t>(cohort.domain_size));
  write_raw(out, static_cast<std::uint64_t>(cohort.users.size()));
  write_raw(out, cohort.epsilon);
  const std::string manifest_str = manifest != nullptr ? manifest->to_json_string() : std::string();
  write_raw(out, static_cast<std::uint32_t>(manifest_str.size()));
  out.write(manifest_str.data(), static_cast<std::streamsize>(manifest_str.size()));

  const int pattern_bytes = (cohort.domain_size + 7) / 8;
  for (const NonSymUser& u : cohort.users) {
    const auto& words = u.pattern.words();
    for (int b = 0; b < pattern_bytes; ++b) {
      const std::uint8_t byte = static_cast<std::uint8_t>(
          (words[static_cast<std::size_t>(b) / 8] >> (8 * (static_cast<unsigned>(b) % 8))) & 0xffu);
      write_raw(out, byte);
    }
    write_raw(out, static_cast<std::uint8_t>(u.y == 1 ? 0x01 : 0xff));
  }
}

Cohort read_cohort(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCohortMagic, 4) != 0) throw std::runtime_error("not a cohort file: " + path);
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kCohortVersion) throw std::runtime_error("unsupported cohort version in " + path);
  const auto domain_size = read_raw<std::uint32_t>(in);
  const auto n = read_raw<std::uint64_t>(in);
  const auto epsilon = read_raw<double>(in);
  const auto manifest_len = read_raw<std::uint32_t>(in);
  in.ignore(manifest_len);
  if (domain_size < 1) throw std::runtime_error("cohort file with empty domain: " + path);

  Cohort cohort;
  cohort.domain_size = static_cast<int>(domain_size);
  cohort.epsilon = epsilon;
  cohort.users.reserve(n);
  const int pattern_bytes = (cohort.domain_size + 7) / 8;
  const std::size_t word_count = static_cast<std::size_t>((cohort.domain_size + 63) / 64);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<std::uint64_t> words(word_count, 0);
    for (int b = 0; b < pattern_bytes; ++b) {
      const auto byte = read_raw<std::uint8_t>(in);
      words[static_cast<std::size_t>(b) / 8] |= static_cast<std::uint64_t>(byte)
                                               << (8 * (static_cast<unsigned>(b) % 8));
    }
    const auto y_byte = read_raw<std::uint8_t>(in);
    if (y_byte != 0x01 && y_byte != 0xff) throw std::runtime_error("corrupt signal byte in " + path);
    NonSymUser user{PatternBits::from_words(cohort.domain_size, std::move(words)), y_byte == 0x01 ? 1 : -1};
    cohort.users.push_back(std::move(user));
  }
  return cohort;
}

void write_cohort_csv(const std::string& path, const Cohort& cohort, const RunManifest* manifest) {
  auto out = open_out(path);
  write_manifest_comment(out, manifest);
  out << "user_id,y,pattern_hex\n";
  const int pattern_bytes = (cohort.domain_size + 7) / 8;
  for (std::size_t i = 0; i < cohort.users.size(); ++i) {
    const NonSymUser& u = cohort.users[i];
    out << i << "," << u.y << ",";
    const auto& words = u.pattern.words();
    static const char* hex = "0123456789abcdef";
    for (int b = pattern_bytes - 1; b >= 0; --b) {
      const std::uint8_t byte = static_cast<std::uint8_t>(
          (words[static_cast<std::size_t>(b) / 8] >> (8 * (static_cast<unsigned>(b) % 8))) & 0xffu);
      out << hex[byte >> 4] << hex[byte & 0xf];
    }
    out << "\n";
  }
}

json test_outcome_to_json(const TestOutcome& outcome) {
  json j;
  switch (outcome.decision) {
    case Decision::kAccept: j["decision"] = "accept"; break;
    case Decision::kReject: j["decision"] = "reject"; break;
    case Decision::kError: j["decision"] = "error"; break;
  }
  if (outcome.statistic.has_value()) j["statistic"] = *outcome.statistic;
  if (outcome.threshold.has_value()) j["threshold"] = *outcome.threshold;
  if (!outcome.error.empty()) j["error"] = outcome.error;
  j["diagnostics"] = json::object();
  for (const auto& [key, value] : outcome.diagnostics) j["diagnostics"][key] = value;
  return j;
}

json solver_report_to_json(const SolverReport& report) {
  json j;
  j["iterations"] = report.iterations;
  j["final_loss"] = report.final_loss;
  j["grad_norm"] = report.grad_mapping_norm;
  j["converged"] = report.converged;
  j["diverged"] = report.diverged;
  if (!report.message.empty()) j["message"] = report.message;
  j["p_hat"] = std::vector<double>(report.p_hat.data(), report.p_hat.data() + report.p_hat.size());
  return j;
}

void write_trials_csv(const std::string& path, std::span<const TrialRecord> records, const RunManifest* manifest) {
  auto out = open_out(path);
  write_manifest_comment(out, manifest);
  out << "trial,T,n,epsilon,alpha,P\n";
  for (const TrialRecord& r : records) {
    out << r.trial << "," << r.T << "," << r.n << "," << fmt(r.epsilon) << "," << fmt(r.alpha) << ","
        << fmt(r.statistic) << "\n";
  }
}

void write_sample_complexity_csv(const std::string& path, std::span<const SampleComplexityResult> results,
                                 const RunManifest* manifest) {
  auto out = open_out(path);
  write_manifest_comment(out, manifest);
  out << "T,alpha,epsilon,n_L,n_U,n_star,rejection_rate\n";
  for (const SampleComplexityResult& r : results) {
    out << r.T << "," << fmt(r.alpha) << "," << fmt(r.epsilon) << "," << r.n_lower << "," << r.n_upper << ","
        << r.n_star << "," << fmt(r.rate_at_n_star) << "\n";
  }
}

void write_q_trials_csv(const std::string& path, std::span<const QTrialRecord> records, const RunManifest* manifest) {
  auto out = open_out(path);
  write_manifest_comment(out, manifest);
  out << "trial,arm,Q\n";
  for (const QTrialRecord& r : records) {
    out << r.trial << "," << (r.alternative_arm ? "alternative" : "null") << "," << fmt(r.q_value) << "\n";
  }
}

}  // namespace ldp
