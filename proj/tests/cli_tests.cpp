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

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ldp/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_tool_path;
fs::path g_work_dir;

int run_tool(const std::string& args) {
  const std::string command = g_tool_path + " " + args + " >" + (g_work_dir / "stdout.txt").string() +
                              " 2>" + (g_work_dir / "stderr.txt").string();
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string tool_stdout() { return read_file(g_work_dir / "stdout.txt"); }

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace

TEST_CASE("mechanize symmetric is deterministic and feeds the tester") {
  const fs::path dist = g_work_dir / "dist.json";
  write_json(dist, json{{"weights", {0.5, 0.5}}});

  // Equal manifests (same seed, same output path) reproduce the bytes.
  const fs::path out_a = g_work_dir / "signals_a.csv";
  const std::string command = "mechanize --mechanism symmetric --dist " + dist.string() +
                              " --n 5 --epsilon 1.0986122886681098 --seed 99 --out " + out_a.string();
  CHECK(run_tool(command) == 0);
  const std::string first = read_file(out_a);
  CHECK(run_tool(command) == 0);
  CHECK(first == read_file(out_a));

  // Five signal lines below the header.
  std::ifstream in(out_a);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 7);  // manifest + header + 5 signals

  const fs::path hyp = g_work_dir / "hyp.json";
  write_json(hyp, json{{"p", {0.5, 0.5}}, {"alpha", 0.4}, {"epsilon", 1.0986122886681098}});
  const int code = run_tool("test-identity --mechanism symmetric --hypothesis " + hyp.string() +
                            " --signals " + out_a.string() + " --seed 5");
  CHECK((code == 0 || code == 3));  // tiny n: either decision is legitimate
}

TEST_CASE("mechanize with n = 0 writes an empty payload with a valid header") {
  const fs::path dist = g_work_dir / "dist0.json";
  write_json(dist, json{{"weights", {0.25, 0.25, 0.25, 0.25}}});
  const fs::path out = g_work_dir / "signals0.csv";
  CHECK(run_tool("mechanize --mechanism symmetric --dist " + dist.string() + " --n 0 --epsilon 0.5 --seed 1 --out " +
                 out.string()) == 0);
  CHECK(ldp::read_signals(out.string()).empty());

  const fs::path cohort = g_work_dir / "cohort0.bin";
  CHECK(run_tool("mechanize --mechanism nonsymmetric --dist " + dist.string() +
                 " --n 0 --epsilon 0.5 --seed 1 --out " + cohort.string()) == 0);
  const auto read_back = ldp::read_cohort(cohort.string());
  CHECK(read_back.domain_size == 4);
  CHECK(read_back.users.empty());
}

TEST_CASE("malformed distribution file is an error") {
  const fs::path bad = g_work_dir / "bad.json";
  {
    std::ofstream out(bad);
    out << "{\"weights\": [0.9, 0.9]}\n";
  }
  CHECK(run_tool("mechanize --mechanism symmetric --dist " + bad.string() + " --n 3 --epsilon 0.5 --out " +
                 (g_work_dir / "junk.csv").string()) == 2);
}

TEST_CASE("nonsymmetric cohort round trip and identity test exit codes") {
  const fs::path dist = g_work_dir / "dist_ns.json";
  write_json(dist, json{{"weights", {0.1, 0.2, 0.3, 0.4}}});
  const fs::path cohort_a = g_work_dir / "cohort_a.bin";
  const std::string base = "mechanize --mechanism nonsymmetric --dist " + dist.string() +
                           " --n 2000 --epsilon 0.5 --seed 17 --out " + cohort_a.string();
  CHECK(run_tool(base + " --csv-out " + (g_work_dir / "cohort_a.csv").string()) == 0);
  const std::string first = read_file(cohort_a);
  CHECK(run_tool(base + " --csv-out " + (g_work_dir / "cohort_a.csv").string()) == 0);
  CHECK(first == read_file(cohort_a));

  const fs::path hyp = g_work_dir / "hyp_ns.json";
  write_json(hyp, json{{"p", {0.1, 0.2, 0.3, 0.4}}, {"alpha", 0.45}, {"epsilon", 0.5}});
  CHECK(run_tool("test-identity --mechanism nonsymmetric --hypothesis " + hyp.string() + " --cohort " +
                 cohort_a.string()) == 0);

  // Mismatched domain size is an error (exit 2).
  const fs::path bad_hyp = g_work_dir / "hyp_bad.json";
  write_json(bad_hyp, json{{"p", {0.5, 0.5}}, {"alpha", 0.45}, {"epsilon", 0.5}});
  CHECK(run_tool("test-identity --mechanism nonsymmetric --hypothesis " + bad_hyp.string() + " --cohort " +
                 cohort_a.string()) == 2);

  // A hypothesis far from the truth is rejected (exit 3).
  const fs::path far_hyp = g_work_dir / "hyp_far.json";
  write_json(far_hyp, json{{"p", {0.7, 0.1, 0.1, 0.1}}, {"alpha", 0.2}, {"epsilon", 0.5}});
  CHECK(run_tool("test-identity --mechanism nonsymmetric --hypothesis " + far_hyp.string() + " --cohort " +
                 cohort_a.string()) == 3);
}

TEST_CASE("theta matching the hypothesis accepts with exit 0") {
  // A large cohort from the hypothesis itself should accept comfortably.
  const fs::path dist = g_work_dir / "dist_u10.json";
  json weights = json::array();
  for (int i = 0; i < 10; ++i) weights.push_back(0.1);
  write_json(dist, json{{"weights", weights}});
  const fs::path cohort = g_work_dir / "cohort_u10.bin";
  CHECK(run_tool("mechanize --mechanism nonsymmetric --dist " + dist.string() +
                 " --n 60000 --epsilon 0.5 --seed 3 --out " + cohort.string()) == 0);
  const fs::path hyp = g_work_dir / "hyp_u10.json";
  write_json(hyp, json{{"p", weights}, {"alpha", 0.3}, {"epsilon", 0.5}});
  CHECK(run_tool("test-identity --mechanism nonsymmetric --hypothesis " + hyp.string() + " --cohort " +
                 cohort.string()) == 0);
}

TEST_CASE("seeded null runs accept in at least two thirds of 30 seeds") {
  const fs::path dist = g_work_dir / "dist_seeded.json";
  json weights = json::array();
  for (int i = 0; i < 10; ++i) weights.push_back(0.1);
  write_json(dist, json{{"weights", weights}});
  const fs::path hyp = g_work_dir / "hyp_seeded.json";
  write_json(hyp, json{{"p", weights}, {"alpha", 0.3}, {"epsilon", 0.5}});

  int accepts = 0;
  for (int seed = 1; seed <= 30; ++seed) {
    const fs::path cohort = g_work_dir / "cohort_seeded.bin";
    REQUIRE(run_tool("mechanize --mechanism nonsymmetric --dist " + dist.string() +
                     " --n 20000 --epsilon 0.5 --seed " + std::to_string(seed) + " --out " + cohort.string()) == 0);
    if (run_tool("test-identity --mechanism nonsymmetric --hypothesis " + hyp.string() + " --cohort " +
                 cohort.string()) == 0) {
      ++accepts;
    }
  }
  CHECK(accepts >= 20);
}

TEST_CASE("independence testers through the cli") {
  const fs::path dist = g_work_dir / "dist_prod.json";
  write_json(dist, json{{"weights", {0.25, 0.25, 0.25, 0.25}}});
  const fs::path hyp = g_work_dir / "hyp_ind.json";
  write_json(hyp, json{{"feature_sizes", {2, 2}}, {"alpha", 0.3}, {"epsilon", 0.5}});

  const fs::path signals = g_work_dir / "signals_ind.csv";
  CHECK(run_tool("mechanize --mechanism symmetric --dist " + dist.string() +
                 " --n 60000 --epsilon 0.5 --seed 11 --out " + signals.string()) == 0);
  CHECK(run_tool("test-independence --mechanism symmetric --hypothesis " + hyp.string() + " --signals " +
                 signals.string() + " --seed 4") == 0);

  const fs::path cohort = g_work_dir / "cohort_ind.bin";
  CHECK(run_tool("mechanize --mechanism nonsymmetric --dist " + dist.string() +
                 " --n 20000 --epsilon 0.5 --seed 13 --out " + cohort.string()) == 0);
  CHECK(run_tool("test-independence --mechanism nonsymmetric --hypothesis " + hyp.string() + " --cohort " +
                 cohort.string()) == 0);

  // Strongly correlated data rejects.
  const fs::path diag = g_work_dir / "dist_diag.json";
  write_json(diag, json{{"weights", {0.5, 0.0, 0.0, 0.5}}});
  const fs::path diag_cohort = g_work_dir / "cohort_diag.bin";
  CHECK(run_tool("mechanize --mechanism nonsymmetric --dist " + diag.string() +
                 " --n 20000 --epsilon 0.5 --seed 19 --out " + diag_cohort.string()) == 0);
  CHECK(run_tool("test-independence --mechanism nonsymmetric --hypothesis " + hyp.string() + " --cohort " +
                 diag_cohort.string()) == 3);
}

TEST_CASE("library file writers") {
  // Histogram CSV.
  const auto hist = ldp::SignalHistogram::from_counts({3, 0, 7});
  const fs::path hist_path = g_work_dir / "hist.csv";
  ldp::write_histogram_csv(hist_path.string(), hist, nullptr);
  CHECK(read_file(hist_path) == "signal,count\n0,3\n1,0\n2,7\n");

  // Distribution JSON round trip.
  const fs::path dist_path = g_work_dir / "dist_rt.json";
  ldp::write_distribution_json(dist_path.string(), ldp::ProbVector({0.25, 0.75}));
  const auto back = ldp::read_distribution_json(dist_path.string());
  CHECK(back(0) == doctest::Approx(0.25));
  CHECK(back(1) == doctest::Approx(0.75));
}

TEST_CASE("mle subcommand") {
  const fs::path signals = g_work_dir / "mle_signals.csv";
  {
    // Histogram (6, 4) over T = 2 at eps = ln 3: the closed form is (0.7, 0.3).
    std::ofstream out(signals);
    out << "signal\n";
    for (int i = 0; i < 6; ++i) out << 0 << "\n";
    for (int i = 0; i < 4; ++i) out << 1 << "\n";
  }
  CHECK(run_tool("mle --mechanism symmetric --signals " + signals.string() +
                 " --epsilon 1.0986122886681098 --T 2 --closed-form") == 0);
  const json closed = json::parse(tool_stdout());
  CHECK(closed["in_simplex"].get<bool>());
  CHECK(closed["p_hat"][0].get<double>() == doctest::Approx(0.7).epsilon(1e-9));

  CHECK(run_tool("mle --mechanism symmetric --signals " + signals.string() +
                 " --epsilon 1.0986122886681098 --T 2") == 0);
  const json iterative = json::parse(tool_stdout());
  CHECK(iterative["converged"].get<bool>());
  // Iterative and closed-form routes agree within TV 1e-4.
  double tv = 0.0;
  for (int i = 0; i < 2; ++i) {
    tv += 0.5 * std::fabs(iterative["p_hat"][i].get<double>() - closed["p_hat"][i].get<double>());
  }
  CHECK(tv <= 1e-4);

  // eps = 0 has no invertible channel.
  CHECK(run_tool("mle --mechanism symmetric --signals " + signals.string() + " --epsilon 0 --T 2") == 2);
}

TEST_CASE("experiment subcommand determinism and config echo") {
  const fs::path dir_a = g_work_dir / "exp_a";
  const std::string command = "experiment 1 --t 100 --seed 7 --out-dir " + dir_a.string();
  CHECK(run_tool(command) == 0);
  const std::string trials_first = read_file(dir_a / "exp1_trials.csv");
  const std::string summary_first = read_file(dir_a / "exp1_summary.json");
  CHECK(run_tool(command) == 0);
  CHECK(trials_first == read_file(dir_a / "exp1_trials.csv"));
  CHECK(summary_first == read_file(dir_a / "exp1_summary.json"));

  const json summary = json::parse(read_file(dir_a / "exp1_summary.json"));
  CHECK(summary["config"]["T"].get<int>() == 10);
  CHECK(summary["config"]["alpha"].get<double>() == 0.2);
  CHECK(summary["config"]["n"].get<long long>() == 1000);
  CHECK(summary["config"]["epsilon"].get<double>() == 0.25);

  // Flags override config files.
  const fs::path cfg = g_work_dir / "exp_cfg.json";
  write_json(cfg, json{{"T", 4}, {"trials", 50}});
  const fs::path dir_c = g_work_dir / "exp_c";
  CHECK(run_tool("experiment 1 --config " + cfg.string() + " --T 6 --seed 7 --out-dir " + dir_c.string()) == 0);
  const json overridden = json::parse(read_file(dir_c / "exp1_summary.json"));
  CHECK(overridden["config"]["T"].get<int>() == 6);
  CHECK(overridden["config"]["trials"].get<int>() == 50);
}

TEST_CASE("experiment 3 stub search") {
  const fs::path dir = g_work_dir / "exp3_stub";
  CHECK(run_tool("experiment 3 --stub linear:3000 --seed 5 --out-dir " + dir.string()) == 0);
  const json summary = json::parse(read_file(dir / "exp3_summary.json"));
  const long long n_star = summary["points"][0]["n_star"].get<long long>();
  CHECK(n_star >= 950);
  CHECK(n_star <= 1030);
}

TEST_CASE("experiment 4 runs the paired arms") {
  const fs::path dir = g_work_dir / "exp4";
  CHECK(run_tool("experiment 4 --t 20 --n 2000 --seed 5 --features 2,2 --out-dir " + dir.string()) == 0);
  const json summary = json::parse(read_file(dir / "exp4_summary.json"));
  CHECK(summary["null"]["count"].get<int>() == 20);
  CHECK(summary["alternative"]["count"].get<int>() == 20);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_tests <path-to-ldptest> [doctest args]\n");
    return 1;
  }
  g_tool_path = argv[1];
  g_work_dir = fs::temp_directory_path() / "ldp_cli_tests";
  fs::remove_all(g_work_dir);
  fs::create_directories(g_work_dir);

  doctest::Context context;
  context.applyCommandLine(argc - 1, argv + 1);
  const int result = context.run();
  fs::remove_all(g_work_dir);
  return result;
}
