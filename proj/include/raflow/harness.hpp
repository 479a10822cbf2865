// Copyright 2026 The raflow Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "raflow/algorithms.hpp"
#include "raflow/objectives.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace raflow {

inline constexpr std::uint64_t kDefaultSeed = 20210;

struct RunSpec {
  std::string label;
  Algorithm algorithm = Algorithm::AdaptiveHOH;
  AlgoConfig config;
};

struct ExperimentConfig {
  std::string problem = "quadratic";  // quadratic | logistic
  Vec quadratic_diag;                 // empty: (1e-2, 1e2)
  std::string dataset_path;           // logistic; empty: generate from seed
  std::uint64_t seed = kDefaultSeed;
  Vec x0;                             // empty: 50 * ones
  std::string output_dir = "out";
  bool plot_data = false;
  bool parallel = false;
  bool trigger_log = false;
  std::vector<RunSpec> runs;
};

/// Problem defaults: a = 0.1 (quadratic) or 0.025 (logistic), ceiling a_max = a,
/// run set {DG^p, HOH^d, HOH^p, Nesterov, heavy-ball}.
[[nodiscard]] ExperimentConfig default_experiment(const std::string& problem);

/// Parses the JSON config; missing fields take the problem defaults.
/// Throws InvalidArgument on malformed input.
[[nodiscard]] ExperimentConfig experiment_from_json(const std::string& text);

struct FlagOverrides {
  std::optional<std::string> problem;
  std::optional<std::string> algo;
  std::optional<std::string> trigger;
  std::optional<std::string> mode;
  std::optional<std::string> hold;
  std::optional<double> a;
  std::optional<double> eps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

/// `algo` replaces the run set by one run; the other flags apply to every run.
void apply_overrides(ExperimentConfig& config, const FlagOverrides& flags);

[[nodiscard]] TriggerKind parse_trigger(const std::string& text);
[[nodiscard]] TriggerMode parse_mode(const std::string& text);
[[nodiscard]] Hold parse_hold(const std::string& text);

[[nodiscard]] ObjectivePtr build_objective(const ExperimentConfig& config);
[[nodiscard]] Vec initial_point(const ExperimentConfig& config, const Objective& objective);

struct RunSummary {
  std::string label;
  std::string algorithm;
  std::string csv_path;
  long iterations = 0;
  double wall_seconds = 0.0;
  double final_grad_norm = 0.0;
  double min_delta = 0.0;
  double max_delta = 0.0;
  double mean_delta = 0.0;
  double total_time = 0.0;
  double tau = 0.0;
  bool converged = false;
};

[[nodiscard]] RunSummary summarize(const RunTrace& trace, const std::string& label);
[[nodiscard]] std::string summaries_to_json(const std::vector<RunSummary>& summaries);

/// Runs every configured algorithm; writes <out>/<label>.csv, <out>/summary.json
/// and, when enabled, <out>/plotdata.csv and <out>/<label>.triggers.jsonl.
std::vector<RunSummary> cmd_run(const ExperimentConfig& config);

/// Writes the dataset JSON for `seed` to `path`.
void cmd_gen_dataset(std::uint64_t seed, const std::string& path);

struct VerifyConfig {
  std::vector<std::string> problems{"quadratic", "logistic"};
  std::uint64_t seed = kDefaultSeed;
  std::string dataset_path;
  int soundness_states = 200;
  int grid_points = 100;
  int ordering_states = 100;
  int miet_states = 1000;
  int rk4_states = 50;
  int quadrature_samples = 100;
  int gradient_points = 100;
  double corrupt_mu = 1.0;  // multiplies the mu reported to the triggers
};

struct CheckResult {
  std::string name;
  bool passed = true;
  int evaluated = 0;
  int skipped = 0;
  double worst = 0.0;  // largest violation (or error) seen
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  [[nodiscard]] bool all_passed() const;
  [[nodiscard]] std::string table() const;
  [[nodiscard]] std::string to_json() const;
};

[[nodiscard]] VerifyReport cmd_verify(const VerifyConfig& config);

/// Log-uniform offsets around the minimizer: ||x - x*|| = 10^U(-3, 1.7),
/// ||v|| = 10^U(-4, 1), uniformly random directions. Every fourth state puts
/// x - x* on the lowest-curvature eigenvector u of the Hessian at x*, with v
/// mostly along u, pointing away from x*.
[[nodiscard]] std::vector<State> sample_states(const Objective& objective, int count,
                                               std::uint64_t seed);

/// Long format: series,k,t,log10_f_gap,log10_lyapunov,delta,clamped.
/// Series names are the file stems. log10 values are clamped at -16.
void cmd_plotdata(const std::vector<std::string>& csv_paths, std::ostream& out);

}  // namespace raflow
