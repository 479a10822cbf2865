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

// raflow command-line harness. Links only the C API.

#include "raflow/raflow.h"

#include "CLI11.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int report(raflow_status status) {
  if (status == RAFLOW_OK) return kExitOk;
  std::cerr << "error (" << raflow_status_string(status) << "): " << raflow_last_error();
  const long index = raflow_last_error_index();
  if (index >= 0) std::cerr << " [record " << index << "]";
  std::cerr << '\n';
  return status == RAFLOW_E_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
}

struct RunOptions {
  std::string config;
  std::optional<std::string> problem, algo, trigger, mode, hold, out;
  std::optional<double> a, eps;
  std::optional<std::uint64_t> seed;
  bool plot_data = false;
  bool parallel = false;
  bool verbose = false;
};

int do_run(const RunOptions& o) {
  raflow_experiment* exp = nullptr;
  raflow_status st = o.config.empty()
                         ? raflow_experiment_default(o.problem ? o.problem->c_str() : "quadratic",
                                                     &exp)
                         : raflow_experiment_load(o.config.c_str(), &exp);
  if (st != RAFLOW_OK) return report(st);

  raflow_overrides ov{};
  ov.problem = o.problem ? o.problem->c_str() : nullptr;
  ov.algo = o.algo ? o.algo->c_str() : nullptr;
  ov.trigger = o.trigger ? o.trigger->c_str() : nullptr;
  ov.mode = o.mode ? o.mode->c_str() : nullptr;
  ov.hold = o.hold ? o.hold->c_str() : nullptr;
  ov.out = o.out ? o.out->c_str() : nullptr;
  ov.has_a = o.a.has_value();
  ov.a = o.a.value_or(0.0);
  ov.has_eps = o.eps.has_value();
  ov.eps = o.eps.value_or(0.0);
  ov.has_seed = o.seed.has_value();
  ov.seed = o.seed.value_or(0);
  st = raflow_experiment_override(exp, &ov);
  if (st == RAFLOW_OK) {
    st = raflow_experiment_options(exp, o.plot_data ? 1 : -1, o.parallel ? 1 : -1,
                                   o.verbose ? 1 : -1);
  }
  char* summary = nullptr;
  if (st == RAFLOW_OK) st = raflow_experiment_run(exp, &summary);
  raflow_experiment_free(exp);
  if (st != RAFLOW_OK) return report(st);
  std::cout << summary;
  raflow_string_free(summary);
  return kExitOk;
}

struct VerifyOptions {
  std::string problem = "all";
  std::uint64_t seed = 20210;
  std::string dataset;
  double corrupt_mu = 1.0;
  std::string json;
};

int do_verify(const VerifyOptions& o) {
  raflow_verify_options opts;
  raflow_verify_options_default(&opts);
  opts.quadratic = o.problem == "all" || o.problem == "quadratic";
  opts.logistic = o.problem == "all" || o.problem == "logistic";
  opts.seed = o.seed;
  opts.dataset_path = o.dataset.empty() ? nullptr : o.dataset.c_str();
  opts.corrupt_mu = o.corrupt_mu;
  int passed = 0;
  char* table = nullptr;
  char* json = nullptr;
  const raflow_status st =
      raflow_verify(&opts, &passed, &table, o.json.empty() ? nullptr : &json);
  if (st != RAFLOW_OK) return report(st);
  std::cout << table;
  raflow_string_free(table);
  if (json) {
    std::ofstream out(o.json);
    out << json << '\n';
    raflow_string_free(json);
    if (!out) {
      std::cerr << "error: cannot write '" << o.json << "'\n";
      return kExitFailure;
    }
  }
  std::cout << (passed ? "verify: all checks passed\n" : "verify: FAILED\n");
  return passed ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource-aware discretizations of the displaced-gradient heavy-ball flow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(raflow_version()));

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "run the configured experiments");
  run_cmd->add_option("--config", run.config, "JSON experiment config")->check(CLI::ExistingFile);
  run_cmd->add_option("--problem", run.problem, "quadratic | logistic")
      ->check(CLI::IsMember({"quadratic", "logistic"}));
  run_cmd->add_option("--algo", run.algo,
                      "dg | adg | hoh | nesterov | heavy-ball | continuous (single run)");
  run_cmd->add_option("--trigger", run.trigger, "d | p");
  run_cmd->add_option("--mode", run.mode, "ET | ST");
  run_cmd->add_option("--hold", run.hold, "zoh | hoh");
  run_cmd->add_option("--a", run.a, "gradient displacement a (also the ceiling a_max)");
  run_cmd->add_option("--eps", run.eps, "stop when ||grad f|| < eps");
  run_cmd->add_option("--seed", run.seed, "dataset seed");
  run_cmd->add_option("--out", run.out, "output directory");
  run_cmd->add_flag("--plot-data", run.plot_data, "also write plotdata.csv");
  run_cmd->add_flag("--parallel", run.parallel, "run the experiments concurrently");
  run_cmd->add_flag("-v,--verbose", run.verbose, "write per-step trigger records (JSON lines)");

  std::uint64_t gen_seed = 20210;
  std::string gen_out;
  CLI::App* gen_cmd = app.add_subcommand("gen-dataset", "write the seeded logistic dataset");
  gen_cmd->add_option("--seed", gen_seed, "PRNG seed");
  gen_cmd->add_option("--out", gen_out, "output JSON path")->required();

  VerifyOptions verify;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  verify_cmd->add_option("--problem", verify.problem, "quadratic | logistic | all")
      ->check(CLI::IsMember({"quadratic", "logistic", "all"}));
  verify_cmd->add_option("--seed", verify.seed, "sampling and dataset seed");
  verify_cmd->add_option("--dataset", verify.dataset, "logistic dataset JSON")
      ->check(CLI::ExistingFile);
  verify_cmd->add_option("--corrupt-mu", verify.corrupt_mu,
                         "multiply the mu reported to the triggers (fault injection)")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--json", verify.json, "also write the report as JSON");

  std::vector<std::string> plot_inputs;
  std::string plot_out;
  CLI::App* plot_cmd = app.add_subcommand("plotdata", "long-format plot data from run CSVs");
  plot_cmd->add_option("csv", plot_inputs, "run CSV files")->required();
  plot_cmd->add_option("--out", plot_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*run_cmd) return do_run(run);
  if (*gen_cmd) return report(raflow_gen_dataset(gen_seed, gen_out.c_str()));
  if (*verify_cmd) return do_verify(verify);
  if (*plot_cmd) {
    std::vector<const char*> paths;
    for (const std::string& p : plot_inputs) paths.push_back(p.c_str());
    return report(raflow_plotdata(paths.data(), paths.size(), plot_out.c_str()));
  }
  return kExitUsage;
}
