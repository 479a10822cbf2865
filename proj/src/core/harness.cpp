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

#include "raflow/harness.hpp"

#include "raflow/lyapunov.hpp"
#include "raflow/quadrature.hpp"

#include "json.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>

namespace raflow {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Vec benchmark_diag() {
  Vec d(2);
  d << 1e-2, 1e2;
  return d;
}

double benchmark_displacement(const std::string& problem) {
  return problem == "logistic" ? 0.025 : 0.1;
}

void check_problem(const std::string& problem) {
  if (problem != "quadratic" && problem != "logistic") {
    throw Error(ErrorCode::InvalidArgument,
                "problem must be 'quadratic' or 'logistic', got '" + problem + "'");
  }
}

bool is_triggered(Algorithm a) {
  return a == Algorithm::DisplacedGradient || a == Algorithm::AdaptiveDG ||
         a == Algorithm::AdaptiveHOH;
}

RunSpec triggered_run(const std::string& label, Algorithm algorithm, TriggerKind trigger,
                      double a) {
  RunSpec r;
  r.label = label;
  r.algorithm = algorithm;
  r.config.trigger = trigger;
  r.config.mode = TriggerMode::ET;
  r.config.a0 = a;
  r.config.a_max = a;
  return r;
}

}  // namespace

TriggerKind parse_trigger(const std::string& text) {
  const std::string t = lower(text);
  if (t == "d" || t == "derivative") return TriggerKind::Derivative;
  if (t == "p" || t == "performance") return TriggerKind::Performance;
  throw Error(ErrorCode::InvalidArgument, "trigger must be d or p, got '" + text + "'");
}

TriggerMode parse_mode(const std::string& text) {
  const std::string t = lower(text);
  if (t == "et") return TriggerMode::ET;
  if (t == "st") return TriggerMode::ST;
  throw Error(ErrorCode::InvalidArgument, "mode must be ET or ST, got '" + text + "'");
}

Hold parse_hold(const std::string& text) {
  const std::string t = lower(text);
  if (t == "zoh") return Hold::ZOH;
  if (t == "hoh") return Hold::HOH;
  throw Error(ErrorCode::InvalidArgument, "hold must be zoh or hoh, got '" + text + "'");
}

ExperimentConfig default_experiment(const std::string& problem) {
  check_problem(problem);
  ExperimentConfig c;
  c.problem = problem;
  const double a = benchmark_displacement(problem);
  c.runs.push_back(triggered_run("dg-p", Algorithm::AdaptiveDG, TriggerKind::Performance, a));
  c.runs.push_back(triggered_run("hoh-d", Algorithm::AdaptiveHOH, TriggerKind::Derivative, a));
  c.runs.push_back(triggered_run("hoh-p", Algorithm::AdaptiveHOH, TriggerKind::Performance, a));
  RunSpec nesterov;
  nesterov.label = "nesterov";
  nesterov.algorithm = Algorithm::Nesterov;
  c.runs.push_back(nesterov);
  RunSpec heavy;
  heavy.label = "heavy-ball";
  heavy.algorithm = Algorithm::HeavyBall;
  c.runs.push_back(heavy);
  return c;
}

namespace {

Vec vec_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a nonempty array");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

// Applies AlgoConfig keys found in `j`; returns true when "a" was given.
bool apply_algo_fields(const json& j, AlgoConfig& c, bool allow_run_keys) {
  bool a_given = false;
  bool a_max_given = false;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "trigger") c.trigger = parse_trigger(v.get<std::string>());
    else if (key == "mode") c.mode = parse_mode(v.get<std::string>());
    else if (key == "a") { c.a0 = v.get<double>(); a_given = true; }
    else if (key == "a_max") {
      a_max_given = true;
      c.a_max = v.is_null() || (v.is_string() && v.get<std::string>() == "none")
                    ? std::numeric_limits<double>::infinity()
                    : v.get<double>();
    }
    else if (key == "epsilon") c.epsilon = v.get<double>();
    else if (key == "r_i") c.r_i = v.get<double>();
    else if (key == "r_d") c.r_d = v.get<double>();
    else if (key == "tau") c.tau = v.get<double>();
    else if (key == "max_iters") c.max_iters = v.get<long>();
    else if (key == "s") c.s = v.get<double>();
    else if (key == "alpha") c.alpha = v.get<double>();
    else if (key == "t_max") c.t_max = v.get<double>();
    else if (key == "baseline_step") c.baseline_step = v.get<double>();
    else if (key == "horizon") c.horizon = v.get<double>();
    else if (key == "rk4_step") c.rk4_step = v.get<double>();
    else if (allow_run_keys && (key == "label" || key == "algorithm")) continue;
    else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  if (a_given && !a_max_given) c.a_max = c.a0;
  return a_given;
}

}  // namespace

ExperimentConfig experiment_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  try {
    const std::string problem = j.value("problem", std::string("quadratic"));
    ExperimentConfig c = default_experiment(problem);
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      if (key == "problem" || key == "defaults" || key == "runs") continue;
      if (key == "quadratic_diag") c.quadratic_diag = vec_from_json(v, "quadratic_diag");
      else if (key == "dataset") c.dataset_path = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "x0") {
        if (v.is_number()) c.x0 = Vec::Constant(1, v.get<double>());  // broadcast later
        else c.x0 = vec_from_json(v, "x0");
      }
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "plot_data") c.plot_data = v.get<bool>();
      else if (key == "parallel") c.parallel = v.get<bool>();
      else if (key == "trigger_log") c.trigger_log = v.get<bool>();
      else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
    AlgoConfig defaults;
    defaults.a0 = benchmark_displacement(problem);
    defaults.a_max = defaults.a0;
    if (j.contains("defaults")) apply_algo_fields(j.at("defaults"), defaults, false);
    if (j.contains("runs")) {
      c.runs.clear();
      for (const json& r : j.at("runs")) {
        RunSpec spec;
        spec.algorithm = algorithm_from_string(r.at("algorithm").get<std::string>());
        spec.config = defaults;
        const bool a_given = apply_algo_fields(r, spec.config, true);
        if (spec.algorithm == Algorithm::DisplacedGradient && !a_given &&
            !(j.contains("defaults") && j.at("defaults").contains("a"))) {
          spec.config.a0 = -1.0;  // resolved to a*_2
        }
        spec.label = r.value("label", to_string(spec.algorithm) + "-" +
                                          to_string(spec.config.trigger) + "-" +
                                          to_string(spec.config.mode));
        c.runs.push_back(spec);
      }
    } else {
      for (RunSpec& r : c.runs) {
        const TriggerKind keep = r.config.trigger;
        r.config = defaults;
        r.config.trigger = keep;
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config field has the wrong type: ") + e.what());
  }
}

void apply_overrides(ExperimentConfig& config, const FlagOverrides& flags) {
  if (flags.problem) {
    check_problem(*flags.problem);
    config.problem = *flags.problem;
  }
  if (flags.seed) config.seed = *flags.seed;
  if (flags.out) config.output_dir = *flags.out;
  if (flags.trigger) (void)parse_trigger(*flags.trigger);
  if (flags.mode) (void)parse_mode(*flags.mode);
  if (flags.hold) (void)parse_hold(*flags.hold);
  if (flags.algo) {
    const Algorithm algorithm = algorithm_from_string(*flags.algo);
    AlgoConfig base;
    base.a0 = benchmark_displacement(config.problem);
    base.a_max = base.a0;
    for (const RunSpec& r : config.runs) {
      if (is_triggered(r.algorithm)) {
        base = r.config;
        break;
      }
    }
    if (algorithm == Algorithm::DisplacedGradient && !flags.a) base.a0 = -1.0;
    RunSpec spec;
    spec.algorithm = algorithm;
    spec.config = base;
    config.runs = {spec};
  }
  for (RunSpec& r : config.runs) {
    AlgoConfig& c = r.config;
    if (flags.eps) c.epsilon = *flags.eps;
    if (!is_triggered(r.algorithm)) continue;
    if (flags.trigger) c.trigger = parse_trigger(*flags.trigger);
    if (flags.mode) c.mode = parse_mode(*flags.mode);
    if (flags.a) {
      c.a0 = *flags.a;
      c.a_max = *flags.a;
    }
    if (flags.hold) {
      const Hold hold = parse_hold(*flags.hold);
      if (hold == Hold::HOH && r.algorithm == Algorithm::DisplacedGradient) {
        throw Error(ErrorCode::InvalidArgument,
                    "the fixed-displacement algorithm uses the zero-order hold only");
      }
      if (r.algorithm != Algorithm::DisplacedGradient) {
        r.algorithm = hold == Hold::HOH ? Algorithm::AdaptiveHOH : Algorithm::AdaptiveDG;
      }
    }
  }
  if (flags.algo || flags.trigger || flags.mode || flags.hold) {
    for (RunSpec& r : config.runs) {
      if (is_triggered(r.algorithm)) {
        r.label = to_string(r.algorithm) + "-" + to_string(r.config.trigger) + "-" +
                  to_string(r.config.mode);
      } else {
        r.label = to_string(r.algorithm);
      }
    }
  }
}

ObjectivePtr build_objective(const ExperimentConfig& config) {
  check_problem(config.problem);
  if (config.problem == "quadratic") {
    return make_quadratic(config.quadratic_diag.size() ? config.quadratic_diag : benchmark_diag());
  }
  const LogisticDataset data = config.dataset_path.empty() ? generate_dataset(config.seed)
                                                           : load_dataset(config.dataset_path);
  return make_logistic(data);
}

Vec initial_point(const ExperimentConfig& config, const Objective& objective) {
  const Eigen::Index n = objective.dimension();
  if (config.x0.size() == 0) return Vec::Constant(n, 50.0);
  if (config.x0.size() == 1 && n != 1) return Vec::Constant(n, config.x0[0]);
  if (config.x0.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "x0 length does not match the problem dimension");
  }
  return config.x0;
}

RunSummary summarize(const RunTrace& trace, const std::string& label) {
  RunSummary s;
  s.label = label;
  s.algorithm = trace.name;
  s.iterations = trace.iterations();
  s.wall_seconds = trace.wall_seconds;
  s.converged = trace.converged;
  s.tau = trace.tau;
  if (!trace.records.empty()) {
    s.final_grad_norm = trace.records.back().grad_norm;
    s.total_time = trace.records.back().t;
  }
  const long n = trace.iterations();
  if (n > 0) {
    s.min_delta = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (long k = 0; k < n; ++k) {
      const double d = trace.records[static_cast<std::size_t>(k)].delta;
      s.min_delta = std::min(s.min_delta, d);
      s.max_delta = std::max(s.max_delta, d);
      sum += d;
    }
    s.mean_delta = sum / static_cast<double>(n);
  }
  return s;
}

std::string summaries_to_json(const std::vector<RunSummary>& summaries) {
  ordered_json runs = ordered_json::array();
  for (const RunSummary& s : summaries) {
    ordered_json r;
    r["label"] = s.label;
    r["algorithm"] = s.algorithm;
    r["csv"] = s.csv_path;
    r["iterations"] = s.iterations;
    r["wall_seconds"] = s.wall_seconds;
    r["final_grad_norm"] = s.final_grad_norm;
    r["min_delta"] = s.min_delta;
    r["max_delta"] = s.max_delta;
    r["mean_delta"] = s.mean_delta;
    r["total_time"] = s.total_time;
    r["tau"] = s.tau;
    r["converged"] = s.converged;
    runs.push_back(r);
  }
  ordered_json root;
  root["runs"] = runs;
  return root.dump(2) + "\n";
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return out;
}

RunSummary execute_run(const RunSpec& spec, const ExperimentConfig& config,
                       const ObjectivePtr& objective, const Vec& x0,
                       const std::filesystem::path& dir) {
  AlgoConfig algo = spec.config;
  if (is_triggered(spec.algorithm) && algo.a0 < 0.0) {
    const double s = algo.s > 0.0 ? algo.s : FlowParams::default_s(*objective);
    const double a2 =
        constants_from(*objective, FlowParams::make(*objective, s), algo.alpha).a2_star;
    algo.a0 = a2;
    algo.a_max = a2;
  }
  std::unique_ptr<std::ofstream> log;
  if (config.trigger_log && is_triggered(spec.algorithm)) {
    log = std::make_unique<std::ofstream>(open_output(dir / (spec.label + ".triggers.jsonl")));
    algo.trigger_log = [&log](const std::string& line) { *log << line << '\n'; };
  }
  const RunTrace trace = run_algorithm(spec.algorithm, x0, algo, objective);
  const std::filesystem::path csv = dir / (spec.label + ".csv");
  std::ofstream out = open_output(csv);
  write_trace_csv(trace, out);
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + csv.string() + "'");
  RunSummary summary = summarize(trace, spec.label);
  summary.csv_path = csv.string();
  return summary;
}

}  // namespace

std::vector<RunSummary> cmd_run(const ExperimentConfig& config) {
  if (config.runs.empty()) throw Error(ErrorCode::InvalidArgument, "no runs configured");
  for (const RunSpec& r : config.runs) {
    if (r.label.empty()) throw Error(ErrorCode::InvalidArgument, "run label must not be empty");
    if (is_triggered(r.algorithm)) {
      AlgoConfig probe = r.config;
      if (probe.a0 < 0.0) probe.a0 = 0.0;
      probe.validate();
    }
  }
  const ObjectivePtr objective = build_objective(config);
  const Vec x0 = initial_point(config, *objective);
  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());

  std::vector<RunSummary> summaries;
  if (config.parallel) {
    std::vector<std::future<RunSummary>> jobs;
    for (const RunSpec& spec : config.runs) {
      jobs.push_back(std::async(std::launch::async, [&, spec] {
        return execute_run(spec, config, objective, x0, dir);
      }));
    }
    for (auto& job : jobs) summaries.push_back(job.get());
  } else {
    for (const RunSpec& spec : config.runs) {
      summaries.push_back(execute_run(spec, config, objective, x0, dir));
    }
  }
  std::ofstream summary = open_output(dir / "summary.json");
  summary << summaries_to_json(summaries);
  if (config.plot_data) {
    std::vector<std::string> paths;
    for (const RunSummary& s : summaries) paths.push_back(s.csv_path);
    std::ofstream plot = open_output(dir / "plotdata.csv");
    cmd_plotdata(paths, plot);
  }
  return summaries;
}

void cmd_gen_dataset(std::uint64_t seed, const std::string& path) {
  save_dataset(generate_dataset(seed), path);
}

// ------------------------------------------------------------------ verify

namespace {

// Unit eigenvector of the smallest eigenvalue of the finite-difference Hessian at x.
Vec softest_direction(const Objective& objective, const Vec& x) {
  const Eigen::Index n = objective.dimension();
  Eigen::MatrixXd h(n, n);
  const double step = 1e-5 * (1.0 + x.norm());
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec up = x, down = x;
    up[j] += step;
    down[j] -= step;
    h.col(j) = (objective.gradient(up) - objective.gradient(down)) / (2.0 * step);
  }
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  return eig.eigenvectors().col(0);
}

}  // namespace

std::vector<State> sample_states(const Objective& objective, int count, std::uint64_t seed) {
  if (!objective.minimizer()) {
    throw Error(ErrorCode::InvalidArgument, "state sampling needs the minimizer");
  }
  const Vec& x_star = *objective.minimizer();
  const Eigen::Index n = objective.dimension();
  const Vec soft = softest_direction(objective, x_star);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  auto direction = [&] {
    Vec d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = normal(rng);
    return Vec(d / d.norm());
  };
  std::vector<State> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double rx = std::pow(10.0, -3.0 + 4.7 * unit(rng));
    const double rv = std::pow(10.0, -4.0 + 5.0 * unit(rng));
    if (i % 4 == 3) {
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      const Vec v = rx * (sign * unit(rng) * soft + 0.1 * unit(rng) * direction());
      out.push_back({x_star + sign * rx * soft, v});
      continue;
    }
    const Vec dx = direction();
    out.push_back({x_star + rx * dx, rv * direction()});
  }
  return out;
}

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerifyReport::table() const {
  std::ostringstream out;
  std::size_t width = 5;
  for (const CheckResult& c : checks) width = std::max(width, c.name.size());
  out << std::left << std::setw(static_cast<int>(width)) << "check"
      << "  result  evaluated  skipped  worst\n";
  for (const CheckResult& c : checks) {
    out << std::left << std::setw(static_cast<int>(width)) << c.name << "  "
        << (c.passed ? "PASS  " : "FAIL  ") << "  " << std::setw(9) << c.evaluated << "  "
        << std::setw(7) << c.skipped << "  " << std::setprecision(3) << c.worst;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
  }
  return out.str();
}

std::string VerifyReport::to_json() const {
  ordered_json arr = ordered_json::array();
  for (const CheckResult& c : checks) {
    ordered_json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["evaluated"] = c.evaluated;
    j["skipped"] = c.skipped;
    j["worst"] = c.worst;
    j["detail"] = c.detail;
    arr.push_back(j);
  }
  ordered_json root;
  root["passed"] = all_passed();
  root["checks"] = arr;
  return root.dump(2);
}

namespace {

struct VerifyProblem {
  std::string name;
  ObjectivePtr truth;
  ObjectivePtr reported;  // constants possibly corrupted
  FlowParams params;
  TriggerConstants constants;
  std::shared_ptr<LyapunovContext> ctx;
  std::vector<State> states;
  double t_max = 0.0;
};

constexpr std::array<BoundKind, 8> kAllKinds = {{
    {TriggerKind::Derivative, TriggerMode::ST, Hold::ZOH},
    {TriggerKind::Derivative, TriggerMode::ET, Hold::ZOH},
    {TriggerKind::Performance, TriggerMode::ST, Hold::ZOH},
    {TriggerKind::Performance, TriggerMode::ET, Hold::ZOH},
    {TriggerKind::Derivative, TriggerMode::ST, Hold::HOH},
    {TriggerKind::Derivative, TriggerMode::ET, Hold::HOH},
    {TriggerKind::Performance, TriggerMode::ST, Hold::HOH},
    {TriggerKind::Performance, TriggerMode::ET, Hold::HOH},
}};

bool near_optimum(const State& p, const Vec& x_star) {
  return (p.x - x_star).norm() + p.v.norm() < 1e-9;
}

double displacement_for(int i, const TriggerConstants& c, const std::string& problem) {
  switch (i % 4) {
    case 0: return 0.0;
    case 1: return 0.5 * c.a2_star;
    case 2: return c.a2_star;
    default: return benchmark_displacement(problem);
  }
}

void note(CheckResult& r, double violation) {
  r.worst = std::max(r.worst, violation);
  if (violation > 0.0) r.passed = false;
}

CheckResult check_soundness(const VerifyProblem& vp, BoundKind kind, int grid) {
  CheckResult r;
  r.name = "soundness/" + to_string(kind) + "/" + vp.name;
  r.worst = -std::numeric_limits<double>::infinity();
  const Objective& f = *vp.reported;
  const double kappa = vp.params.sqrt_mu / 4.0;
  for (std::size_t i = 0; i < vp.states.size(); ++i) {
    const State& p_hat = vp.states[i];
    if (near_optimum(p_hat, vp.ctx->minimizer())) {
      ++r.skipped;
      continue;
    }
    const double a = displacement_for(static_cast<int>(i), vp.constants, vp.name);
    StepBound bound(kind, p_hat, a, vp.params, f);
    if (!(bound.constant_term() < 0.0)) {
      ++r.skipped;
      continue;
    }
    const double step = step_size(bound, vp.t_max).step;
    const double v0 = lyapunov_value(p_hat, *vp.ctx);
    const State zoh_velocity{p_hat.v, -bound.sample().w};
    for (int j = 0; j < grid; ++j) {
      const double t = step * static_cast<double>(j) / static_cast<double>(grid - 1);
      const State pt = bound.trajectory(t);
      const double v = lyapunov_value(pt, *vp.ctx);
      const double tol = 1e-9 * (1.0 + std::abs(v));
      double excess;
      if (kind.trigger == TriggerKind::Derivative) {
        const State vel = kind.hold == Hold::ZOH
                              ? zoh_velocity
                              : hoh_velocity(pt, bound.sample().grad_disp, vp.params);
        excess = decay_along(pt, vel, *vp.ctx) - bound(t);
      } else {
        const double decay = std::exp(-kappa * t);
        excess = v - decay * v0 - decay * bound(t);
      }
      ++r.evaluated;
      note(r, (excess - tol) / (1.0 + std::abs(v)));
    }
  }
  if (r.evaluated == 0) r.passed = false;
  return r;
}

CheckResult check_orderings(const VerifyProblem& vp, int count) {
  CheckResult r;
  r.name = "step-ordering/" + vp.name;
  r.worst = -std::numeric_limits<double>::infinity();
  const Objective& f = *vp.reported;
  for (int i = 0; i < count && i < static_cast<int>(vp.states.size()); ++i) {
    const State& p = vp.states[static_cast<std::size_t>(i)];
    if (near_optimum(p, vp.ctx->minimizer())) {
      ++r.skipped;
      continue;
    }
    const double a = displacement_for(i, vp.constants, vp.name);
    for (Hold hold : {Hold::ZOH, Hold::HOH}) {
      auto step = [&](TriggerKind k, TriggerMode m) {
        return step_size(StepBound({k, m, hold}, p, a, vp.params, f), vp.t_max).step;
      };
      if (!(StepBound({TriggerKind::Derivative, TriggerMode::ST, hold}, p, a, vp.params, f)
                .constant_term() < 0.0)) {
        ++r.skipped;
        continue;
      }
      const double d_st = step(TriggerKind::Derivative, TriggerMode::ST);
      const double d_et = step(TriggerKind::Derivative, TriggerMode::ET);
      const double p_st = step(TriggerKind::Performance, TriggerMode::ST);
      const double p_et = step(TriggerKind::Performance, TriggerMode::ET);
      auto gap = [](double small, double large) {
        return (small - large) / (1e-12 * (1.0 + large));
      };
      r.evaluated += 3;
      note(r, std::max({gap(d_st, d_et), gap(d_st, p_st), gap(p_st, p_et)}) - 1.0);
    }
  }
  if (r.evaluated == 0) r.passed = false;
  r.detail = "violation in units of 1e-12 (1 + t), minus 1";
  return r;
}

CheckResult check_miet(const VerifyProblem& vp, int count) {
  CheckResult r;
  r.name = "miet/" + vp.name;
  r.worst = -std::numeric_limits<double>::infinity();
  const TriggerConstants& c = vp.constants;
  for (int i = 0; i < 1024; ++i) {
    const double m = c.miet(c.a2_star * i / 1023.0);
    if (!(m > 0.0)) {
      r.passed = false;
      r.detail = "MIET not positive on the grid";
    }
  }
  const std::vector<State> states =
      sample_states(*vp.truth, count, 0x5eed0000ULL + static_cast<std::uint64_t>(count));
  for (double a : {0.0, 0.5 * c.a2_star, c.a2_star}) {
    const double miet = c.miet(a);
    for (const State& p : states) {
      if (near_optimum(p, vp.ctx->minimizer())) {
        ++r.skipped;
        continue;
      }
      const Quadratic q = zoh_st_coefficients(sample_at(p, a, vp.params, *vp.reported),
                                              vp.params.with_displacement(a));
      ++r.evaluated;
      if (!(q.c0 < 0.0)) {
        note(r, 1.0);
        r.detail = "C >= 0 at a <= a*_2";
        continue;
      }
      const double step = q.positive_root().value_or(vp.t_max);
      note(r, (miet - step) / miet);
    }
  }
  return r;
}

CheckResult check_hoh_rk4(const VerifyProblem& vp, int count) {
  CheckResult r;
  r.name = "hoh-vs-rk4/" + vp.name;
  r.worst = 0.0;
  const double a = vp.constants.a2_star;
  for (int i = 0; i < count && i < static_cast<int>(vp.states.size()); ++i) {
    const State& p = vp.states[static_cast<std::size_t>(i)];
    const FlowParams fp = vp.params.with_displacement(a);
    const Vec g = vp.truth->gradient(p.x + a * p.v);
    const ReferenceTrace ref = rk4_reference(
        [&](const State& q) { return hoh_velocity(q, g, fp); }, p, 0.1, 1e-5);
    for (std::size_t k = 0; k < ref.times.size(); k += 10) {
      const State h = hoh_trajectory(p, g, ref.times[k], fp);
      const double err = std::max((h.x - ref.states[k].x).lpNorm<Eigen::Infinity>(),
                                  (h.v - ref.states[k].v).lpNorm<Eigen::Infinity>());
      r.worst = std::max(r.worst, err);
      ++r.evaluated;
    }
  }
  r.passed = r.worst <= 1e-8 && r.evaluated > 0;
  return r;
}

CheckResult check_quadrature(const VerifyProblem& vp, int count) {
  CheckResult r;
  r.name = "closed-form-vs-quadrature/" + vp.name;
  r.worst = 0.0;
  const Objective& f = *vp.reported;
  const double kappa = vp.params.sqrt_mu / 4.0;
  std::mt19937_64 rng(vp.states.size() * 7919ULL + 17ULL);
  std::uniform_real_distribution<double> unit(0.05, 2.0);
  for (int i = 0; i < count && i < static_cast<int>(vp.states.size()); ++i) {
    const State& p = vp.states[static_cast<std::size_t>(i)];
    const Hold hold = i % 2 ? Hold::HOH : Hold::ZOH;
    const double a = displacement_for(i, vp.constants, vp.name);
    const StepBound st({TriggerKind::Performance, TriggerMode::ST, hold}, p, a, vp.params, f);
    const StepBound et({TriggerKind::Performance, TriggerMode::ET, hold}, p, a, vp.params, f);
    if (!(st.constant_term() < 0.0)) {
      ++r.skipped;
      continue;
    }
    const double t = unit(rng) * step_size(st, vp.t_max).step;
    auto compare = [&](const StepBound& b, const std::function<double(double)>& integrand) {
      double mass = 0.0;
      constexpr int panels = 512;
      for (int k = 0; k < panels; ++k) {
        mass += std::abs(integrand((k + 0.5) * t / panels)) * t / panels;
      }
      const double reference = adaptive_simpson(integrand, 0.0, t, 1e-11 * mass);
      const double err = std::abs(b(t) - reference) / mass;
      r.worst = std::max(r.worst, err);
      ++r.evaluated;
    };
    compare(st, [&](double z) { return std::exp(kappa * z) * st.st_coeffs()(z); });
    compare(et, [&](double z) { return std::exp(kappa * z) * et.derivative_at(z); });
  }
  r.passed = r.worst <= 1e-8 && r.evaluated > 0;
  r.detail = "error relative to int |integrand|";
  return r;
}

CheckResult check_a1(const VerifyProblem& vp) {
  CheckResult r;
  r.name = "a1-dual/" + vp.name;
  const TriggerConstants& c = vp.constants;
  const double z = c.z_root_plus();
  const double via_g = c.g(z);
  const double rel = std::abs(c.a1_star - via_g) / c.a1_star;
  const double lo = c.beta[0] / c.beta[1];
  double worst = -std::numeric_limits<double>::infinity();
  constexpr int n = 1000000;
  for (int i = 1; i <= n; ++i) {
    const double zi = lo + 1e3 * static_cast<double>(i) / n;
    worst = std::max(worst, via_g - 1e-9 - c.g(zi));
  }
  r.evaluated = n + 1;
  r.worst = std::max(rel / 1e-12, worst > 0.0 ? 1.0 + worst : 0.0);
  r.passed = rel <= 1e-12 && worst <= 0.0;
  r.detail = "relative gap " + std::to_string(rel);
  return r;
}

CheckResult check_gradients(const VerifyProblem& vp, int count) {
  CheckResult r;
  r.name = "gradient-check/" + vp.name;
  for (int i = 0; i < count && i < static_cast<int>(vp.states.size()); ++i) {
    r.worst = std::max(r.worst, check_gradient(*vp.truth, vp.states[static_cast<std::size_t>(i)].x));
    ++r.evaluated;
  }
  r.passed = r.worst <= 1e-5 && r.evaluated > 0;
  return r;
}

}  // namespace

VerifyReport cmd_verify(const VerifyConfig& config) {
  if (!(config.corrupt_mu > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "mu corruption factor must be positive");
  }
  VerifyReport report;
  for (const std::string& name : config.problems) {
    ExperimentConfig ec = default_experiment(name);
    ec.seed = config.seed;
    ec.dataset_path = config.dataset_path;
    VerifyProblem vp;
    vp.name = name;
    vp.truth = build_objective(ec);
    vp.reported = config.corrupt_mu == 1.0
                      ? vp.truth
                      : with_constants(vp.truth, vp.truth->mu() * config.corrupt_mu,
                                       std::max(vp.truth->lipschitz(),
                                                vp.truth->mu() * config.corrupt_mu));
    vp.params = FlowParams::make(*vp.reported, FlowParams::default_s(*vp.reported));
    vp.constants = constants_from(*vp.reported, vp.params);
    vp.ctx = std::make_shared<LyapunovContext>(vp.reported, vp.params);
    const int n = std::max({config.soundness_states, config.ordering_states,
                            config.rk4_states, config.quadrature_samples,
                            config.gradient_points});
    vp.states = sample_states(*vp.truth, n, config.seed ^ std::hash<std::string>{}(name));
    vp.t_max = default_t_max(vp.params.mu);

    report.checks.push_back(check_gradients(vp, config.gradient_points));
    report.checks.push_back(check_a1(vp));
    for (BoundKind kind : kAllKinds) {
      VerifyProblem limited = vp;
      limited.states.resize(static_cast<std::size_t>(
          std::min<int>(config.soundness_states, static_cast<int>(vp.states.size()))));
      report.checks.push_back(check_soundness(limited, kind, config.grid_points));
    }
    report.checks.push_back(check_orderings(vp, config.ordering_states));
    report.checks.push_back(check_miet(vp, config.miet_states));
    report.checks.push_back(check_hoh_rk4(vp, config.rk4_states));
    report.checks.push_back(check_quadrature(vp, config.quadrature_samples));
  }
  return report;
}

// ---------------------------------------------------------------- plotdata

void cmd_plotdata(const std::vector<std::string>& csv_paths, std::ostream& out) {
  out << "series,k,t,log10_f_gap,log10_lyapunov,delta,clamped\n";
  out << std::setprecision(17);
  for (const std::string& path : csv_paths) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
    const std::string series = std::filesystem::path(path).stem().string();
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "'" + path + "' is empty");
    std::vector<std::string> header;
    {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    auto column = [&](const std::string& name) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) {
        throw Error(ErrorCode::Io, "'" + path + "' has no column '" + name + "'");
      }
      return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ck = column("k"), ct = column("t"), cd = column("delta"),
                      cf = column("f_gap"), cl = column("lyapunov");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      cells.resize(header.size());
      bool clamped = false;
      auto log_cell = [&](const std::string& text) -> std::string {
        if (text.empty()) return "";
        const double v = std::stod(text);
        double lg = v > 0.0 ? std::log10(v) : -std::numeric_limits<double>::infinity();
        if (lg < -16.0) {
          lg = -16.0;
          clamped = true;
        }
        std::ostringstream o;
        o << std::setprecision(17) << lg;
        return o.str();
      };
      const std::string lf = log_cell(cells[cf]);
      const std::string ll = log_cell(cells[cl]);
      out << series << ',' << cells[ck] << ',' << cells[ct] << ',' << lf << ',' << ll << ','
          << cells[cd] << ',' << (clamped ? 1 : 0) << '\n';
    }
  }
}

}  // namespace raflow
