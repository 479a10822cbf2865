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

#include "raflow/raflow.h"

#include "raflow/algorithms.hpp"
#include "raflow/harness.hpp"
#include "raflow/objectives.hpp"
#include "raflow/triggers.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <sstream>
#include <string>

struct raflow_objective {
  raflow::ObjectivePtr impl;
};

struct raflow_trace {
  raflow::RunTrace impl;
};

struct raflow_experiment {
  raflow::ExperimentConfig impl;
};

namespace {

thread_local std::string g_last_error;
thread_local long g_last_index = -1;

raflow_status status_of(raflow::ErrorCode code) {
  switch (code) {
    case raflow::ErrorCode::InvalidArgument: return RAFLOW_E_INVALID_ARGUMENT;
    case raflow::ErrorCode::InvalidObjective: return RAFLOW_E_INVALID_OBJECTIVE;
    case raflow::ErrorCode::Numeric: return RAFLOW_E_NUMERIC;
    case raflow::ErrorCode::TriggerInfeasible: return RAFLOW_E_TRIGGER_INFEASIBLE;
    case raflow::ErrorCode::Io: return RAFLOW_E_IO;
    case raflow::ErrorCode::CheckFailed: return RAFLOW_E_CHECK_FAILED;
  }
  return RAFLOW_E_INTERNAL;
}

raflow_status fail(raflow_status status, const std::string& message, long index = -1) {
  g_last_error = message;
  g_last_index = index;
  return status;
}

template <class F>
raflow_status guarded(F&& body) {
  g_last_error.clear();
  g_last_index = -1;
  try {
    body();
    return RAFLOW_OK;
  } catch (const raflow::NumericError& e) {
    return fail(RAFLOW_E_NUMERIC, e.what(), e.index());
  } catch (const raflow::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RAFLOW_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RAFLOW_E_INTERNAL, e.what());
  } catch (...) {
    return fail(RAFLOW_E_INTERNAL, "unknown exception");
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw raflow::Error(raflow::ErrorCode::InvalidArgument, message);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

raflow::Vec copy_in(const double* data, Eigen::Index n) {
  return Eigen::Map<const raflow::Vec>(data, n);
}

raflow::TriggerKind to_kind(raflow_trigger t) {
  require(t == RAFLOW_DERIVATIVE || t == RAFLOW_PERFORMANCE, "unknown trigger");
  return t == RAFLOW_DERIVATIVE ? raflow::TriggerKind::Derivative
                                : raflow::TriggerKind::Performance;
}

raflow::TriggerMode to_mode(raflow_mode m) {
  require(m == RAFLOW_ET || m == RAFLOW_ST, "unknown mode");
  return m == RAFLOW_ET ? raflow::TriggerMode::ET : raflow::TriggerMode::ST;
}

raflow::Hold to_hold(raflow_hold h) {
  require(h == RAFLOW_ZOH || h == RAFLOW_HOH, "unknown hold");
  return h == RAFLOW_ZOH ? raflow::Hold::ZOH : raflow::Hold::HOH;
}

raflow::Algorithm to_algorithm(raflow_algorithm a) {
  switch (a) {
    case RAFLOW_ALGO_DG: return raflow::Algorithm::DisplacedGradient;
    case RAFLOW_ALGO_ADAPTIVE_DG: return raflow::Algorithm::AdaptiveDG;
    case RAFLOW_ALGO_ADAPTIVE_HOH: return raflow::Algorithm::AdaptiveHOH;
    case RAFLOW_ALGO_NESTEROV: return raflow::Algorithm::Nesterov;
    case RAFLOW_ALGO_HEAVY_BALL: return raflow::Algorithm::HeavyBall;
    case RAFLOW_ALGO_CONTINUOUS: return raflow::Algorithm::Continuous;
  }
  throw raflow::Error(raflow::ErrorCode::InvalidArgument, "unknown algorithm");
}

raflow::FlowParams params_for(const raflow::Objective& f, double s) {
  return raflow::FlowParams::make(f, s > 0.0 ? s : raflow::FlowParams::default_s(f));
}

void store_objective(raflow::ObjectivePtr impl, raflow_objective** out) {
  require(out != nullptr, "out must not be NULL");
  *out = new raflow_objective{std::move(impl)};
}

const raflow::Objective& deref(const raflow_objective* o) {
  require(o != nullptr && o->impl != nullptr, "objective handle is NULL");
  return *o->impl;
}

}  // namespace

extern "C" {

const char* raflow_version(void) { return "1.0.0"; }

const char* raflow_status_string(raflow_status status) {
  switch (status) {
    case RAFLOW_OK: return "ok";
    case RAFLOW_E_INVALID_ARGUMENT: return "invalid argument";
    case RAFLOW_E_INVALID_OBJECTIVE: return "invalid objective";
    case RAFLOW_E_NUMERIC: return "numeric error";
    case RAFLOW_E_TRIGGER_INFEASIBLE: return "trigger infeasible";
    case RAFLOW_E_IO: return "i/o error";
    case RAFLOW_E_CHECK_FAILED: return "check failed";
    case RAFLOW_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* raflow_last_error(void) { return g_last_error.c_str(); }

long raflow_last_error_index(void) { return g_last_index; }

void raflow_string_free(char* text) { std::free(text); }

// ---- objectives

raflow_status raflow_objective_quadratic(const double* diag, size_t n, raflow_objective** out) {
  return guarded([&] {
    require(diag != nullptr && n > 0, "diag must be a nonempty array");
    store_objective(raflow::make_quadratic(copy_in(diag, static_cast<Eigen::Index>(n))), out);
  });
}

raflow_status raflow_objective_logistic_seeded(uint64_t seed, raflow_objective** out) {
  return guarded(
      [&] { store_objective(raflow::make_logistic(raflow::generate_dataset(seed)), out); });
}

raflow_status raflow_objective_logistic_load(const char* dataset_path, raflow_objective** out) {
  return guarded([&] {
    require(dataset_path != nullptr, "dataset path is NULL");
    store_objective(raflow::make_logistic(raflow::load_dataset(dataset_path)), out);
  });
}

raflow_status raflow_objective_custom(size_t n, double mu, double lipschitz,
                                      raflow_value_fn value, raflow_gradient_fn gradient,
                                      void* user, const double* minimizer,
                                      raflow_objective** out) {
  return guarded([&] {
    require(n > 0 && value != nullptr && gradient != nullptr,
            "custom objective needs a dimension and both callbacks");
    std::optional<raflow::Vec> x_star;
    if (minimizer) x_star = copy_in(minimizer, static_cast<Eigen::Index>(n));
    auto f = [value, user](const raflow::Vec& x) {
      return value(x.data(), static_cast<size_t>(x.size()), user);
    };
    auto g = [gradient, user](const raflow::Vec& x, raflow::Vec& g_out) {
      g_out.resize(x.size());
      gradient(x.data(), static_cast<size_t>(x.size()), g_out.data(), user);
    };
    store_objective(raflow::make_custom(static_cast<Eigen::Index>(n), mu, lipschitz, f, g,
                                        std::move(x_star)),
                    out);
  });
}

raflow_status raflow_objective_with_constants(const raflow_objective* base, double mu,
                                              double lipschitz, raflow_objective** out) {
  return guarded([&] {
    deref(base);
    store_objective(raflow::with_constants(base->impl, mu, lipschitz), out);
  });
}

void raflow_objective_free(raflow_objective* objective) { delete objective; }

raflow_status raflow_objective_info(const raflow_objective* objective, size_t* dimension,
                                    double* mu, double* lipschitz) {
  return guarded([&] {
    const raflow::Objective& f = deref(objective);
    if (dimension) *dimension = static_cast<size_t>(f.dimension());
    if (mu) *mu = f.mu();
    if (lipschitz) *lipschitz = f.lipschitz();
  });
}

raflow_status raflow_objective_value(const raflow_objective* objective, const double* x,
                                     double* out) {
  return guarded([&] {
    const raflow::Objective& f = deref(objective);
    require(x != nullptr && out != nullptr, "x and out must not be NULL");
    *out = f.value(copy_in(x, f.dimension()));
  });
}

raflow_status raflow_objective_gradient(const raflow_objective* objective, const double* x,
                                        double* out) {
  return guarded([&] {
    const raflow::Objective& f = deref(objective);
    require(x != nullptr && out != nullptr, "x and out must not be NULL");
    const raflow::Vec g = f.gradient(copy_in(x, f.dimension()));
    std::copy(g.data(), g.data() + g.size(), out);
  });
}

raflow_status raflow_objective_minimizer(const raflow_objective* objective, double* out) {
  return guarded([&] {
    const raflow::Objective& f = deref(objective);
    require(out != nullptr, "out must not be NULL");
    require(f.minimizer().has_value(), "the minimizer of this objective is unknown");
    std::copy(f.minimizer()->data(), f.minimizer()->data() + f.dimension(), out);
  });
}

// ---- triggers

raflow_status raflow_trigger_constants(const raflow_objective* objective, double s,
                                       double alpha, raflow_constants* out) {
  return guarded([&] {
    const raflow::Objective& f = deref(objective);
    require(out != nullptr, "out must not be NULL");
    const raflow::FlowParams p = params_for(f, s);
    const raflow::TriggerConstants c = raflow::constants_from(f, p, alpha);
    *out = {p.s, c.a1_star, c.a2_star, c.default_tau()};
  });
}

raflow_status raflow_miet(const raflow_objective* objective, double s, double alpha, double a,
                          double* out) {
  return guarded([&] {
    const raflow::Objective& f = deref(objective);
    require(out != nullptr, "out must not be NULL");
    *out = raflow::constants_from(f, params_for(f, s), alpha).miet(a);
  });
}

raflow_status raflow_step_size(const raflow_objective* objective, raflow_trigger trigger,
                               raflow_mode mode, raflow_hold hold, const double* x,
                               const double* v, double a, double s, double t_max, double* step,
                               int* capped) {
  return guarded([&] {
    const raflow::Objective& f = deref(objective);
    require(x != nullptr && v != nullptr && step != nullptr, "x, v and step must not be NULL");
    const raflow::State p_hat{copy_in(x, f.dimension()), copy_in(v, f.dimension())};
    const raflow::StepBound bound({to_kind(trigger), to_mode(mode), to_hold(hold)}, p_hat, a,
                                  params_for(f, s), f);
    const raflow::StepResult r =
        raflow::step_size(bound, t_max > 0.0 ? t_max : raflow::default_t_max(f.mu()));
    *step = r.step;
    if (capped) *capped = r.capped ? 1 : 0;
  });
}

// ---- algorithms

void raflow_algo_config_default(raflow_algo_config* config) {
  if (!config) return;
  const raflow::AlgoConfig d;
  config->trigger = d.trigger == raflow::TriggerKind::Derivative ? RAFLOW_DERIVATIVE
                                                                 : RAFLOW_PERFORMANCE;
  config->mode = d.mode == raflow::TriggerMode::ET ? RAFLOW_ET : RAFLOW_ST;
  config->epsilon = d.epsilon;
  config->a0 = d.a0;
  config->r_i = d.r_i;
  config->r_d = d.r_d;
  config->a_max = d.a_max;
  config->tau = d.tau;
  config->max_iters = d.max_iters;
  config->s = d.s;
  config->alpha = d.alpha;
  config->t_max = d.t_max;
  config->baseline_step = d.baseline_step;
  config->horizon = d.horizon;
  config->rk4_step = d.rk4_step;
}

raflow_status raflow_run(raflow_algorithm algorithm, const raflow_objective* objective,
                         const double* x0, const raflow_algo_config* config,
                         raflow_trace** out) {
  return guarded([&] {
    const raflow::Objective& f = deref(objective);
    require(x0 != nullptr && config != nullptr && out != nullptr,
            "x0, config and out must not be NULL");
    raflow::AlgoConfig c;
    c.trigger = to_kind(config->trigger);
    c.mode = to_mode(config->mode);
    c.epsilon = config->epsilon;
    c.a0 = config->a0;
    c.r_i = config->r_i;
    c.r_d = config->r_d;
    c.a_max = config->a_max;
    c.tau = config->tau;
    c.max_iters = config->max_iters;
    c.s = config->s;
    c.alpha = config->alpha;
    c.t_max = config->t_max;
    c.baseline_step = config->baseline_step;
    c.horizon = config->horizon;
    c.rk4_step = config->rk4_step;
    auto trace = std::make_unique<raflow_trace>();
    trace->impl = raflow::run_algorithm(to_algorithm(algorithm), copy_in(x0, f.dimension()), c,
                                        objective->impl);
    *out = trace.release();
  });
}

void raflow_trace_free(raflow_trace* trace) { delete trace; }

long raflow_trace_iterations(const raflow_trace* trace) {
  return trace ? trace->impl.iterations() : -1;
}

int raflow_trace_converged(const raflow_trace* trace) {
  return trace && trace->impl.converged ? 1 : 0;
}

double raflow_trace_tau(const raflow_trace* trace) {
  return trace ? trace->impl.tau : std::numeric_limits<double>::quiet_NaN();
}

raflow_status raflow_trace_record(const raflow_trace* trace, long k, raflow_record* out) {
  return guarded([&] {
    require(trace != nullptr && out != nullptr, "trace and out must not be NULL");
    require(k >= 0 && k <= trace->impl.iterations(), "record index out of range");
    const raflow::IterationRecord& r = trace->impl.records[static_cast<size_t>(k)];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    *out = {r.k,
            r.t,
            r.delta,
            r.a,
            r.grad_norm,
            r.f_gap.value_or(nan),
            r.lyapunov.value_or(nan),
            r.inner_retries,
            r.capped ? 1 : 0};
  });
}

raflow_status raflow_trace_state(const raflow_trace* trace, long k, double* x, double* v) {
  return guarded([&] {
    require(trace != nullptr, "trace must not be NULL");
    require(k >= 0 && k <= trace->impl.iterations(), "record index out of range");
    const raflow::State& p = trace->impl.records[static_cast<size_t>(k)].state;
    if (x) std::copy(p.x.data(), p.x.data() + p.x.size(), x);
    if (v) std::copy(p.v.data(), p.v.data() + p.v.size(), v);
  });
}

raflow_status raflow_trace_write_csv(const raflow_trace* trace, const char* path) {
  return guarded([&] {
    require(trace != nullptr && path != nullptr, "trace and path must not be NULL");
    std::ofstream out(path);
    if (!out) throw raflow::Error(raflow::ErrorCode::Io, std::string("cannot write '") + path + "'");
    raflow::write_trace_csv(trace->impl, out);
  });
}

// ---- experiments

raflow_status raflow_experiment_default(const char* problem, raflow_experiment** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    auto e = std::make_unique<raflow_experiment>();
    e->impl = raflow::default_experiment(problem ? problem : "quadratic");
    *out = e.release();
  });
}

raflow_status raflow_experiment_load(const char* config_path, raflow_experiment** out) {
  return guarded([&] {
    require(config_path != nullptr && out != nullptr, "path and out must not be NULL");
    std::ifstream in(config_path);
    if (!in) {
      throw raflow::Error(raflow::ErrorCode::Io,
                          std::string("cannot read config '") + config_path + "'");
    }
    std::stringstream text;
    text << in.rdbuf();
    auto e = std::make_unique<raflow_experiment>();
    e->impl = raflow::experiment_from_json(text.str());
    *out = e.release();
  });
}

void raflow_experiment_free(raflow_experiment* experiment) { delete experiment; }

raflow_status raflow_experiment_override(raflow_experiment* experiment,
                                         const raflow_overrides* overrides) {
  return guarded([&] {
    require(experiment != nullptr && overrides != nullptr, "arguments must not be NULL");
    raflow::FlagOverrides f;
    if (overrides->problem) f.problem = overrides->problem;
    if (overrides->algo) f.algo = overrides->algo;
    if (overrides->trigger) f.trigger = overrides->trigger;
    if (overrides->mode) f.mode = overrides->mode;
    if (overrides->hold) f.hold = overrides->hold;
    if (overrides->has_a) f.a = overrides->a;
    if (overrides->has_eps) f.eps = overrides->eps;
    if (overrides->has_seed) f.seed = overrides->seed;
    if (overrides->out) f.out = overrides->out;
    raflow::apply_overrides(experiment->impl, f);
  });
}

raflow_status raflow_experiment_options(raflow_experiment* experiment, int plot_data,
                                        int parallel, int trigger_log) {
  return guarded([&] {
    require(experiment != nullptr, "experiment must not be NULL");
    if (plot_data >= 0) experiment->impl.plot_data = plot_data != 0;
    if (parallel >= 0) experiment->impl.parallel = parallel != 0;
    if (trigger_log >= 0) experiment->impl.trigger_log = trigger_log != 0;
  });
}

raflow_status raflow_experiment_run(const raflow_experiment* experiment, char** summary_json) {
  return guarded([&] {
    require(experiment != nullptr, "experiment must not be NULL");
    const auto summaries = raflow::cmd_run(experiment->impl);
    if (summary_json) *summary_json = dup_string(raflow::summaries_to_json(summaries));
  });
}

raflow_status raflow_gen_dataset(uint64_t seed, const char* path) {
  return guarded([&] {
    require(path != nullptr, "path must not be NULL");
    raflow::cmd_gen_dataset(seed, path);
  });
}

void raflow_verify_options_default(raflow_verify_options* options) {
  if (!options) return;
  options->quadratic = 1;
  options->logistic = 1;
  options->seed = raflow::kDefaultSeed;
  options->dataset_path = nullptr;
  options->corrupt_mu = 1.0;
}

raflow_status raflow_verify(const raflow_verify_options* options, int* passed, char** table,
                            char** json) {
  return guarded([&] {
    require(options != nullptr && passed != nullptr, "options and passed must not be NULL");
    raflow::VerifyConfig c;
    c.problems.clear();
    if (options->quadratic) c.problems.push_back("quadratic");
    if (options->logistic) c.problems.push_back("logistic");
    require(!c.problems.empty(), "no problem selected");
    c.seed = options->seed;
    if (options->dataset_path) c.dataset_path = options->dataset_path;
    c.corrupt_mu = options->corrupt_mu;
    const raflow::VerifyReport report = raflow::cmd_verify(c);
    *passed = report.all_passed() ? 1 : 0;
    char* t = table ? dup_string(report.table()) : nullptr;
    if (json) {
      try {
        *json = dup_string(report.to_json());
      } catch (...) {
        std::free(t);
        throw;
      }
    }
    if (table) *table = t;
  });
}

raflow_status raflow_plotdata(const char* const* csv_paths, size_t count, const char* out_path) {
  return guarded([&] {
    require(csv_paths != nullptr && count > 0 && out_path != nullptr,
            "plotdata needs input paths and an output path");
    std::vector<std::string> paths;
    for (size_t i = 0; i < count; ++i) {
      require(csv_paths[i] != nullptr, "input path is NULL");
      paths.emplace_back(csv_paths[i]);
    }
    std::ostringstream data;
    raflow::cmd_plotdata(paths, data);
    std::ofstream out(out_path);
    if (!(out << data.str())) {
      throw raflow::Error(raflow::ErrorCode::Io, std::string("cannot write '") + out_path + "'");
    }
  });
}

}  // extern "C"
