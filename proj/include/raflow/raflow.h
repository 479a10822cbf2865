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

#ifndef RAFLOW_RAFLOW_H
#define RAFLOW_RAFLOW_H

/* C interface to the raflow library. Objects are opaque handles released by
 * the matching raflow_*_free. Every fallible call returns a raflow_status; on failure the
 * message is available from raflow_last_error() on the same thread. Strings
 * returned through char** out-parameters are released with raflow_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RAFLOW_API __declspec(dllexport)
#else
#define RAFLOW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum raflow_status {
  RAFLOW_OK = 0,
  RAFLOW_E_INVALID_ARGUMENT = 1,
  RAFLOW_E_INVALID_OBJECTIVE = 2,
  RAFLOW_E_NUMERIC = 3,
  RAFLOW_E_TRIGGER_INFEASIBLE = 4,
  RAFLOW_E_IO = 5,
  RAFLOW_E_CHECK_FAILED = 6,
  RAFLOW_E_INTERNAL = 7
} raflow_status;

typedef enum raflow_trigger { RAFLOW_DERIVATIVE = 0, RAFLOW_PERFORMANCE = 1 } raflow_trigger;
typedef enum raflow_mode { RAFLOW_ET = 0, RAFLOW_ST = 1 } raflow_mode;
typedef enum raflow_hold { RAFLOW_ZOH = 0, RAFLOW_HOH = 1 } raflow_hold;

typedef enum raflow_algorithm {
  RAFLOW_ALGO_DG = 0,         /* fixed displacement, zero-order hold */
  RAFLOW_ALGO_ADAPTIVE_DG = 1,
  RAFLOW_ALGO_ADAPTIVE_HOH = 2,
  RAFLOW_ALGO_NESTEROV = 3,
  RAFLOW_ALGO_HEAVY_BALL = 4,
  RAFLOW_ALGO_CONTINUOUS = 5
} raflow_algorithm;

typedef struct raflow_objective raflow_objective;
typedef struct raflow_trace raflow_trace;
typedef struct raflow_experiment raflow_experiment;

RAFLOW_API const char* raflow_version(void);
RAFLOW_API const char* raflow_status_string(raflow_status status);
/* Message of the last failure on this thread; "" when none. */
RAFLOW_API const char* raflow_last_error(void);
/* Iteration index attached to the last numeric failure, or -1. */
RAFLOW_API long raflow_last_error_index(void);
RAFLOW_API void raflow_string_free(char* text);

/* ---- objectives ---- */

RAFLOW_API raflow_status raflow_objective_quadratic(const double* diag, size_t n,
                                                    raflow_objective** out);
RAFLOW_API raflow_status raflow_objective_logistic_seeded(uint64_t seed,
                                                          raflow_objective** out);
RAFLOW_API raflow_status raflow_objective_logistic_load(const char* dataset_path,
                                                        raflow_objective** out);

typedef double (*raflow_value_fn)(const double* x, size_t n, void* user);
typedef void (*raflow_gradient_fn)(const double* x, size_t n, double* grad, void* user);

/* minimizer may be NULL. `user` must outlive the handle. */
RAFLOW_API raflow_status raflow_objective_custom(size_t n, double mu, double lipschitz,
                                                 raflow_value_fn value,
                                                 raflow_gradient_fn gradient, void* user,
                                                 const double* minimizer,
                                                 raflow_objective** out);
/* Same function, different reported constants (fault injection). */
RAFLOW_API raflow_status raflow_objective_with_constants(const raflow_objective* base,
                                                         double mu, double lipschitz,
                                                         raflow_objective** out);
RAFLOW_API void raflow_objective_free(raflow_objective* objective);

RAFLOW_API raflow_status raflow_objective_info(const raflow_objective* objective,
                                               size_t* dimension, double* mu,
                                               double* lipschitz);
RAFLOW_API raflow_status raflow_objective_value(const raflow_objective* objective,
                                                const double* x, double* out);
RAFLOW_API raflow_status raflow_objective_gradient(const raflow_objective* objective,
                                                   const double* x, double* out);
/* RAFLOW_E_INVALID_ARGUMENT when the minimizer is unknown. */
RAFLOW_API raflow_status raflow_objective_minimizer(const raflow_objective* objective,
                                                    double* out);

/* ---- trigger constants and stepsizes ---- */

typedef struct raflow_constants {
  double s;
  double a1_star;
  double a2_star;
  double tau; /* 0.99 times the grid minimum of MIET on [0, a2_star] */
} raflow_constants;

/* s <= 0 selects mu / (36 L^2). */
RAFLOW_API raflow_status raflow_trigger_constants(const raflow_objective* objective, double s,
                                                  double alpha, raflow_constants* out);
RAFLOW_API raflow_status raflow_miet(const raflow_objective* objective, double s,
                                     double alpha, double a, double* out);

/* Stepsize of the selected trigger from the sample (x, v). t_max <= 0 selects
 * 10 / sqrt(mu). RAFLOW_E_TRIGGER_INFEASIBLE when the bound is not negative at 0. */
RAFLOW_API raflow_status raflow_step_size(const raflow_objective* objective,
                                          raflow_trigger trigger, raflow_mode mode,
                                          raflow_hold hold, const double* x, const double* v,
                                          double a, double s, double t_max, double* step,
                                          int* capped);

/* ---- algorithms ---- */

typedef struct raflow_algo_config {
  raflow_trigger trigger;
  raflow_mode mode;
  double epsilon;
  double a0;
  double r_i;
  double r_d;
  double a_max; /* +inf: no ceiling */
  double tau;   /* <= 0: default */
  long max_iters;
  double s;             /* <= 0: default */
  double alpha;
  double t_max;         /* <= 0: default */
  double baseline_step; /* <= 0: 1/L */
  double horizon;       /* continuous reference */
  double rk4_step;
} raflow_algo_config;

RAFLOW_API void raflow_algo_config_default(raflow_algo_config* config);

RAFLOW_API raflow_status raflow_run(raflow_algorithm algorithm,
                                    const raflow_objective* objective, const double* x0,
                                    const raflow_algo_config* config, raflow_trace** out);
RAFLOW_API void raflow_trace_free(raflow_trace* trace);

typedef struct raflow_record {
  long k;
  double t;
  double delta; /* NaN on the final record */
  double a;
  double grad_norm;
  double f_gap;     /* NaN when unknown */
  double lyapunov;  /* NaN when unknown */
  int inner_retries;
  int capped;
} raflow_record;

/* Number of completed steps; records are indexed 0..iterations. */
RAFLOW_API long raflow_trace_iterations(const raflow_trace* trace);
RAFLOW_API int raflow_trace_converged(const raflow_trace* trace);
RAFLOW_API double raflow_trace_tau(const raflow_trace* trace);
RAFLOW_API raflow_status raflow_trace_record(const raflow_trace* trace, long k,
                                             raflow_record* out);
/* x and v receive `dimension` values each; either may be NULL. */
RAFLOW_API raflow_status raflow_trace_state(const raflow_trace* trace, long k, double* x,
                                            double* v);
RAFLOW_API raflow_status raflow_trace_write_csv(const raflow_trace* trace, const char* path);

/* ---- experiment harness ---- */

RAFLOW_API raflow_status raflow_experiment_default(const char* problem,
                                                   raflow_experiment** out);
RAFLOW_API raflow_status raflow_experiment_load(const char* config_path,
                                                raflow_experiment** out);
RAFLOW_API void raflow_experiment_free(raflow_experiment* experiment);

/* NULL strings and zero has_* fields leave the setting unchanged. */
typedef struct raflow_overrides {
  const char* problem;
  const char* algo;
  const char* trigger;
  const char* mode;
  const char* hold;
  int has_a;
  double a;
  int has_eps;
  double eps;
  int has_seed;
  uint64_t seed;
  const char* out;
} raflow_overrides;

RAFLOW_API raflow_status raflow_experiment_override(raflow_experiment* experiment,
                                                    const raflow_overrides* overrides);
/* Negative values leave the option unchanged. */
RAFLOW_API raflow_status raflow_experiment_options(raflow_experiment* experiment,
                                                   int plot_data, int parallel,
                                                   int trigger_log);
/* Writes the run files; summary_json (may be NULL) receives the summary. */
RAFLOW_API raflow_status raflow_experiment_run(const raflow_experiment* experiment,
                                               char** summary_json);

RAFLOW_API raflow_status raflow_gen_dataset(uint64_t seed, const char* path);

typedef struct raflow_verify_options {
  int quadratic;
  int logistic;
  uint64_t seed;
  const char* dataset_path; /* NULL: generate from seed */
  double corrupt_mu;        /* 1: no corruption */
} raflow_verify_options;

RAFLOW_API void raflow_verify_options_default(raflow_verify_options* options);
/* passed receives 1 when every check passed; table and json may be NULL.
 * A failed check is not an error: the status is RAFLOW_OK. */
RAFLOW_API raflow_status raflow_verify(const raflow_verify_options* options, int* passed,
                                       char** table, char** json);

/* Long-format plot data from run CSVs into out_path. */
RAFLOW_API raflow_status raflow_plotdata(const char* const* csv_paths, size_t count,
                                         const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* RAFLOW_RAFLOW_H */
