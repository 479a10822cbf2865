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

/* Exercises the shared library through its C header only. */

#include "raflow/raflow.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: CHECK(%s) failed; last error: %s\n",   \
              __FILE__, __LINE__, #cond, raflow_last_error());        \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static double half_square(const double* x, size_t n, void* user) {
  double sum = 0.0;
  (void)user;
  for (size_t i = 0; i < n; ++i) sum += 0.5 * x[i] * x[i];
  return sum;
}

static void identity(const double* x, size_t n, double* g, void* user) {
  ++*(int*)user;
  for (size_t i = 0; i < n; ++i) g[i] = x[i];
}

static void test_objectives(void) {
  const double diag[2] = {1e-2, 1e2};
  raflow_objective* q = NULL;
  CHECK(raflow_objective_quadratic(diag, 2, &q) == RAFLOW_OK);
  size_t n = 0;
  double mu = 0, L = 0;
  CHECK(raflow_objective_info(q, &n, &mu, &L) == RAFLOW_OK);
  CHECK(n == 2 && mu == 0.02 && L == 200.0);
  const double x[2] = {50.0, 50.0};
  double g[2], fx = 0, xs[2] = {1, 1};
  CHECK(raflow_objective_value(q, x, &fx) == RAFLOW_OK);
  CHECK(fabs(fx - (25.0 + 250000.0)) < 1e-9);
  CHECK(raflow_objective_gradient(q, x, g) == RAFLOW_OK);
  CHECK(g[0] == 1.0 && g[1] == 10000.0);
  CHECK(raflow_objective_minimizer(q, xs) == RAFLOW_OK);
  CHECK(xs[0] == 0.0 && xs[1] == 0.0);

  raflow_constants c;
  CHECK(raflow_trigger_constants(q, 0.0, 0.9, &c) == RAFLOW_OK);
  CHECK(fabs(c.s - 0.02 / (36.0 * 40000.0)) < 1e-20);
  CHECK(c.a1_star > 0 && c.a2_star > 0 && c.tau > 0);
  double m = 0;
  CHECK(raflow_miet(q, 0.0, 0.9, 0.0, &m) == RAFLOW_OK);
  CHECK(m >= c.tau);

  const double v[2] = {0.0, 0.0};
  double step = 0;
  int capped = -1;
  CHECK(raflow_step_size(q, RAFLOW_PERFORMANCE, RAFLOW_ET, RAFLOW_HOH, x, v, c.a2_star, 0.0, 0.0,
                         &step, &capped) == RAFLOW_OK);
  CHECK(step > 0 && capped == 0);
  CHECK(raflow_step_size(q, RAFLOW_DERIVATIVE, RAFLOW_ST, RAFLOW_ZOH, xs, v, 0.0, 0.0, 0.0,
                         &step, &capped) == RAFLOW_E_TRIGGER_INFEASIBLE);

  raflow_objective* bad = NULL;
  CHECK(raflow_objective_with_constants(q, 300.0, 200.0, &bad) == RAFLOW_E_INVALID_OBJECTIVE ||
        raflow_objective_with_constants(q, 300.0, 200.0, &bad) == RAFLOW_E_INVALID_ARGUMENT);
  CHECK(bad == NULL);
  CHECK(strlen(raflow_last_error()) > 0);
  const double zero_diag[2] = {0.0, 1.0};
  CHECK(raflow_objective_quadratic(zero_diag, 2, &bad) == RAFLOW_E_INVALID_OBJECTIVE);
  CHECK(raflow_objective_info(NULL, &n, &mu, &L) == RAFLOW_E_INVALID_ARGUMENT);
  raflow_objective_free(q);
  raflow_objective_free(NULL);

  int calls = 0;
  raflow_objective* custom = NULL;
  const double origin[3] = {0, 0, 0};
  CHECK(raflow_objective_custom(3, 1.0, 1.0, half_square, identity, &calls, origin, &custom) ==
        RAFLOW_OK);
  const double x3[3] = {1.0, -2.0, 0.5};
  double g3[3];
  CHECK(raflow_objective_gradient(custom, x3, g3) == RAFLOW_OK);
  CHECK(calls == 1 && g3[1] == -2.0);
  raflow_objective_free(custom);

  raflow_objective* logistic = NULL;
  CHECK(raflow_objective_logistic_seeded(20210, &logistic) == RAFLOW_OK);
  CHECK(raflow_objective_info(logistic, &n, &mu, &L) == RAFLOW_OK);
  CHECK(n == 4 && mu == 1.0 && L > 1.0);
  raflow_objective_free(logistic);
}

static void test_runs(void) {
  const double diag[2] = {1e-2, 1e2};
  raflow_objective* q = NULL;
  CHECK(raflow_objective_quadratic(diag, 2, &q) == RAFLOW_OK);
  raflow_algo_config cfg;
  raflow_algo_config_default(&cfg);
  cfg.a0 = 0.1;
  cfg.a_max = 0.1;
  const double x0[2] = {50.0, 50.0};
  raflow_trace* t = NULL;
  CHECK(raflow_run(RAFLOW_ALGO_ADAPTIVE_HOH, q, x0, &cfg, &t) == RAFLOW_OK);
  CHECK(raflow_trace_converged(t) == 1);
  const long iters = raflow_trace_iterations(t);
  CHECK(iters > 100);
  raflow_record r0, last;
  CHECK(raflow_trace_record(t, 0, &r0) == RAFLOW_OK);
  CHECK(raflow_trace_record(t, iters, &last) == RAFLOW_OK);
  CHECK(r0.k == 0 && r0.t == 0.0 && r0.delta >= raflow_trace_tau(t));
  CHECK(isnan(last.delta) && last.grad_norm < 1e-6);
  CHECK(raflow_trace_record(t, iters + 1, &last) == RAFLOW_E_INVALID_ARGUMENT);
  double xs[2], vs[2];
  CHECK(raflow_trace_state(t, 0, xs, vs) == RAFLOW_OK);
  CHECK(xs[0] == 50.0 && fabs(vs[1] + 2.3570) < 1e-3);
  CHECK(raflow_trace_write_csv(t, "capi_trace.csv") == RAFLOW_OK);
  raflow_trace_free(t);

  cfg.r_i = 0.5;
  CHECK(raflow_run(RAFLOW_ALGO_ADAPTIVE_DG, q, x0, &cfg, &t) == RAFLOW_E_INVALID_ARGUMENT);
  raflow_objective_free(q);
}

static void test_harness(void) {
  raflow_experiment* e = NULL;
  CHECK(raflow_experiment_default("quadratic", &e) == RAFLOW_OK);
  raflow_overrides ov;
  memset(&ov, 0, sizeof ov);
  ov.algo = "nesterov";
  ov.out = "capi_out";
  CHECK(raflow_experiment_override(e, &ov) == RAFLOW_OK);
  CHECK(raflow_experiment_options(e, 1, -1, -1) == RAFLOW_OK);
  char* summary = NULL;
  CHECK(raflow_experiment_run(e, &summary) == RAFLOW_OK);
  CHECK(summary && strstr(summary, "\"nesterov\"") != NULL);
  raflow_string_free(summary);
  ov.algo = NULL;
  ov.out = NULL;
  ov.trigger = "z";
  CHECK(raflow_experiment_override(e, &ov) == RAFLOW_E_INVALID_ARGUMENT);
  raflow_experiment_free(e);
  CHECK(raflow_experiment_default("cubic", &e) == RAFLOW_E_INVALID_ARGUMENT);
  CHECK(raflow_experiment_load("does-not-exist.json", &e) == RAFLOW_E_IO);

  CHECK(raflow_gen_dataset(3, "capi_dataset.json") == RAFLOW_OK);
  raflow_objective* l = NULL;
  CHECK(raflow_objective_logistic_load("capi_dataset.json", &l) == RAFLOW_OK);
  raflow_objective_free(l);

  const char* paths[1] = {"capi_trace.csv"};
  CHECK(raflow_plotdata(paths, 1, "capi_plot.csv") == RAFLOW_OK);
  const char* missing[1] = {"nope.csv"};
  CHECK(raflow_plotdata(missing, 1, "capi_plot2.csv") == RAFLOW_E_IO);

  raflow_verify_options vo;
  raflow_verify_options_default(&vo);
  vo.logistic = 0;
  int passed = 0;
  char* table = NULL;
  CHECK(raflow_verify(&vo, &passed, &table, NULL) == RAFLOW_OK);
  CHECK(passed == 1 && table != NULL);
  raflow_string_free(table);
  vo.corrupt_mu = 2.0;
  CHECK(raflow_verify(&vo, &passed, NULL, NULL) == RAFLOW_OK);
  CHECK(passed == 0);
}

int main(void) {
  CHECK(strlen(raflow_version()) > 0);
  CHECK(strcmp(raflow_status_string(RAFLOW_OK), "ok") == 0 ||
        strlen(raflow_status_string(RAFLOW_OK)) > 0);
  test_objectives();
  test_runs();
  test_harness();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
