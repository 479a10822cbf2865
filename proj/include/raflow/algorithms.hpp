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

#include "raflow/dynamics.hpp"
#include "raflow/objectives.hpp"
#include "raflow/triggers.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace raflow {

enum class Algorithm {
  DisplacedGradient,  // fixed a, zero-order hold
  AdaptiveDG,         // adaptive a, zero-order hold
  AdaptiveHOH,        // adaptive a, high-order hold
  Nesterov,
  HeavyBall,
  Continuous,  // RK4 of the displaced heavy-ball field
};

[[nodiscard]] std::string to_string(Algorithm algorithm);
/// Accepts dg, adg, hoh, nesterov, heavy-ball, continuous.
[[nodiscard]] Algorithm algorithm_from_string(const std::string& name);

struct AlgoConfig {
  TriggerKind trigger = TriggerKind::Performance;
  TriggerMode mode = TriggerMode::ET;
  double epsilon = 1e-6;
  double a0 = 0.1;
  double r_i = 1.1;
  double r_d = 0.5;
  /// Ceiling for the increase step of the adaptive algorithms.
  double a_max = std::numeric_limits<double>::infinity();
  double tau = 0.0;    // <= 0: 0.99 * grid minimum of MIET on [0, a*_2]
  long max_iters = 1000000;
  double s = 0.0;      // <= 0: mu / (36 L^2)
  double alpha = 0.9;
  double t_max = 0.0;  // <= 0: 10 / sqrt(mu)
  double baseline_step = 0.0;  // Nesterov s; <= 0: 1/L
  double horizon = 0.0;        // continuous reference
  double rk4_step = 1e-4;
  /// Receives one JSON line per trigger evaluation when set.
  std::function<void(const std::string&)> trigger_log;

  /// Throws InvalidArgument on r_i <= 1, r_d outside (0,1), eps <= 0, ...
  void validate() const;
};

struct IterationRecord {
  long k = 0;
  double t = 0.0;
  double delta = 0.0;  // NaN on the final record
  State state;
  double a = 0.0;
  double grad_norm = 0.0;
  std::optional<double> f_gap;
  std::optional<double> lyapunov;
  int inner_retries = 0;
  bool capped = false;
};

struct RunTrace {
  std::string name;
  Algorithm algorithm = Algorithm::DisplacedGradient;
  BoundKind kind;
  FlowParams params;
  double tau = 0.0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::vector<IterationRecord> records;
  std::vector<std::string> warnings;

  /// Number of completed steps.
  [[nodiscard]] long iterations() const noexcept {
    return records.empty() ? 0 : static_cast<long>(records.size()) - 1;
  }
};

/// Triggered runs start from (x0, v0) given by the initial-velocity rule.
[[nodiscard]] State initial_state(const Vec& x0, const AlgoConfig& config,
                                  const Objective& objective);

[[nodiscard]] RunTrace run_displaced_gradient(const State& p0, const AlgoConfig& config,
                                              ObjectivePtr objective);
[[nodiscard]] RunTrace run_adaptive_dg(const State& p0, const AlgoConfig& config,
                                       ObjectivePtr objective);
[[nodiscard]] RunTrace run_adaptive_hoh(const State& p0, const AlgoConfig& config,
                                        ObjectivePtr objective);
[[nodiscard]] RunTrace run_nesterov(const Vec& x0, double s, ObjectivePtr objective,
                                    long max_iters, double epsilon);
[[nodiscard]] RunTrace run_heavy_ball_discrete(const Vec& x0, ObjectivePtr objective,
                                               long max_iters, double epsilon);
[[nodiscard]] RunTrace run_continuous_reference(const State& p0, double a,
                                                const FlowParams& params,
                                                ObjectivePtr objective, double horizon,
                                                double step);

/// Dispatches on `algorithm`; x0 seeds every variant.
[[nodiscard]] RunTrace run_algorithm(Algorithm algorithm, const Vec& x0,
                                     const AlgoConfig& config, ObjectivePtr objective);

/// Header k,t,delta,a,grad_norm,f_gap,lyapunov,x_0..,v_0..; unknown cells empty.
void write_trace_csv(const RunTrace& trace, std::ostream& out);

}  // namespace raflow
