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

#include "raflow/objectives.hpp"
#include "raflow/types.hpp"

#include <functional>
#include <vector>

namespace raflow {

/// Parameters of the heavy-ball flow with displaced gradient
///
///   x' = v,   v' = -2 sqrt(mu) v - (1 + sqrt(mu s)) grad f(x + a v).
///
/// `sqrt_mu_s` is 1 + sqrt(mu s); `mu_s` is its square. Every bound in the
/// trigger module that carries the unsquare-rooted mu_s uses the square.
struct FlowParams {
  double s = 0.0;
  double a = 0.0;
  double mu = 0.0;
  double lipschitz = 0.0;
  double sqrt_mu = 0.0;
  double sqrt_mu_s = 0.0;
  double mu_s = 0.0;

  /// Builds the parameter set from an objective. Throws InvalidArgument for
  /// s <= 0 or a < 0.
  static FlowParams make(const Objective& objective, double s, double a = 0.0);

  [[nodiscard]] FlowParams with_displacement(double a_new) const;

  /// Default s = mu / (36 L^2).
  static double default_s(const Objective& objective);
};

/// X^a_hb(p).
[[nodiscard]] State field_hb_displaced(const State& p, const FlowParams& params,
                                       const Objective& objective);

/// Zero-order hold: p(t) = p_hat + t X^a_hb(p_hat). One gradient evaluation.
[[nodiscard]] State zoh_trajectory(const State& p_hat, double t,
                                   const FlowParams& params,
                                   const Objective& objective);

/// Exact solution of the linear system obtained by freezing the gradient term
/// at x_hat + a v_hat (the high-order hold).
[[nodiscard]] State hoh_trajectory(const State& p_hat, double t,
                                   const FlowParams& params,
                                   const Objective& objective);

/// Same, with the frozen gradient grad f(x_hat + a v_hat) supplied.
[[nodiscard]] State hoh_trajectory(const State& p_hat, const Vec& frozen_gradient,
                                   double t, const FlowParams& params);

/// p(t) - p_hat along the high-order hold, without the cancellation of
/// forming the difference from two nearby states.
[[nodiscard]] State hoh_increment(const State& p_hat, const Vec& frozen_gradient,
                                  double t, const FlowParams& params);

/// Time derivative of the high-order-hold trajectory at p(t):
/// (v(t), -2 sqrt(mu) v(t) - sqrt_mu_s * frozen_gradient).
[[nodiscard]] State hoh_velocity(const State& p_t, const Vec& frozen_gradient,
                                 const FlowParams& params);

/// v(0) = -2 sqrt(s) grad f(x0) / (1 + sqrt(mu s)).
[[nodiscard]] Vec initial_velocity(const Vec& x0, const FlowParams& params,
                                   const Objective& objective);

using VectorField = std::function<State(const State&)>;

struct ReferenceTrace {
  std::vector<double> times;
  std::vector<State> states;
};

/// Classical fixed-step RK4 over [0, horizon], recording every step. The last
/// step is shortened to land exactly on the horizon.
[[nodiscard]] ReferenceTrace rk4_reference(const VectorField& field,
                                           const State& p0, double horizon,
                                           double step);

}  // namespace raflow
