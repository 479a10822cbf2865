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

namespace raflow {

/// Ground-truth certificate
///
///   V(x, v) = (1 + sqrt(mu s)) (f(x) - f*) + ||v||^2/4 + ||v + 2 sqrt(mu)(x - x*)||^2/4.
///
/// Diagnostic only. No algorithm code path reads it.
class LyapunovContext {
 public:
  /// Throws InvalidArgument when the objective carries no minimizer.
  LyapunovContext(ObjectivePtr objective, FlowParams params);

  [[nodiscard]] const Objective& objective() const noexcept { return *objective_; }
  [[nodiscard]] const FlowParams& params() const noexcept { return params_; }
  [[nodiscard]] const Vec& minimizer() const noexcept { return x_star_; }
  [[nodiscard]] double optimal_value() const noexcept { return f_star_; }

  /// Rough absolute rounding floor of a V evaluation at magnitude `v`, about eps |f*|.
  [[nodiscard]] double rounding_floor(double v) const noexcept;

 private:
  ObjectivePtr objective_;
  FlowParams params_;
  Vec x_star_;
  double f_star_;
};

[[nodiscard]] double lyapunov_value(const State& p, const LyapunovContext& ctx);

/// grad V = (sqrt_mu_s grad f(x) + sqrt(mu) v + 2 mu (x - x*), v + sqrt(mu)(x - x*)).
[[nodiscard]] State lyapunov_gradient(const State& p, const LyapunovContext& ctx);

/// <grad V(p), X^a_hb(p)> + (sqrt(mu)/4) V(p); nonpositive for 0 <= a <= a*_1.
[[nodiscard]] double decay_residual(const State& p, double a,
                                    const LyapunovContext& ctx);

/// d/dt V(p(t)) + (sqrt(mu)/4) V(p(t)) given the trajectory velocity p'(t).
[[nodiscard]] double decay_along(const State& p, const State& velocity,
                                 const LyapunovContext& ctx);

}  // namespace raflow
