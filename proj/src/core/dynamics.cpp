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

#include "raflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace raflow {

FlowParams FlowParams::make(const Objective& objective, double s, double a) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw Error(ErrorCode::InvalidArgument, "flow parameter s must be positive");
  }
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::InvalidArgument, "displacement a must be nonnegative");
  }
  FlowParams p;
  p.s = s;
  p.a = a;
  p.mu = objective.mu();
  p.lipschitz = objective.lipschitz();
  p.sqrt_mu = std::sqrt(p.mu);
  p.sqrt_mu_s = 1.0 + std::sqrt(p.mu * s);
  p.mu_s = p.sqrt_mu_s * p.sqrt_mu_s;
  return p;
}

FlowParams FlowParams::with_displacement(double a_new) const {
  if (!(a_new >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "displacement a must be nonnegative");
  }
  FlowParams p = *this;
  p.a = a_new;
  return p;
}

double FlowParams::default_s(const Objective& objective) {
  const double L = objective.lipschitz();
  return objective.mu() / (36.0 * L * L);
}

State field_hb_displaced(const State& p, const FlowParams& params,
                         const Objective& objective) {
  const Vec g = objective.gradient(p.x + params.a * p.v);
  return {p.v, -2.0 * params.sqrt_mu * p.v - params.sqrt_mu_s * g};
}

State zoh_trajectory(const State& p_hat, double t, const FlowParams& params,
                     const Objective& objective) {
  State d = field_hb_displaced(p_hat, params, objective);
  return {p_hat.x + t * d.x, p_hat.v + t * d.v};
}

namespace {

// y - (1 - e^{-y}) for y >= 0, accurate when y is tiny.
double one_minus_exp_remainder(double y) {
  if (y < 0.5) {
    // sum_{k>=2} (-1)^k y^k / k!
    double term = 0.5 * y * y;
    double sum = term;
    for (int k = 3; k < 30; ++k) {
      term *= -y / k;
      sum += term;
      if (std::abs(term) < 1e-17 * sum) break;
    }
    return sum;
  }
  return y + std::expm1(-y);
}

}  // namespace

State hoh_increment(const State& p_hat, const Vec& frozen_gradient, double t,
                    const FlowParams& params) {
  const double sm = params.sqrt_mu;
  const double y = 2.0 * sm * t;
  // 1 - e^{-y}, computed once and shared by both components.
  const double decay = -std::expm1(-y);
  const double rem = one_minus_exp_remainder(y);
  // x(t) - x = v (1-e^{-y})/(2 sqrt mu) - c (y - (1-e^{-y}))/(4 mu)
  // v(t) - v = -(1-e^{-y}) (v + c / (2 sqrt mu)),   c = sqrt_mu_s * g
  const double cg = params.sqrt_mu_s;
  State out;
  out.x = (decay / (2.0 * sm)) * p_hat.v - (cg * rem / (4.0 * params.mu)) * frozen_gradient;
  out.v = -decay * p_hat.v - (cg * decay / (2.0 * sm)) * frozen_gradient;
  return out;
}

State hoh_trajectory(const State& p_hat, const Vec& frozen_gradient, double t,
                     const FlowParams& params) {
  State inc = hoh_increment(p_hat, frozen_gradient, t, params);
  inc.x += p_hat.x;
  inc.v += p_hat.v;
  return inc;
}

State hoh_trajectory(const State& p_hat, double t, const FlowParams& params,
                     const Objective& objective) {
  const Vec g = objective.gradient(p_hat.x + params.a * p_hat.v);
  return hoh_trajectory(p_hat, g, t, params);
}

State hoh_velocity(const State& p_t, const Vec& frozen_gradient,
                   const FlowParams& params) {
  return {p_t.v, -2.0 * params.sqrt_mu * p_t.v - params.sqrt_mu_s * frozen_gradient};
}

Vec initial_velocity(const Vec& x0, const FlowParams& params,
                     const Objective& objective) {
  return (-2.0 * std::sqrt(params.s) / params.sqrt_mu_s) * objective.gradient(x0);
}

ReferenceTrace rk4_reference(const VectorField& field, const State& p0,
                             double horizon, double step) {
  if (!(step > 0.0) || !(horizon >= step)) {
    throw Error(ErrorCode::InvalidArgument, "rk4_reference needs h > 0 and T >= h");
  }
  ReferenceTrace trace;
  const auto steps = static_cast<long>(std::ceil(horizon / step - 1e-9));
  trace.times.reserve(static_cast<std::size_t>(steps) + 1);
  trace.states.reserve(static_cast<std::size_t>(steps) + 1);
  trace.times.push_back(0.0);
  trace.states.push_back(p0);

  State p = p0;
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * step;
    const double h = std::min(step, horizon - t);
    const State k1 = field(p);
    const State k2 = field(p + (0.5 * h) * k1);
    const State k3 = field(p + (0.5 * h) * k2);
    const State k4 = field(p + h * k3);
    p.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    p.v += (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    if (!p.finite()) {
      throw NumericError("rk4_reference produced a non-finite state at step " +
                             std::to_string(k + 1),
                         k + 1);
    }
    trace.times.push_back(t + h);
    trace.states.push_back(p);
  }
  return trace;
}

}  // namespace raflow
