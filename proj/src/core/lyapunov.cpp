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

#include "raflow/lyapunov.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace raflow {

LyapunovContext::LyapunovContext(ObjectivePtr objective, FlowParams params)
    : objective_(std::move(objective)), params_(params) {
  if (!objective_ || !objective_->minimizer()) {
    throw Error(ErrorCode::InvalidArgument,
                "the Lyapunov function needs an objective with known minimizer");
  }
  x_star_ = *objective_->minimizer();
  f_star_ = *objective_->optimal_value();
}

double LyapunovContext::rounding_floor(double v) const noexcept {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  return 64.0 * eps * (params_.sqrt_mu_s * std::abs(f_star_) + std::abs(v));
}

double lyapunov_value(const State& p, const LyapunovContext& ctx) {
  const FlowParams& fp = ctx.params();
  const Vec e = p.x - ctx.minimizer();
  const double gap = ctx.objective().value(p.x) - ctx.optimal_value();
  return fp.sqrt_mu_s * gap + 0.25 * p.v.squaredNorm() +
         0.25 * (p.v + 2.0 * fp.sqrt_mu * e).squaredNorm();
}

State lyapunov_gradient(const State& p, const LyapunovContext& ctx) {
  const FlowParams& fp = ctx.params();
  const Vec e = p.x - ctx.minimizer();
  const Vec g = ctx.objective().gradient(p.x);
  return {fp.sqrt_mu_s * g + fp.sqrt_mu * p.v + 2.0 * fp.mu * e,
          p.v + fp.sqrt_mu * e};
}

double decay_along(const State& p, const State& velocity,
                   const LyapunovContext& ctx) {
  const State grad = lyapunov_gradient(p, ctx);
  return grad.x.dot(velocity.x) + grad.v.dot(velocity.v) +
         0.25 * ctx.params().sqrt_mu * lyapunov_value(p, ctx);
}

double decay_residual(const State& p, double a, const LyapunovContext& ctx) {
  const FlowParams fp = ctx.params().with_displacement(a);
  return decay_along(p, field_hb_displaced(p, fp, ctx.objective()), ctx);
}

}  // namespace raflow
