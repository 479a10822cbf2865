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
#include "raflow/quadrature.hpp"
#include "raflow/types.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>

namespace raflow {

enum class TriggerKind { Derivative, Performance };
enum class TriggerMode { ET, ST };
enum class Hold { ZOH, HOH };

struct BoundKind {
  TriggerKind trigger = TriggerKind::Derivative;
  TriggerMode mode = TriggerMode::ST;
  Hold hold = Hold::ZOH;

  friend bool operator==(const BoundKind&, const BoundKind&) = default;
};

/// "zoh-d-ST", "hoh-p-ET", ...
[[nodiscard]] std::string to_string(BoundKind kind);
[[nodiscard]] std::string to_string(TriggerKind kind);
[[nodiscard]] std::string to_string(TriggerMode mode);
[[nodiscard]] std::string to_string(Hold hold);

/// Scalars derived from (mu, L, s): the continuous-decay displacement bound
/// a*_1, the implementability bound a*_2 and the minimum inter-event time.
struct TriggerConstants {
  double mu = 0.0;
  double lipschitz = 0.0;
  double s = 0.0;
  double sqrt_mu = 0.0;
  double sqrt_mu_s = 0.0;
  double mu_s = 0.0;

  std::array<double, 4> beta{};
  double a1_star = 0.0;
  std::array<double, 5> beta_hat{};
  double alpha = 0.9;
  double a2_star = 0.0;

  [[nodiscard]] double eta1(double a) const;
  [[nodiscard]] double eta2(double a) const;
  [[nodiscard]] double nu1(double a) const;
  [[nodiscard]] double nu2(double a) const;
  [[nodiscard]] double eta(double a) const;
  [[nodiscard]] double nu(double a) const;
  /// -nu + sqrt(nu^2 + eta), evaluated without cancellation.
  [[nodiscard]] double miet(double a) const;

  /// g(z) = (b3 + b4 z^2) / (b2 z - b1) for z > b1/b2.
  [[nodiscard]] double g(double z) const;
  /// The positive critical point of g.
  [[nodiscard]] double z_root_plus() const;

  /// 0.99 * min of miet over `grid` equispaced points of [0, a2_star].
  [[nodiscard]] double default_tau(int grid = 1024) const;
};

/// Throws InvalidArgument unless 0 < alpha < 1.
[[nodiscard]] TriggerConstants constants_from(const Objective& objective,
                                              const FlowParams& params,
                                              double alpha = 0.9);

/// Everything a bound needs from the sample p_hat: two gradients, two values.
struct SampleData {
  State p_hat;
  double a = 0.0;
  Vec grad_x;     // grad f(x_hat)
  Vec grad_disp;  // grad f(x_hat + a v_hat)
  double f_x = 0.0;
  double f_disp = 0.0;
  Vec w;  // 2 sqrt(mu) v_hat + sqrt_mu_s grad_disp

  double v2 = 0.0, v_norm = 0.0;
  double gx2 = 0.0, gx_norm = 0.0;
  double ga2 = 0.0, ga_norm = 0.0;
  double w2 = 0.0, w_norm = 0.0;
  double ga_dot_v = 0.0;
};

[[nodiscard]] SampleData sample_at(const State& p_hat, double a,
                                   const FlowParams& params,
                                   const Objective& objective);

/// C(p_hat; a), the common value at t = 0 of every derivative bound.
[[nodiscard]] double constant_term(const SampleData& d, const FlowParams& params);

struct Quadratic {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;
  [[nodiscard]] double operator()(double t) const noexcept { return (c2 * t + c1) * t + c0; }
  /// int_0^t e^{k z} (c2 z^2 + c1 z + c0) dz in closed form.
  [[nodiscard]] double exp_weighted_integral(double kappa, double t) const;
  /// Smallest positive root when c0 < 0; nullopt when there is none.
  [[nodiscard]] std::optional<double> positive_root() const;
};

[[nodiscard]] Quadratic zoh_st_coefficients(const SampleData& d, const FlowParams& params);
[[nodiscard]] Quadratic hoh_st_coefficients(const SampleData& d, const FlowParams& params);

/// Literal derivative ET bounds at t.
[[nodiscard]] double zoh_derivative_et(const SampleData& d, double t,
                                       const FlowParams& params,
                                       const Objective& objective);
[[nodiscard]] double hoh_derivative_et(const SampleData& d, double t,
                                       const FlowParams& params,
                                       const Objective& objective);

/// One trigger bound built at a sample. ET kinds keep a pointer to the
/// objective: the bound must not outlive it. Performance-ET bounds memoize
/// integrals, so an instance is single-consumer.
class StepBound {
 public:
  StepBound(BoundKind kind, const State& p_hat, double a, const FlowParams& params,
            const Objective& objective);

  [[nodiscard]] BoundKind kind() const noexcept { return kind_; }
  [[nodiscard]] double a() const noexcept { return data_.a; }
  [[nodiscard]] const SampleData& sample() const noexcept { return data_; }
  [[nodiscard]] const FlowParams& params() const noexcept { return params_; }
  [[nodiscard]] double constant_term() const noexcept { return st_.c0; }
  /// Derivative ST polynomial of the same hold. For ST kinds this is the
  /// bound itself (derivative) or its integrand (performance).
  [[nodiscard]] const Quadratic& st_coeffs() const noexcept { return st_; }

  /// The bound at t.
  [[nodiscard]] double operator()(double t) const;
  /// The derivative bound of the same hold and mode at t.
  [[nodiscard]] double derivative_at(double t) const;
  /// Trajectory of the hold from p_hat.
  [[nodiscard]] State trajectory(double t) const;

 private:
  [[nodiscard]] double performance_et(double t) const;

  BoundKind kind_;
  FlowParams params_;
  const Objective* objective_;
  SampleData data_;
  Quadratic st_;
  Quadratic zoh_remainder_;  // explicit part of the ZOH ET integrand
  mutable std::shared_ptr<CumulativeIntegral> remainder_integral_;
};

[[nodiscard]] StepBound make_bound(BoundKind kind, const State& p_hat, double a,
                                   const FlowParams& params, const Objective& objective);

[[nodiscard]] StepBound zoh_bound_derivative_st(const State& p_hat, double a, const FlowParams& params, const Objective& objective);
[[nodiscard]] StepBound zoh_bound_derivative_et(const State& p_hat, double a, const FlowParams& params, const Objective& objective);
[[nodiscard]] StepBound zoh_bound_performance_st(const State& p_hat, double a, const FlowParams& params, const Objective& objective);
[[nodiscard]] StepBound zoh_bound_performance_et(const State& p_hat, double a, const FlowParams& params, const Objective& objective);
[[nodiscard]] StepBound hoh_bound_derivative_st(const State& p_hat, double a, const FlowParams& params, const Objective& objective);
[[nodiscard]] StepBound hoh_bound_derivative_et(const State& p_hat, double a, const FlowParams& params, const Objective& objective);
[[nodiscard]] StepBound hoh_bound_performance_st(const State& p_hat, double a, const FlowParams& params, const Objective& objective);
[[nodiscard]] StepBound hoh_bound_performance_et(const State& p_hat, double a, const FlowParams& params, const Objective& objective);

struct StepResult {
  double step = 0.0;
  bool capped = false;
  int probes = 0;
};

/// Default cap 10 / sqrt(mu).
[[nodiscard]] double default_t_max(double mu);

/// First zero of the bound. Throws TriggerInfeasible when bound(0) >= 0.
/// Bisected roots return the lower bracket end, where the bound is negative.
[[nodiscard]] StepResult step_size(const StepBound& bound, double t_max);

/// One JSON line: kind, a, C, coefficients, sampled ET values, step, capped.
[[nodiscard]] std::string diagnostic_record(const StepBound& bound, const StepResult& result,
                                            long iteration);

}  // namespace raflow
