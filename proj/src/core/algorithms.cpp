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

#include "raflow/algorithms.hpp"

#include "raflow/lyapunov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

namespace raflow {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::DisplacedGradient: return "dg";
    case Algorithm::AdaptiveDG: return "adg";
    case Algorithm::AdaptiveHOH: return "hoh";
    case Algorithm::Nesterov: return "nesterov";
    case Algorithm::HeavyBall: return "heavy-ball";
    case Algorithm::Continuous: return "continuous";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  for (Algorithm a : {Algorithm::DisplacedGradient, Algorithm::AdaptiveDG,
                      Algorithm::AdaptiveHOH, Algorithm::Nesterov, Algorithm::HeavyBall,
                      Algorithm::Continuous}) {
    if (to_string(a) == name) return a;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + name + "'");
}

void AlgoConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(a0 >= 0.0) || !std::isfinite(a0)) fail("a must be nonnegative");
  if (!(r_i > 1.0)) fail("r_i must exceed 1");
  if (!(r_d > 0.0 && r_d < 1.0)) fail("r_d must lie in (0, 1)");
  if (!(a_max > 0.0)) fail("a_max must be positive");
  if (std::isnan(tau)) fail("tau must be a number");
  if (max_iters <= 0) fail("max_iters must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (!(rk4_step > 0.0)) fail("rk4 step must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kMaxShrinks = 200;
constexpr double kMinDisplacement = 1e-300;

// Optional diagnostics from the Lyapunov oracle; absent without x*.
class Recorder {
 public:
  Recorder(ObjectivePtr objective, const FlowParams& params, bool with_lyapunov)
      : objective_(std::move(objective)) {
    if (objective_->minimizer()) {
      f_star_ = *objective_->optimal_value();
      if (with_lyapunov) ctx_ = std::make_unique<LyapunovContext>(objective_, params);
    }
  }

  IterationRecord make(long k, double t, const State& p, double a, double grad_norm) const {
    IterationRecord r;
    r.k = k;
    r.t = t;
    r.delta = std::numeric_limits<double>::quiet_NaN();
    r.state = p;
    r.a = a;
    r.grad_norm = grad_norm;
    if (f_star_) r.f_gap = objective_->value(p.x) - *f_star_;
    if (ctx_) r.lyapunov = lyapunov_value(p, *ctx_);
    return r;
  }

 private:
  ObjectivePtr objective_;
  std::optional<double> f_star_;
  std::unique_ptr<LyapunovContext> ctx_;
};

double resolve_s(const AlgoConfig& c, const Objective& f) {
  return c.s > 0.0 ? c.s : FlowParams::default_s(f);
}

double resolve_t_max(const AlgoConfig& c, const Objective& f) {
  return c.t_max > 0.0 ? c.t_max : default_t_max(f.mu());
}

void check_start(const State& p0, const Objective& f) {
  if (p0.x.size() != f.dimension() || p0.v.size() != f.dimension()) {
    throw Error(ErrorCode::InvalidArgument, "initial state dimension does not match objective");
  }
  if (!p0.finite()) throw Error(ErrorCode::InvalidArgument, "initial state is not finite");
}

void finish(RunTrace& trace, Clock::time_point start, double epsilon) {
  trace.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  trace.converged = !trace.records.empty() && trace.records.back().grad_norm < epsilon;
}

void guard_finite(const State& p, long k) {
  if (!p.finite()) throw NumericError("iterate " + std::to_string(k) + " is not finite", k);
}

// Shared loop of the three triggered algorithms.
RunTrace run_triggered(Algorithm algorithm, const State& p0, const AlgoConfig& config,
                       ObjectivePtr objective) {
  config.validate();
  const Objective& f = *objective;
  check_start(p0, f);
  const auto start = Clock::now();
  const bool adaptive = algorithm != Algorithm::DisplacedGradient;
  const Hold hold = algorithm == Algorithm::AdaptiveHOH ? Hold::HOH : Hold::ZOH;
  const BoundKind kind{config.trigger, config.mode, hold};

  RunTrace trace;
  trace.algorithm = algorithm;
  trace.kind = kind;
  trace.name = to_string(algorithm) + "-" + to_string(config.trigger) + "-" + to_string(config.mode);
  trace.params = FlowParams::make(f, resolve_s(config, f), config.a0);
  const TriggerConstants constants = constants_from(f, trace.params, config.alpha);
  trace.tau = adaptive ? (config.tau > 0.0 ? config.tau : constants.default_tau()) : 0.0;
  const double t_max = resolve_t_max(config, f);
  if (!adaptive && config.a0 > constants.a2_star) {
    trace.warnings.push_back("a = " + std::to_string(config.a0) + " exceeds a*_2 = " +
                             std::to_string(constants.a2_star) +
                             "; the trigger may be infeasible");
  }

  const Recorder recorder(objective, trace.params, true);
  State p = p0;
  double a = config.a0;
  double t = 0.0;
  Vec grad = f.gradient(p.x);
  trace.records.push_back(recorder.make(0, 0.0, p, a, grad.norm()));

  for (long k = 0; trace.records.back().grad_norm >= config.epsilon && k < config.max_iters;
       ++k) {
    bool increase = true;
    int shrinks = 0;
    auto shrink = [&] {
      a *= config.r_d;
      increase = false;
      if (++shrinks > kMaxShrinks || a < kMinDisplacement) {
        throw NumericError("displacement search did not terminate at iterate " +
                               std::to_string(k),
                           k);
      }
    };

    std::optional<StepBound> bound;
    StepResult result;
    try {
      for (;;) {
        bound.emplace(kind, p, a, trace.params, f);
        if (!adaptive) {
          if (!(bound->constant_term() < 0.0)) {
            throw Error(ErrorCode::TriggerInfeasible,
                        "trigger infeasible at iterate " + std::to_string(k) + " with a = " +
                            std::to_string(a));
          }
          result = step_size(*bound, t_max);
          break;
        }
        if (!(bound->constant_term() < 0.0)) {
          shrink();
          continue;
        }
        result = step_size(*bound, t_max);
        if (result.step >= trace.tau) break;
        shrink();
      }
    } catch (const NumericError& e) {
      if (e.index() >= 0) throw;
      throw NumericError(std::string(e.what()) + " at iterate " + std::to_string(k), k);
    }
    if (config.trigger_log) config.trigger_log(diagnostic_record(*bound, result, k));

    IterationRecord& current = trace.records.back();
    current.delta = result.step;
    current.a = a;
    current.inner_retries = shrinks;
    current.capped = result.capped;

    p = bound->trajectory(result.step);
    guard_finite(p, k + 1);
    t += result.step;
    grad = f.gradient(p.x);
    if (adaptive && increase) a = std::min(a * config.r_i, std::max(config.a_max, a));
    trace.records.push_back(recorder.make(k + 1, t, p, a, grad.norm()));
  }
  finish(trace, start, config.epsilon);
  return trace;
}

}  // namespace

State initial_state(const Vec& x0, const AlgoConfig& config, const Objective& objective) {
  const FlowParams params = FlowParams::make(objective, resolve_s(config, objective), config.a0);
  return {x0, initial_velocity(x0, params, objective)};
}

RunTrace run_displaced_gradient(const State& p0, const AlgoConfig& config,
                                ObjectivePtr objective) {
  return run_triggered(Algorithm::DisplacedGradient, p0, config, std::move(objective));
}

RunTrace run_adaptive_dg(const State& p0, const AlgoConfig& config, ObjectivePtr objective) {
  return run_triggered(Algorithm::AdaptiveDG, p0, config, std::move(objective));
}

RunTrace run_adaptive_hoh(const State& p0, const AlgoConfig& config, ObjectivePtr objective) {
  return run_triggered(Algorithm::AdaptiveHOH, p0, config, std::move(objective));
}

RunTrace run_nesterov(const Vec& x0, double s, ObjectivePtr objective, long max_iters,
                      double epsilon) {
  const Objective& f = *objective;
  if (!(s > 0.0)) s = 1.0 / f.lipschitz();
  if (s > 1.0 / f.lipschitz() * (1.0 + 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "Nesterov step must not exceed 1/L");
  }
  const auto start = Clock::now();
  RunTrace trace;
  trace.algorithm = Algorithm::Nesterov;
  trace.name = "nesterov";
  trace.params = FlowParams::make(f, s, 0.0);
  const Recorder recorder(objective, trace.params, false);
  const double root = std::sqrt(f.mu() * s);
  const double momentum = (1.0 - root) / (1.0 + root);

  Vec x = x0;
  Vec y = x0;
  Vec x_prev = x0;
  Vec g = f.gradient(x);
  trace.records.push_back(recorder.make(0, 0.0, {x, Vec::Zero(x.size())}, 0.0, g.norm()));
  for (long k = 0; trace.records.back().grad_norm >= epsilon && k < max_iters; ++k) {
    trace.records.back().delta = s;
    const Vec y_next = x - s * g;
    x_prev = x;
    x = y_next + momentum * (y_next - y);
    y = y_next;
    State p{x, x - x_prev};
    guard_finite(p, k + 1);
    g = f.gradient(x);
    trace.records.push_back(recorder.make(k + 1, s * static_cast<double>(k + 1), p, 0.0, g.norm()));
  }
  finish(trace, start, epsilon);
  return trace;
}

RunTrace run_heavy_ball_discrete(const Vec& x0, ObjectivePtr objective, long max_iters,
                                 double epsilon) {
  const Objective& f = *objective;
  const auto start = Clock::now();
  RunTrace trace;
  trace.algorithm = Algorithm::HeavyBall;
  trace.name = "heavy-ball";
  trace.params = FlowParams::make(f, FlowParams::default_s(f), 0.0);
  const Recorder recorder(objective, trace.params, false);
  const double sl = std::sqrt(f.lipschitz());
  const double sm = std::sqrt(f.mu());
  const double step = 4.0 / ((sl + sm) * (sl + sm));
  const double ratio = (sl - sm) / (sl + sm);
  const double momentum = ratio * ratio;

  Vec x = x0;
  Vec x_prev = x0;
  Vec g = f.gradient(x);
  trace.records.push_back(recorder.make(0, 0.0, {x, Vec::Zero(x.size())}, 0.0, g.norm()));
  for (long k = 0; trace.records.back().grad_norm >= epsilon && k < max_iters; ++k) {
    trace.records.back().delta = step;
    Vec next = x - step * g + momentum * (x - x_prev);
    x_prev = x;
    x = std::move(next);
    State p{x, x - x_prev};
    guard_finite(p, k + 1);
    g = f.gradient(x);
    trace.records.push_back(
        recorder.make(k + 1, step * static_cast<double>(k + 1), p, 0.0, g.norm()));
  }
  finish(trace, start, epsilon);
  return trace;
}

RunTrace run_continuous_reference(const State& p0, double a, const FlowParams& params,
                                  ObjectivePtr objective, double horizon, double step) {
  const Objective& f = *objective;
  check_start(p0, f);
  const auto start = Clock::now();
  RunTrace trace;
  trace.algorithm = Algorithm::Continuous;
  trace.name = "continuous";
  trace.params = params.with_displacement(a);
  const FlowParams fp = trace.params;
  const ReferenceTrace ref = rk4_reference(
      [&](const State& p) { return field_hb_displaced(p, fp, f); }, p0, horizon, step);
  const Recorder recorder(objective, fp, true);
  trace.records.reserve(ref.states.size());
  for (std::size_t i = 0; i < ref.states.size(); ++i) {
    IterationRecord r = recorder.make(static_cast<long>(i), ref.times[i], ref.states[i], a,
                                      f.gradient(ref.states[i].x).norm());
    if (i + 1 < ref.states.size()) r.delta = ref.times[i + 1] - ref.times[i];
    trace.records.push_back(std::move(r));
  }
  trace.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  trace.converged = false;
  return trace;
}

RunTrace run_algorithm(Algorithm algorithm, const Vec& x0, const AlgoConfig& config,
                       ObjectivePtr objective) {
  switch (algorithm) {
    case Algorithm::DisplacedGradient:
    case Algorithm::AdaptiveDG:
    case Algorithm::AdaptiveHOH:
    {
      const State p0 = initial_state(x0, config, *objective);
      return run_triggered(algorithm, p0, config, std::move(objective));
    }
    case Algorithm::Nesterov:
      return run_nesterov(x0, config.baseline_step, std::move(objective), config.max_iters,
                          config.epsilon);
    case Algorithm::HeavyBall:
      return run_heavy_ball_discrete(x0, std::move(objective), config.max_iters,
                                     config.epsilon);
    case Algorithm::Continuous: {
      config.validate();
      const FlowParams params =
          FlowParams::make(*objective, resolve_s(config, *objective), config.a0);
      const double horizon =
          config.horizon > 0.0 ? config.horizon : 150.0 / std::sqrt(objective->mu());
      RunTrace trace = run_continuous_reference({x0, initial_velocity(x0, params, *objective)},
                                                config.a0, params, objective, horizon,
                                                config.rk4_step);
      trace.converged = trace.records.back().grad_norm < config.epsilon;
      return trace;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm");
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  const Eigen::Index n = trace.records.empty() ? 0 : trace.records.front().state.dimension();
  out << "k,t,delta,a,grad_norm,f_gap,lyapunov";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < n; ++i) out << ",v_" << i;
  out << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  auto cell = [&](double value) {
    if (std::isfinite(value)) line << value;
  };
  for (const IterationRecord& r : trace.records) {
    line.str("");
    line << r.k << ',';
    cell(r.t);
    line << ',';
    cell(r.delta);
    line << ',';
    cell(r.a);
    line << ',';
    cell(r.grad_norm);
    line << ',';
    if (r.f_gap) cell(*r.f_gap);
    line << ',';
    if (r.lyapunov) cell(*r.lyapunov);
    for (Eigen::Index i = 0; i < n; ++i) {
      line << ',';
      cell(r.state.x[i]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      line << ',';
      cell(r.state.v[i]);
    }
    line << '\n';
    out << line.str();
  }
}

}  // namespace raflow
