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

#include "raflow/triggers.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace raflow {

std::string to_string(TriggerKind kind) {
  return kind == TriggerKind::Derivative ? "d" : "p";
}

std::string to_string(TriggerMode mode) { return mode == TriggerMode::ET ? "ET" : "ST"; }

std::string to_string(Hold hold) { return hold == Hold::ZOH ? "zoh" : "hoh"; }

std::string to_string(BoundKind kind) {
  return to_string(kind.hold) + "-" + to_string(kind.trigger) + "-" + to_string(kind.mode);
}

// ---------------------------------------------------------------- constants

TriggerConstants constants_from(const Objective& objective, const FlowParams& params,
                                double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  }
  TriggerConstants c;
  c.mu = objective.mu();
  c.lipschitz = objective.lipschitz();
  c.s = params.s;
  c.sqrt_mu = std::sqrt(c.mu);
  c.sqrt_mu_s = 1.0 + std::sqrt(c.mu * c.s);
  c.mu_s = c.sqrt_mu_s * c.sqrt_mu_s;
  c.alpha = alpha;

  const double mu = c.mu, L = c.lipschitz, sm = c.sqrt_mu, sms = c.sqrt_mu_s;
  const double b4 = (4.0 * mu * mu * std::sqrt(c.s) + 3.0 * L * sm * sms) / (8.0 * L * L);
  c.beta = {sms * mu, sms * L / sm, 13.0 * sm / 16.0, b4};
  const auto [b1, b2, b3, b4_] = c.beta;
  c.a1_star = 2.0 / (b2 * b2) * (b1 * b4_ + std::sqrt(b2 * b2 * b3 * b4_ + b1 * b1 * b4_ * b4_));

  c.beta_hat = {sms * (1.5 * sm + L), 1.5 * sm * sms, 13.0 * sm / 16.0, b4,
                sms * (2.5 * sm * L - 0.5 * mu * sm)};
  const auto [h1, h2, h3, h4, h5] = c.beta_hat;
  // Positive root of h5 a^2 + h1 a - h3, in the cancellation-free form.
  const double root = 2.0 * h3 / (h1 + std::sqrt(h1 * h1 + 4.0 * h5 * h3));
  c.a2_star = alpha * std::min(root, h4 / h2);
  return c;
}

double TriggerConstants::eta1(double a) const {
  const double L = lipschitz, sms = sqrt_mu_s, sm = sqrt_mu;
  const double num = 8.0 * a * sms * (a * (mu - 5.0 * L) - 2.0 * L / sm - 3.0) + 13.0;
  const double den = 2.0 * sms * L * (3.0 * a * a * sms * L + 1.0) + 8.0 * mu;
  return num / den;
}

double TriggerConstants::eta2(double a) const {
  const double L = lipschitz, sms = sqrt_mu_s, sm = sqrt_mu;
  return -(3.0 * sms * sm * L * (4.0 * a * L - 1.0) - 4.0 * mu * mu * std::sqrt(s)) /
         (3.0 * mu_s * sm * L * L);
}

double TriggerConstants::nu1(double a) const {
  const double L = lipschitz, sms = sqrt_mu_s, sm = sqrt_mu;
  const double d = sms * L * (3.0 * a * a * sms * L + 1.0) + 4.0 * mu;
  const double first =
      (mu * (2.0 * a * a * a * sms * L * L + a * sms + 16.0) +
       8.0 * sms * L * (2.0 * a * a * sms * L + 1.0)) /
      (2.0 * sm * d);
  const double second = sms * (a * L * (8.0 * a * L + 1.0) + 4.0) / d;
  return first + second;
}

double TriggerConstants::nu2(double a) const {
  return (a * mu + 8.0 * sqrt_mu_s + 8.0 * sqrt_mu) / (3.0 * sqrt_mu_s * sqrt_mu);
}

double TriggerConstants::eta(double a) const { return std::min(eta1(a), eta2(a)); }

double TriggerConstants::nu(double a) const { return std::max(nu1(a), nu2(a)); }

double TriggerConstants::miet(double a) const {
  const double n = nu(a);
  const double e = eta(a);
  // -n + sqrt(n^2 + e) = e / (n + sqrt(n^2 + e))
  return e / (n + std::sqrt(n * n + e));
}

double TriggerConstants::g(double z) const {
  const auto [b1, b2, b3, b4] = beta;
  return (b3 + b4 * z * z) / (b2 * z - b1);
}

double TriggerConstants::z_root_plus() const {
  const auto [b1, b2, b3, b4] = beta;
  return (b1 * b4 + std::sqrt(b2 * b2 * b3 * b4 + b1 * b1 * b4 * b4)) / (b2 * b4);
}

double TriggerConstants::default_tau(int grid) const {
  if (grid < 2) throw Error(ErrorCode::InvalidArgument, "tau grid needs at least 2 points");
  double lowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double a = a2_star * static_cast<double>(i) / static_cast<double>(grid - 1);
    lowest = std::min(lowest, miet(a));
  }
  return 0.99 * lowest;
}

// ------------------------------------------------------------------ samples

SampleData sample_at(const State& p_hat, double a, const FlowParams& params,
                     const Objective& objective) {
  if (!p_hat.finite()) throw NumericError("trigger sample is not finite");
  SampleData d;
  d.p_hat = p_hat;
  d.a = a;
  const Vec xa = p_hat.x + a * p_hat.v;
  d.grad_x = objective.gradient(p_hat.x);
  d.grad_disp = a == 0.0 ? d.grad_x : objective.gradient(xa);
  d.f_x = objective.value(p_hat.x);
  d.f_disp = a == 0.0 ? d.f_x : objective.value(xa);
  d.w = 2.0 * params.sqrt_mu * p_hat.v + params.sqrt_mu_s * d.grad_disp;
  d.v2 = p_hat.v.squaredNorm();
  d.v_norm = std::sqrt(d.v2);
  d.gx2 = d.grad_x.squaredNorm();
  d.gx_norm = std::sqrt(d.gx2);
  d.ga2 = d.grad_disp.squaredNorm();
  d.ga_norm = std::sqrt(d.ga2);
  d.w2 = d.w.squaredNorm();
  d.w_norm = std::sqrt(d.w2);
  d.ga_dot_v = d.grad_disp.dot(p_hat.v);
  return d;
}

double constant_term(const SampleData& d, const FlowParams& p) {
  const double sm = p.sqrt_mu, mu = p.mu, L = p.lipschitz, a = d.a;
  const double gdiff_v = (d.grad_disp - d.grad_x).dot(d.p_hat.v);
  const double inner = -3.0 * sm / (8.0 * L) * d.gx2 + sm * (d.f_x - d.f_disp) +
                       sm * d.gx_norm * a * d.v_norm -
                       0.5 * mu * sm * a * a * d.v2 - gdiff_v + sm * a * d.ga_dot_v;
  return -13.0 * sm / 16.0 * d.v2 - mu * mu * std::sqrt(p.s) / 2.0 * d.gx2 / (L * L) +
         p.sqrt_mu_s * inner;
}

// --------------------------------------------------------------- quadratics

double Quadratic::exp_weighted_integral(double kappa, double t) const {
  if (t <= 0.0) return 0.0;
  const double z = kappa * t;
  return c2 * t * t * t * exp_moment(2, z) + c1 * t * t * exp_moment(1, z) +
         c0 * t * exp_moment(0, z);
}

std::optional<double> Quadratic::positive_root() const {
  if (!(c0 < 0.0)) return std::nullopt;
  if (c2 == 0.0) {
    if (c1 > 0.0) return -c0 / c1;
    return std::nullopt;
  }
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  if (disc < 0.0) return std::nullopt;  // only possible for c2 < 0
  const double sq = std::sqrt(disc);
  if (c2 > 0.0) {
    if (c1 >= 0.0) return -2.0 * c0 / (c1 + sq);
    return (-c1 + sq) / (2.0 * c2);
  }
  // c2 < 0: both roots share a sign; positive only if c1 > 0.
  if (c1 <= 0.0) return std::nullopt;
  return -2.0 * c0 / (c1 + sq);
}

Quadratic zoh_st_coefficients(const SampleData& d, const FlowParams& p) {
  const double sm = p.sqrt_mu, sms = p.sqrt_mu_s, mu = p.mu, L = p.lipschitz;
  const double gdiff_v = (d.grad_x - d.grad_disp).dot(d.p_hat.v);
  const double a_st = 2.0 * mu * d.v2 + sms * (L * d.v2 + 2.0 * sm * d.ga_dot_v + sms * d.ga2);
  const double b_l = sm / 4.0 *
                     (-sm * d.v2 + sms * (gdiff_v - sm / L * d.ga2 + sm * d.a * d.ga_dot_v));
  const double b_q = sm / 16.0 * d.w2 + sm * sms / 4.0 * (L / 2.0 * d.v2 + sms / 4.0 * d.ga2);
  return {b_q, a_st + b_l, constant_term(d, p)};
}

Quadratic hoh_st_coefficients(const SampleData& d, const FlowParams& p) {
  const double sm = p.sqrt_mu, sms = p.sqrt_mu_s, ms = p.mu_s, mu = p.mu, L = p.lipschitz;
  const double W = d.w_norm, G = d.ga_norm, Gx = d.gx_norm, V = d.v_norm;
  const double mu32 = mu * sm;

  const double a_l = W * (sm * V + L * sms / (2.0 * sm) * V + 1.5 * sms * G) +
                     ms / 2.0 * G * (L / sm * V + G);
  const double a_q = W * ((L * sms / (2.0 * sm) + sm) * W + L * ms / (2.0 * sm) * G);
  const double b_l = sm * sms / 4.0 *
                     (sms / (2.0 * sm) * G * Gx + 0.5 * W * (Gx / sm + V / sms) -
                      sm * G * G / L + (d.a * sm - 0.5) * d.ga_dot_v);
  const double k = 4.0 * mu * mu + L * L * sms;
  const double b_q = (10.0 * mu * mu + L * L * sms) / (32.0 * mu32) * W * W +
                     ms * k / (32.0 * mu32) * G * G + sms * k / (16.0 * mu32) * W * G;
  const double d_st = W * (sms * Gx + sm * V);
  return {a_q + b_q, a_l + b_l + d_st, constant_term(d, p)};
}

double zoh_derivative_et(const SampleData& d, double t, const FlowParams& p,
                         const Objective& objective) {
  const double sm = p.sqrt_mu, sms = p.sqrt_mu_s, mu = p.mu, L = p.lipschitz;
  const Vec& v = d.p_hat.v;
  const Vec xt = d.p_hat.x + t * v;
  const double f_change = objective.value_difference(d.p_hat.x, t * v);
  const double gdiff_v = (objective.gradient(xt) - d.grad_x).dot(v);
  const double a_et = 2.0 * mu * t * d.v2 +
                      sms * (gdiff_v + 2.0 * t * sm * d.ga_dot_v + t * sms * d.ga2);
  const double b_et = sm * t * t / 16.0 * d.w2 - t * mu / 4.0 * d.v2 +
                      sm * sms / 4.0 *
                          (f_change - t * d.ga_dot_v + t * t * sms / 4.0 * d.ga2 -
                           t * sm / L * d.ga2 + t * sm * d.a * d.ga_dot_v);
  return a_et + b_et + constant_term(d, p);
}

namespace {

struct HohTerms {
  double explicit_part;  // everything but the f(x(t)) and grad f(x(t)) terms
  State pt;
  Vec dx;
};

// Derivative HOH ET bound minus sqrt_mu_s (<grad f(x(t)), v(t)> + kappa (f(x(t)) - f_x)).
HohTerms hoh_explicit(const SampleData& d, double t, const FlowParams& p) {
  const double sm = p.sqrt_mu, sms = p.sqrt_mu_s, L = p.lipschitz;
  const State inc = hoh_increment(d.p_hat, d.grad_disp, t, p);
  const Vec& dv = inc.v;
  const Vec& dx = inc.x;
  const State pt{d.p_hat.x + dx, d.p_hat.v + dv};
  const Vec delta = dv + 2.0 * sm * dx;
  const Vec& ga = d.grad_disp;
  const double frak_a = sms * (-d.grad_x.dot(pt.v) - dv.dot(ga) - sm * dx.dot(ga)) -
                        sm * dv.dot(pt.v);
  const double frak_b = sm / 4.0 *
                        (-sm * sms * t * d.ga2 / L + sm * sms * t * d.a * d.ga_dot_v +
                         0.25 * dv.dot(2.0 * d.p_hat.v + dv) + 0.25 * delta.squaredNorm() +
                         0.5 * delta.dot(d.p_hat.v));
  const double frak_d = sms * d.grad_x.dot(dv) - sm * d.p_hat.v.dot(dv);
  return {frak_a + frak_b + frak_d, pt, dx};
}

}  // namespace

double hoh_derivative_et(const SampleData& d, double t, const FlowParams& p,
                         const Objective& objective) {
  const double sm = p.sqrt_mu, sms = p.sqrt_mu_s;
  const HohTerms h = hoh_explicit(d, t, p);
  const double f_change = objective.value_difference(d.p_hat.x, h.dx);
  const double gv = objective.gradient(h.pt.x).dot(h.pt.v);
  return sms * gv + sm / 4.0 * sms * f_change + h.explicit_part + constant_term(d, p);
}

// ---------------------------------------------------------------- StepBound

StepBound::StepBound(BoundKind kind, const State& p_hat, double a, const FlowParams& params,
                     const Objective& objective)
    : kind_(kind),
      params_(params.with_displacement(a)),
      objective_(&objective),
      data_(sample_at(p_hat, a, params_, objective)) {
  st_ = kind.hold == Hold::ZOH ? zoh_st_coefficients(data_, params_)
                               : hoh_st_coefficients(data_, params_);
  if (kind.mode == TriggerMode::ET && kind.trigger == TriggerKind::Performance) {
    const double sm = params_.sqrt_mu, sms = params_.sqrt_mu_s, mu = params_.mu,
                 L = params_.lipschitz;
    if (kind.hold == Hold::ZOH) {
      // ZOH ET integrand = sms (F' + kappa F~) + this quadratic, F~ = f(x+tv) - f(x).
      const SampleData& d = data_;
      zoh_remainder_.c0 = st_.c0 - sms * d.grad_x.dot(d.p_hat.v);
      zoh_remainder_.c1 = 2.0 * mu * d.v2 + 2.0 * sm * sms * d.ga_dot_v + params_.mu_s * d.ga2 -
                          mu / 4.0 * d.v2 +
                          sm * sms / 4.0 *
                              (-d.ga_dot_v - sm / L * d.ga2 + sm * d.a * d.ga_dot_v);
      zoh_remainder_.c2 = sm / 16.0 * d.w2 + sm * params_.mu_s / 16.0 * d.ga2;
    } else {
      const double kappa = sm / 4.0;
      remainder_integral_ = std::make_shared<CumulativeIntegral>(
          [d = data_, p = params_, c = st_.c0, kappa](double z) {
            return std::exp(kappa * z) * (hoh_explicit(d, z, p).explicit_part + c);
          });
    }
  }
}

State StepBound::trajectory(double t) const {
  if (kind_.hold == Hold::ZOH) {
    return {data_.p_hat.x + t * data_.p_hat.v,
            data_.p_hat.v - t * data_.w};
  }
  return hoh_trajectory(data_.p_hat, data_.grad_disp, t, params_);
}

double StepBound::derivative_at(double t) const {
  if (kind_.mode == TriggerMode::ST) return st_(t);
  return kind_.hold == Hold::ZOH ? zoh_derivative_et(data_, t, params_, *objective_)
                                 : hoh_derivative_et(data_, t, params_, *objective_);
}

double StepBound::performance_et(double t) const {
  const double kappa = params_.sqrt_mu / 4.0;
  const double sms = params_.sqrt_mu_s;
  // int_0^t e^{k z} sms (F' + k F~) dz = sms e^{k t} F~(t)
  const Vec dx = kind_.hold == Hold::ZOH
                     ? Vec(t * data_.p_hat.v)
                     : hoh_increment(data_.p_hat, data_.grad_disp, t, params_).x;
  const double exact =
      sms * std::exp(kappa * t) * objective_->value_difference(data_.p_hat.x, dx);
  const double rest = kind_.hold == Hold::ZOH ? zoh_remainder_.exp_weighted_integral(kappa, t)
                                              : (*remainder_integral_)(t);
  return exact + rest;
}

double StepBound::operator()(double t) const {
  if (kind_.trigger == TriggerKind::Derivative) return derivative_at(t);
  if (t <= 0.0) return 0.0;
  if (kind_.mode == TriggerMode::ST) return st_.exp_weighted_integral(params_.sqrt_mu / 4.0, t);
  return performance_et(t);
}

StepBound make_bound(BoundKind kind, const State& p_hat, double a, const FlowParams& params,
                     const Objective& objective) {
  return StepBound(kind, p_hat, a, params, objective);
}

#define RAFLOW_BOUND_FACTORY(name, trig, md, hd)                                     \
  StepBound name(const State& p_hat, double a, const FlowParams& params,            \
                 const Objective& objective) {                                      \
    return StepBound({TriggerKind::trig, TriggerMode::md, Hold::hd}, p_hat, a, params, \
                     objective);                                                    \
  }

RAFLOW_BOUND_FACTORY(zoh_bound_derivative_st, Derivative, ST, ZOH)
RAFLOW_BOUND_FACTORY(zoh_bound_derivative_et, Derivative, ET, ZOH)
RAFLOW_BOUND_FACTORY(zoh_bound_performance_st, Performance, ST, ZOH)
RAFLOW_BOUND_FACTORY(zoh_bound_performance_et, Performance, ET, ZOH)
RAFLOW_BOUND_FACTORY(hoh_bound_derivative_st, Derivative, ST, HOH)
RAFLOW_BOUND_FACTORY(hoh_bound_derivative_et, Derivative, ET, HOH)
RAFLOW_BOUND_FACTORY(hoh_bound_performance_st, Performance, ST, HOH)
RAFLOW_BOUND_FACTORY(hoh_bound_performance_et, Performance, ET, HOH)

#undef RAFLOW_BOUND_FACTORY

// ---------------------------------------------------------------- step size

double default_t_max(double mu) { return 10.0 / std::sqrt(mu); }

namespace {

constexpr int kMaxBisections = 200;

bool narrow(double lo, double hi) { return hi - lo < 1e-14 * (1.0 + lo); }

template <class F>
StepResult bracket_root(const F& fn, double start, double t_max, int probes) {
  double lo = std::min(start, t_max);
  double hi;
  ++probes;
  if (fn(lo) >= 0.0) {
    hi = lo;
    lo = 0.0;
  } else {
    if (lo >= t_max) return {t_max, true, probes};
    hi = lo;
    for (;;) {
      hi = std::min(2.0 * hi, t_max);
      ++probes;
      if (fn(hi) >= 0.0) break;
      lo = hi;
      if (hi >= t_max) return {t_max, true, probes};
    }
  }
  for (int i = 0; i < kMaxBisections && !narrow(lo, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    ++probes;
    if (fn(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, false, probes};
}

}  // namespace

StepResult step_size(const StepBound& bound, double t_max) {
  if (!(t_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be positive");
  const double c = bound.constant_term();
  if (!(c < 0.0)) {
    throw Error(ErrorCode::TriggerInfeasible,
                "trigger bound is nonnegative at t = 0 (C = " + std::to_string(c) + ")");
  }
  const BoundKind kind = bound.kind();
  const Quadratic& q = bound.st_coeffs();
  const std::optional<double> root = q.positive_root();
  const bool st_capped = !root || *root >= t_max;
  const double step_d_st = st_capped ? t_max : *root;

  if (kind.trigger == TriggerKind::Derivative) {
    if (kind.mode == TriggerMode::ST) return {step_d_st, st_capped, 0};
    return bracket_root([&](double t) { return bound(t); }, step_d_st, t_max, 0);
  }
  const double kappa = bound.params().sqrt_mu / 4.0;
  // The performance ST integral is minimized at the derivative ST root.
  StepResult st = st_capped
                      ? StepResult{t_max, true, 0}
                      : bracket_root([&](double t) { return q.exp_weighted_integral(kappa, t); },
                                     step_d_st, t_max, 0);
  if (kind.mode == TriggerMode::ST) return st;
  return bracket_root([&](double t) { return bound(t); }, st.step, t_max, st.probes);
}

std::string diagnostic_record(const StepBound& bound, const StepResult& result,
                              long iteration) {
  nlohmann::ordered_json j;
  j["k"] = iteration;
  j["kind"] = to_string(bound.kind());
  j["a"] = bound.a();
  j["C"] = bound.constant_term();
  const Quadratic& q = bound.st_coeffs();
  j["coefficients"] = {q.c2, q.c1, q.c0};
  if (bound.kind().mode == TriggerMode::ET) {
    nlohmann::json samples = nlohmann::json::array();
    for (double f : {0.25, 0.5, 0.75, 1.0}) {
      const double t = f * result.step;
      samples.push_back({t, bound(t)});
    }
    j["samples"] = samples;
  }
  j["step"] = result.step;
  j["capped"] = result.capped;
  j["probes"] = result.probes;
  return j.dump();
}

}  // namespace raflow
