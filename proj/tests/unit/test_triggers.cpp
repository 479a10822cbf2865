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

#include "oracles.hpp"

#include "raflow/triggers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using raflow::BoundKind;
using raflow::FlowParams;
using raflow::Hold;
using raflow::State;
using raflow::TriggerKind;
using raflow::TriggerMode;
using raflow::Vec;

namespace {

struct Problem {
  raflow::ObjectivePtr f;
  FlowParams params;
  raflow::TriggerConstants tc;
};

std::vector<Problem> problems() {
  std::vector<Problem> out;
  for (const auto& f : {raflow::make_quadratic(oracle::benchmark_diag()),
                        raflow::make_logistic(raflow::generate_dataset(20210))}) {
    const FlowParams params = FlowParams::make(*f, FlowParams::default_s(*f), 0.0);
    out.push_back({f, params, raflow::constants_from(*f, params)});
  }
  return out;
}

std::vector<BoundKind> all_kinds() {
  std::vector<BoundKind> kinds;
  for (Hold h : {Hold::ZOH, Hold::HOH}) {
    for (TriggerKind k : {TriggerKind::Derivative, TriggerKind::Performance}) {
      for (TriggerMode m : {TriggerMode::ST, TriggerMode::ET}) kinds.push_back({k, m, h});
    }
  }
  return kinds;
}

// d/dt V(p(t)) + kappa V(p(t)) along the hold, from the oracle gradient.
double oracle_decay(const Problem& pr, const raflow::StepBound& b, double t) {
  const State p = b.trajectory(t);
  const Vec& gd = b.sample().grad_disp;
  const State vel =
      b.kind().hold == Hold::ZOH
          ? State{b.sample().p_hat.v,
                  Vec(-2.0 * pr.params.sqrt_mu * b.sample().p_hat.v - pr.params.sqrt_mu_s * gd)}
          : State{p.v, Vec(-2.0 * pr.params.sqrt_mu * p.v - pr.params.sqrt_mu_s * gd)};
  const State g = oracle::lyapunov_gradient(*pr.f, p, pr.params.s);
  return g.x.dot(vel.x) + g.v.dot(vel.v) +
         0.25 * pr.params.sqrt_mu * oracle::lyapunov(*pr.f, p, pr.params.s);
}

}  // namespace

TEST(Constants, FirstThresholdDualComputation) {
  for (const auto& pr : problems()) {
    const auto& tc = pr.tc;
    const auto [b1, b2, b3, b4] = tc.beta;
    const double zr = tc.z_root_plus();
    EXPECT_GT(zr, b1 / b2);
    EXPECT_NEAR(tc.g(zr) / tc.a1_star, 1.0, 1e-12);
    const double lo = b1 / b2;
    double best = INFINITY;
    for (int i = 1; i <= 1000000; ++i) best = std::min(best, tc.g(lo + 1e3 * i / 1e6));
    EXPECT_GE(best, tc.g(zr) - 1e-9);
    EXPECT_GT(tc.a1_star, 0.0);
  }
}

TEST(Constants, BetasFromTheirDefinitions) {
  const auto pr = problems().front();
  const double mu = 0.02, L = 200.0, s = pr.params.s;
  const double sm = std::sqrt(mu), sms = 1.0 + std::sqrt(mu * s);
  EXPECT_DOUBLE_EQ(pr.tc.beta[0], sms * mu);
  EXPECT_DOUBLE_EQ(pr.tc.beta[1], sms * L / sm);
  EXPECT_DOUBLE_EQ(pr.tc.beta[2], 13.0 * sm / 16.0);
  EXPECT_DOUBLE_EQ(pr.tc.beta[3], (4.0 * mu * mu * std::sqrt(s) + 3.0 * L * sm * sms) / (8.0 * L * L));
  const auto& h = pr.tc.beta_hat;
  const double root = (-h[0] + std::sqrt(h[0] * h[0] + 4.0 * h[4] * h[2])) / (2.0 * h[4]);
  EXPECT_NEAR(pr.tc.a2_star / (0.9 * std::min(root, h[3] / h[1])), 1.0, 1e-12);
  EXPECT_NEAR(pr.tc.a2_star, 5.164e-4, 1e-6);
  EXPECT_THROW((void)raflow::constants_from(*pr.f, pr.params, 1.0), raflow::Error);
}

TEST(Constants, MietPositiveOnGrid) {
  for (const auto& pr : problems()) {
    for (int i = 0; i < 1024; ++i) {
      const double a = pr.tc.a2_star * i / 1023.0;
      ASSERT_GT(pr.tc.eta(a), 0.0) << a;
      ASSERT_GT(pr.tc.nu(a), 0.0) << a;
      const double m = pr.tc.miet(a);
      ASSERT_GT(m, 0.0) << a;
      const double n = pr.tc.nu(a), e = pr.tc.eta(a);
      EXPECT_NEAR(m, -n + std::sqrt(n * n + e), 1e-9 * m);
    }
    EXPECT_GT(pr.tc.default_tau(), 0.0);
    EXPECT_LE(pr.tc.default_tau(), 0.99 * pr.tc.miet(0.0));
  }
  EXPECT_NEAR(problems().front().tc.default_tau(), 5.13e-5, 1e-6);
}

TEST(Bounds, ConstantTermShared) {
  for (const auto& pr : problems()) {
    for (const State& p : oracle::states(*pr.f, 50, 1)) {
      const double a = 0.5 * pr.tc.a2_star;
      const auto d = raflow::sample_at(p, a, pr.params.with_displacement(a), *pr.f);
      const double C = raflow::constant_term(d, pr.params.with_displacement(a));
      EXPECT_LT(C, 0.0);
      for (const BoundKind& k : all_kinds()) {
        const auto b = raflow::make_bound(k, p, a, pr.params.with_displacement(a), *pr.f);
        EXPECT_EQ(b.constant_term(), C) << raflow::to_string(k);
        EXPECT_EQ(b.st_coeffs().c0, C);
        EXPECT_GE(b.st_coeffs().c2, 0.0);
        if (k.trigger == TriggerKind::Derivative) {
          EXPECT_EQ(b(0.0), C) << raflow::to_string(k);
        } else {
          EXPECT_EQ(b(0.0), 0.0) << raflow::to_string(k);
        }
      }
    }
  }
}

TEST(Bounds, ConstantTermVanishesAtOptimum) {
  for (const auto& pr : problems()) {
    const State opt{*pr.f->minimizer(), Vec::Zero(pr.f->dimension())};
    const auto d = raflow::sample_at(opt, 0.0, pr.params, *pr.f);
    EXPECT_NEAR(raflow::constant_term(d, pr.params), 0.0, 1e-12);
  }
  {
    const auto pr = problems().front();
    const State opt{*pr.f->minimizer(), Vec::Zero(pr.f->dimension())};
    EXPECT_THROW((void)raflow::step_size(raflow::zoh_bound_derivative_st(opt, 0.0, pr.params, *pr.f), 1.0),
                 raflow::Error);
  }
}

TEST(Bounds, NamedConstructorsMatchMakeBound) {
  const auto pr = problems().front();
  const State p = oracle::states(*pr.f, 1, 2).front();
  const double a = pr.tc.a2_star;
  const FlowParams fp = pr.params.with_displacement(a);
  using Maker = raflow::StepBound (*)(const State&, double, const FlowParams&, const raflow::Objective&);
  const std::vector<std::pair<BoundKind, Maker>> pairs = {
      {{TriggerKind::Derivative, TriggerMode::ST, Hold::ZOH}, raflow::zoh_bound_derivative_st},
      {{TriggerKind::Derivative, TriggerMode::ET, Hold::ZOH}, raflow::zoh_bound_derivative_et},
      {{TriggerKind::Performance, TriggerMode::ST, Hold::ZOH}, raflow::zoh_bound_performance_st},
      {{TriggerKind::Performance, TriggerMode::ET, Hold::ZOH}, raflow::zoh_bound_performance_et},
      {{TriggerKind::Derivative, TriggerMode::ST, Hold::HOH}, raflow::hoh_bound_derivative_st},
      {{TriggerKind::Derivative, TriggerMode::ET, Hold::HOH}, raflow::hoh_bound_derivative_et},
      {{TriggerKind::Performance, TriggerMode::ST, Hold::HOH}, raflow::hoh_bound_performance_st},
      {{TriggerKind::Performance, TriggerMode::ET, Hold::HOH}, raflow::hoh_bound_performance_et}};
  for (const auto& [kind, make] : pairs) {
    const auto b = make(p, a, fp, *pr.f);
    EXPECT_EQ(b.kind(), kind);
    const auto ref = raflow::make_bound(kind, p, a, fp, *pr.f);
    EXPECT_EQ(b(1e-4), ref(1e-4)) << raflow::to_string(kind);
  }
}

TEST(Bounds, EventTriggeredBelowSelfTriggered) {
  for (const auto& pr : problems()) {
    for (const State& p : oracle::states(*pr.f, 100, 3)) {
      const double a = pr.tc.a2_star;
      const FlowParams fp = pr.params.with_displacement(a);
      for (Hold h : {Hold::ZOH, Hold::HOH}) {
        for (TriggerKind k : {TriggerKind::Derivative, TriggerKind::Performance}) {
          const auto st = raflow::make_bound({k, TriggerMode::ST, h}, p, a, fp, *pr.f);
          const auto et = raflow::make_bound({k, TriggerMode::ET, h}, p, a, fp, *pr.f);
          const double step = raflow::step_size(st, 1e3).step;
          for (int i = 0; i <= 20; ++i) {
            const double t = 2.0 * step * i / 20.0;
            const double sv = st(t);
            EXPECT_LE(et(t), sv + 1e-9 * (1.0 + std::abs(sv))) << raflow::to_string(h);
          }
        }
      }
    }
  }
}

TEST(Bounds, SoundAgainstLyapunovOracle) {
  for (const auto& pr : problems()) {
    const auto states = oracle::states(*pr.f, 40, 4);
    const double kappa = 0.25 * pr.params.sqrt_mu;
    for (const BoundKind& kind : all_kinds()) {
      for (std::size_t i = 0; i < states.size(); ++i) {
        const State& p = states[i];
        const double a = (i % 3) * 0.5 * pr.tc.a2_star;
        const FlowParams fp = pr.params.with_displacement(a);
        const auto b = raflow::make_bound(kind, p, a, fp, *pr.f);
        const double step = raflow::step_size(b, raflow::default_t_max(pr.f->mu())).step;
        const double V0 = oracle::lyapunov(*pr.f, p, pr.params.s);
        for (int j = 0; j <= 100; ++j) {
          const double t = step * j / 100.0;
          if (kind.trigger == TriggerKind::Derivative) {
            const double lhs = oracle_decay(pr, b, t);
            const double V = oracle::lyapunov(*pr.f, b.trajectory(t), pr.params.s);
            ASSERT_LE(lhs, b(t) + 1e-9 * (1.0 + V)) << raflow::to_string(kind) << " t=" << t;
          } else {
            const double V = oracle::lyapunov(*pr.f, b.trajectory(t), pr.params.s);
            const double e = std::exp(-kappa * t);
            ASSERT_LE(V - e * V0, e * b(t) + 1e-9 * (1.0 + V)) << raflow::to_string(kind);
            ASSERT_LE(V, V0 * (1.0 + 1e-9) + 1e-9);
          }
        }
      }
    }
  }
}

TEST(Steps, Orderings) {
  for (const auto& pr : problems()) {
    const double tmax = raflow::default_t_max(pr.f->mu());
    for (const State& p : oracle::states(*pr.f, 100, 5)) {
      for (Hold h : {Hold::ZOH, Hold::HOH}) {
        const double a = pr.tc.a2_star;
        const FlowParams fp = pr.params.with_displacement(a);
        auto step = [&](TriggerKind k, TriggerMode m) {
          return raflow::step_size(raflow::make_bound({k, m, h}, p, a, fp, *pr.f), tmax).step;
        };
        const double dst = step(TriggerKind::Derivative, TriggerMode::ST);
        const double det = step(TriggerKind::Derivative, TriggerMode::ET);
        const double pst = step(TriggerKind::Performance, TriggerMode::ST);
        const double pet = step(TriggerKind::Performance, TriggerMode::ET);
        const auto tol = [](double t) { return 1e-12 * (1.0 + t); };
        EXPECT_LE(dst, det + tol(det));
        EXPECT_LE(dst, pst + tol(pst));
        EXPECT_LE(pst, pet + tol(pet));
      }
    }
  }
}

TEST(Steps, AboveMiet) {
  for (const auto& pr : problems()) {
    for (double a : {0.0, 0.5 * pr.tc.a2_star, pr.tc.a2_star}) {
      const double m = pr.tc.miet(a);
      const FlowParams fp = pr.params.with_displacement(a);
      for (const State& p : oracle::states(*pr.f, 1000, 6, -3.0, 1.7)) {
        const auto b = raflow::zoh_bound_derivative_st(p, a, fp, *pr.f);
        ASSERT_GE(raflow::step_size(b, 1e6).step, m) << a;
      }
    }
  }
}

TEST(Steps, RootConsistency) {
  for (const auto& pr : problems()) {
    const double tmax = raflow::default_t_max(pr.f->mu());
    for (const State& p : oracle::states(*pr.f, 30, 7)) {
      const double a = 0.5 * pr.tc.a2_star;
      const FlowParams fp = pr.params.with_displacement(a);
      for (const BoundKind& kind : all_kinds()) {
        const auto b = raflow::make_bound(kind, p, a, fp, *pr.f);
        const auto r = raflow::step_size(b, tmax);
        ASSERT_FALSE(r.capped);
        const double scale = std::abs(b.constant_term()) * (1.0 + r.step);
        EXPECT_LE(b(r.step), 1e-9 * scale) << raflow::to_string(kind);
        EXPECT_GE(b(r.step * (1.0 + 1e-6)), -1e-9 * scale) << raflow::to_string(kind);
      }
    }
  }
}

TEST(Steps, PerformanceMinimumAtDerivativeRoot) {
  for (const auto& pr : problems()) {
    for (const State& p : oracle::states(*pr.f, 30, 8)) {
      const double a = 0.5 * pr.tc.a2_star;
      const FlowParams fp = pr.params.with_displacement(a);
      for (Hold h : {Hold::ZOH, Hold::HOH}) {
        const auto d = raflow::make_bound({TriggerKind::Derivative, TriggerMode::ST, h}, p, a, fp, *pr.f);
        const auto perf = raflow::make_bound({TriggerKind::Performance, TriggerMode::ST, h}, p, a, fp, *pr.f);
        const double t = raflow::step_size(d, 1e6).step;
        EXPECT_LT(perf(t), 0.0);
        EXPECT_LE(perf(t), perf(0.99 * t));
        EXPECT_LE(perf(t), perf(1.01 * t));
        EXPECT_LT(perf(0.5 * t), 0.0);
      }
    }
  }
}

TEST(Steps, ClosedFormPerformanceMatchesQuadrature) {
  for (const auto& pr : problems()) {
    const double kappa = 0.25 * pr.params.sqrt_mu;
    const auto states = oracle::states(*pr.f, 25, 9);
    for (std::size_t i = 0; i < states.size(); ++i) {
      const double a = pr.tc.a2_star;
      const FlowParams fp = pr.params.with_displacement(a);
      for (Hold h : {Hold::ZOH, Hold::HOH}) {
        for (TriggerMode m : {TriggerMode::ST, TriggerMode::ET}) {
          const auto perf = raflow::make_bound({TriggerKind::Performance, m, h}, states[i], a, fp, *pr.f);
          const auto der = raflow::make_bound({TriggerKind::Derivative, m, h}, states[i], a, fp, *pr.f);
          const double step = raflow::step_size(perf, 1e6).step;
          for (double frac : {0.3, 1.0}) {
            const double t = frac * step;
            const auto integrand = [&](double z) { return std::exp(kappa * z) * der(z); };
            double mass = 0.0;
            for (int j = 0; j < 256; ++j) mass += std::abs(integrand((j + 0.5) * t / 256)) * t / 256;
            const double ref = oracle::simpson(integrand, 0.0, t, 1e-13 * mass);
            EXPECT_LE(std::abs(perf(t) - ref), 1e-8 * std::max(std::abs(ref), mass))
                << raflow::to_string(perf.kind()) << " i=" << i << " t=" << t << " ref=" << ref
                << " got=" << perf(t) << " mass=" << mass << " dim=" << pr.f->dimension();
          }
        }
      }
    }
  }
}

TEST(Steps, CappedAndDiagnostics) {
  const auto pr = problems().front();
  const State p = oracle::states(*pr.f, 1, 10).front();
  const auto b = raflow::zoh_bound_performance_et(p, 0.0, pr.params, *pr.f);
  const double full = raflow::step_size(b, 1e6).step;
  const auto capped = raflow::step_size(b, 0.5 * full);
  EXPECT_TRUE(capped.capped);
  EXPECT_EQ(capped.step, 0.5 * full);
  const std::string line = raflow::diagnostic_record(b, capped, 3);
  EXPECT_NE(line.find("\"capped\""), std::string::npos);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(raflow::default_t_max(0.04), 50.0);
}
