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

#include "raflow/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using raflow::FlowParams;
using raflow::State;
using raflow::Vec;

namespace {

struct Fixture {
  raflow::ObjectivePtr f = raflow::make_quadratic(oracle::benchmark_diag());
  FlowParams params = FlowParams::make(*f, FlowParams::default_s(*f), 0.1);
};

}  // namespace

TEST(FlowParams, DefaultsAndValidation) {
  Fixture fx;
  EXPECT_DOUBLE_EQ(fx.params.s, 0.02 / (36.0 * 200.0 * 200.0));
  EXPECT_DOUBLE_EQ(fx.params.sqrt_mu, std::sqrt(0.02));
  EXPECT_DOUBLE_EQ(fx.params.sqrt_mu_s, 1.0 + std::sqrt(0.02 * fx.params.s));
  EXPECT_DOUBLE_EQ(fx.params.mu_s, fx.params.sqrt_mu_s * fx.params.sqrt_mu_s);
  EXPECT_THROW((void)FlowParams::make(*fx.f, 0.0, 0.1), raflow::Error);
  EXPECT_THROW((void)FlowParams::make(*fx.f, 1e-8, -0.1), raflow::Error);
  EXPECT_THROW((void)fx.params.with_displacement(-1.0), raflow::Error);
  EXPECT_EQ(fx.params.with_displacement(0.3).a, 0.3);
}

TEST(Dynamics, InitialVelocityAtBenchmarkStart) {
  Fixture fx;
  const Vec v0 = raflow::initial_velocity(Vec::Constant(2, 50.0), fx.params, *fx.f);
  const double scale = -2.0 * std::sqrt(fx.params.s) / fx.params.sqrt_mu_s;
  EXPECT_DOUBLE_EQ(v0[0], scale * 1.0);
  EXPECT_DOUBLE_EQ(v0[1], scale * 10000.0);
  EXPECT_NEAR(v0[0], -2.357e-4, 1e-7);
  EXPECT_NEAR(v0[1], -2.3570, 1e-4);
}

TEST(Dynamics, DisplacedFieldByHand) {
  Fixture fx;
  State p{Vec::Constant(2, 1.0), Vec::Constant(2, 2.0)};
  const State d = raflow::field_hb_displaced(p, fx.params, *fx.f);
  // grad at x + a v = 1.2 * (0.02, 200)
  EXPECT_DOUBLE_EQ(d.x[0], 2.0);
  EXPECT_NEAR(d.v[0], -2.0 * fx.params.sqrt_mu * 2.0 - fx.params.sqrt_mu_s * 0.024, 1e-15);
  EXPECT_NEAR(d.v[1], -2.0 * fx.params.sqrt_mu * 2.0 - fx.params.sqrt_mu_s * 240.0, 1e-11);
}

TEST(Dynamics, ZeroOrderHoldIsForwardEuler) {
  Fixture fx;
  for (const State& p : oracle::states(*fx.f, 50, 1)) {
    const State d = raflow::field_hb_displaced(p, fx.params, *fx.f);
    for (double t : {0.0, 1e-4, 0.3}) {
      const State z = raflow::zoh_trajectory(p, t, fx.params, *fx.f);
      EXPECT_LE((z - (p + t * d)).norm(), 1e-12 * (1.0 + p.norm()));
    }
  }
}

TEST(Dynamics, HighOrderHoldMatchesOracleRk4) {
  for (const auto& f : {raflow::make_quadratic(oracle::benchmark_diag()),
                        raflow::make_logistic(raflow::generate_dataset(20210))}) {
    const FlowParams params = FlowParams::make(*f, FlowParams::default_s(*f), 0.05);
    for (const State& p : oracle::states(*f, 20, 2, -2.0, 1.0)) {
      const Vec g = f->gradient(p.x + params.a * p.v);
      for (double t : {1e-3, 0.05, 0.1}) {
        const State exact = raflow::hoh_trajectory(p, t, params, *f);
        const State ref = oracle::rk4_linear(p, g, params.sqrt_mu, params.sqrt_mu_s, t, 1e-4);
        EXPECT_LE((exact - ref).norm(), 1e-8 * (1.0 + p.norm()));
      }
    }
  }
}

TEST(Dynamics, HighOrderHoldOverloadsAgree) {
  Fixture fx;
  for (const State& p : oracle::states(*fx.f, 30, 3)) {
    const Vec g = fx.f->gradient(p.x + fx.params.a * p.v);
    for (double t : {0.0, 1e-9, 0.2, 5.0}) {
      const State a = raflow::hoh_trajectory(p, t, fx.params, *fx.f);
      const State b = raflow::hoh_trajectory(p, g, t, fx.params);
      const State inc = raflow::hoh_increment(p, g, t, fx.params);
      EXPECT_LE((a - b).norm(), 1e-14 * (1.0 + a.norm()));
      EXPECT_LE(((p + inc) - a).norm(), 1e-12 * (1.0 + a.norm()));
    }
    EXPECT_EQ(raflow::hoh_increment(p, g, 0.0, fx.params).norm(), 0.0);
  }
}

TEST(Dynamics, HighOrderHoldSatisfiesItsOde) {
  Fixture fx;
  for (const State& p : oracle::states(*fx.f, 30, 4)) {
    const Vec g = fx.f->gradient(p.x + fx.params.a * p.v);
    for (double t : {0.01, 0.5, 3.0}) {
      const double h = 1e-5;
      const State fwd = raflow::hoh_increment(p, g, t + h, fx.params);
      const State bwd = raflow::hoh_increment(p, g, t - h, fx.params);
      const State fd = (0.5 / h) * (fwd - bwd);
      const State vel = raflow::hoh_velocity(raflow::hoh_trajectory(p, g, t, fx.params), g,
                                             fx.params);
      EXPECT_LE((fd - vel).norm(), 1e-6 * (1.0 + vel.norm()));
    }
  }
}

TEST(Dynamics, HoldsAgreeToSecondOrder) {
  Fixture fx;
  const State p{Vec::Constant(2, 0.5), Vec::Constant(2, -0.2)};
  double prev = 0.0;
  for (double t : {1e-2, 5e-3, 2.5e-3}) {
    const State z = raflow::zoh_trajectory(p, t, fx.params, *fx.f);
    const State h = raflow::hoh_trajectory(p, t, fx.params, *fx.f);
    const double gap = (z - h).norm();
    if (prev > 0.0) {
      EXPECT_NEAR(prev / gap, 4.0, 0.1);
    }
    prev = gap;
  }
}

TEST(Dynamics, Rk4ReferenceConvergesAtFourthOrder) {
  // x' = v, v' = -x from (1, 0): x(t) = cos t
  const raflow::VectorField field = [](const State& p) { return State{p.v, Vec(-p.x)}; };
  const State p0{Vec::Ones(1), Vec::Zero(1)};
  double prev = 0.0;
  for (double h : {0.1, 0.05, 0.025}) {
    const auto trace = raflow::rk4_reference(field, p0, 1.0, h);
    ASSERT_EQ(trace.times.size(), trace.states.size());
    EXPECT_DOUBLE_EQ(trace.times.back(), 1.0);
    const double err = std::abs(trace.states.back().x[0] - std::cos(1.0));
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 16.0, 1.0);
    }
    prev = err;
  }
  const auto odd = raflow::rk4_reference(field, p0, 0.25, 0.1);
  EXPECT_DOUBLE_EQ(odd.times.back(), 0.25);
  EXPECT_NEAR(odd.states.back().x[0], std::cos(0.25), 1e-6);
}
