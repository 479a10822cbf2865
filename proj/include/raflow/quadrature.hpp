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

#include <functional>
#include <map>

namespace raflow {

/// Adaptive Simpson on [lo, hi] with absolute tolerance `tol`. Each halving
/// splits the tolerance between the two halves; more than `max_depth`
/// levels throws NumericError.
[[nodiscard]] double adaptive_simpson(const std::function<double(double)>& f,
                                      double lo, double hi, double tol,
                                      int max_depth = 40);

/// t -> int_0^t f, memoizing every evaluated upper limit. A query integrates
/// only from the closest cached point below it, so nested probe sequences
/// (bracket expansion then bisection) cost one short panel each.
///
/// Not thread-safe: one instance per consumer.
class CumulativeIntegral {
 public:
  explicit CumulativeIntegral(std::function<double(double)> integrand,
                              double rel_tol = 1e-12, int max_depth = 40);

  double operator()(double t);

  [[nodiscard]] std::size_t cached_points() const noexcept { return cache_.size(); }

 private:
  std::function<double(double)> integrand_;
  double rel_tol_;
  int max_depth_;
  std::map<double, double> cache_;
};

/// phi_n(z) = int_0^1 u^n e^{z u} du for n = 0, 1, 2, so that
/// int_0^t zeta^n e^{k zeta} d zeta = t^{n+1} phi_n(k t).
[[nodiscard]] double exp_moment(int n, double z);

}  // namespace raflow
