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

#include "raflow/quadrature.hpp"

#include "raflow/types.hpp"

#include <cmath>
#include <iterator>
#include <string>
#include <utility>

namespace raflow {

namespace {

double simpson_recurse(const std::function<double(double)>& f, double a, double b,
                       double fa, double fm, double fb, double whole, double tol,
                       int depth, int max_depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double h = b - a;
  const double left = h / 12.0 * (fa + 4.0 * flm + fm);
  const double right = h / 12.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (!std::isfinite(diff)) throw NumericError("quadrature integrand is not finite");
  if (std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  if (depth >= max_depth) {
    throw NumericError("adaptive Simpson did not converge within " +
                       std::to_string(max_depth) + " refinement levels");
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double lo,
                        double hi, double tol, int max_depth) {
  if (hi == lo) return 0.0;
  const double fa = f(lo);
  const double fb = f(hi);
  const double fm = f(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(f, lo, hi, fa, fm, fb, whole, tol, 0, max_depth);
}

CumulativeIntegral::CumulativeIntegral(std::function<double(double)> integrand,
                                       double rel_tol, int max_depth)
    : integrand_(std::move(integrand)), rel_tol_(rel_tol), max_depth_(max_depth) {
  cache_.emplace(0.0, 0.0);
}

double CumulativeIntegral::operator()(double t) {
  if (t <= 0.0) return 0.0;
  auto it = cache_.upper_bound(t);
  --it;  // largest cached limit <= t; 0 is always present
  if (it->first == t) return it->second;
  const double base = it->second;
  const double lo = it->first;
  // Tolerance scales with the accumulated value and a one-panel estimate of
  // int |f|; bounds near the optimum are far below 1 in magnitude.
  const double fa = integrand_(lo);
  const double fb = integrand_(t);
  const double fm = integrand_(0.5 * (lo + t));
  const double coarse = (t - lo) / 6.0 * (fa + 4.0 * fm + fb);
  const double mass =
      (t - lo) / 6.0 * (std::abs(fa) + 4.0 * std::abs(fm) + std::abs(fb));
  const double scale = std::abs(base) + mass;
  if (scale == 0.0) {
    cache_.emplace_hint(std::next(it), t, base);
    return base;
  }
  const double tol = rel_tol_ * scale;
  const double value =
      base + simpson_recurse(integrand_, lo, t, fa, fm, fb, coarse, tol, 0, max_depth_);
  cache_.emplace_hint(std::next(it), t, value);
  return value;
}

double exp_moment(int n, double z) {
  if (std::abs(z) < 1.0) {
    // sum_k z^k / (k! (n + k + 1))
    double term = 1.0;
    double sum = 1.0 / (n + 1);
    for (int k = 1; k < 40; ++k) {
      term *= z / k;
      const double add = term / (n + k + 1);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  const double ez = std::exp(z);
  switch (n) {
    case 0: return std::expm1(z) / z;
    case 1: return (ez * (z - 1.0) + 1.0) / (z * z);
    case 2: return (ez * (z * z - 2.0 * z + 2.0) - 2.0) / (z * z * z);
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "exp_moment supports n = 0, 1, 2");
}

}  // namespace raflow
