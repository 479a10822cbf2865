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

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace raflow {

using Vec = Eigen::VectorXd;

/// Position/velocity pair p = [x, v].
struct State {
  Vec x;
  Vec v;

  State() = default;
  State(Vec x_, Vec v_) : x(std::move(x_)), v(std::move(v_)) {}

  [[nodiscard]] Eigen::Index dimension() const noexcept { return x.size(); }
  [[nodiscard]] bool finite() const noexcept {
    return x.allFinite() && v.allFinite();
  }
  /// Euclidean norm of the stacked vector.
  [[nodiscard]] double norm() const noexcept {
    return std::sqrt(x.squaredNorm() + v.squaredNorm());
  }

  State& operator+=(const State& o) {
    x += o.x;
    v += o.v;
    return *this;
  }
  friend State operator+(State a, const State& b) { return a += b; }
  friend State operator-(const State& a, const State& b) {
    return {a.x - b.x, a.v - b.v};
  }
  friend State operator*(double c, const State& a) { return {c * a.x, c * a.v}; }
};

enum class ErrorCode {
  InvalidArgument,
  InvalidObjective,
  Numeric,
  TriggerInfeasible,
  Io,
  CheckFailed,
};

[[nodiscard]] const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above; the C
/// API maps them one-to-one onto status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Numeric failure tied to an iteration or step index.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, long index = -1)
      : Error(ErrorCode::Numeric, what), index_(index) {}
  [[nodiscard]] long index() const noexcept { return index_; }

 private:
  long index_;
};

}  // namespace raflow
