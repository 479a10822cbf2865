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

#include "raflow/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace raflow {

/// Smooth, mu-strongly convex objective with an L-Lipschitz gradient.
///
/// Immutable after construction, callable from several threads. The minimizer
/// is optional and only the Lyapunov diagnostics read it.
class Objective {
 public:
  virtual ~Objective() = default;

  [[nodiscard]] virtual double value(const Vec& x) const = 0;
  /// Writes grad f(x) into `out` (resized if needed).
  virtual void gradient(const Vec& x, Vec& out) const = 0;

  /// f(x + delta) - f(x).
  [[nodiscard]] virtual double value_difference(const Vec& x, const Vec& delta) const {
    return value(x + delta) - value(x);
  }

  [[nodiscard]] Vec gradient(const Vec& x) const {
    Vec g;
    gradient(x, g);
    return g;
  }

  [[nodiscard]] Eigen::Index dimension() const noexcept { return dim_; }
  [[nodiscard]] double mu() const noexcept { return mu_; }
  [[nodiscard]] double lipschitz() const noexcept { return lipschitz_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

  [[nodiscard]] const std::optional<Vec>& minimizer() const noexcept {
    return minimizer_;
  }
  /// f(x*), cached when the minimizer is known.
  [[nodiscard]] std::optional<double> optimal_value() const noexcept {
    return optimal_value_;
  }

 protected:
  Objective(Eigen::Index dim, double mu, double lipschitz, std::string name);

  /// Caches x* and f(x*). Only called during construction.
  void set_minimizer(Vec x_star);

 private:
  Eigen::Index dim_;
  double mu_;
  double lipschitz_;
  std::string name_;
  std::optional<Vec> minimizer_;
  std::optional<double> optimal_value_;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// f(x) = sum_i d_i x_i^2 with mu = 2 min d_i, L = 2 max d_i and x* = 0.
[[nodiscard]] ObjectivePtr make_quadratic(const Vec& diag);

/// Ten labelled points in R^4 for the regularized logistic cost.
struct LogisticDataset {
  static constexpr int kSamples = 10;
  static constexpr int kFeatures = 4;

  std::uint64_t seed = 0;
  Eigen::MatrixXd features;  // kSamples x kFeatures, one sample per row
  Eigen::VectorXi labels;    // entries in {-1, +1}
  /// Coefficient on ||x||^2 (the cost uses (1/2)||x||^2).
  double regularization = 0.5;
};

/// Throws Error(InvalidObjective) when the dataset breaks its invariants.
void validate_dataset(const LogisticDataset& data);

/// Draws features uniform on [-5, 5] and labels uniform on {-1, +1} from a
/// SplitMix64 stream seeded with `seed`. Draw order: the 40 features row by
/// row, then the 10 labels.
[[nodiscard]] LogisticDataset generate_dataset(std::uint64_t seed);

[[nodiscard]] std::string dataset_to_json(const LogisticDataset& data);
[[nodiscard]] LogisticDataset dataset_from_json(const std::string& text);
void save_dataset(const LogisticDataset& data, const std::string& path);
[[nodiscard]] LogisticDataset load_dataset(const std::string& path);

/// 1 + lambda_max(Z^T Z) / 4, an upper bound on the logistic Hessian.
[[nodiscard]] double lipschitz_estimate(const LogisticDataset& data);
[[nodiscard]] double lipschitz_estimate(const Eigen::MatrixXd& features);

/// f(x) = sum_i log(1 + exp(-y_i <z_i, x>)) + (1/2)||x||^2, mu = 1.
/// The minimizer is computed once by minimizer_oracle and cached.
[[nodiscard]] ObjectivePtr make_logistic(const LogisticDataset& data);

/// Plain gradient descent with stepsize 1/L from `start` (zero when absent),
/// run until ||grad f|| <= 1e-12 max(1, ||grad f(0)||).
[[nodiscard]] Vec minimizer_oracle(const Objective& objective,
                                   const std::optional<Vec>& start = std::nullopt);

/// Max relative error between the analytic gradient and central differences
/// with step 1e-6 (1 + ||x||).
[[nodiscard]] double check_gradient(const Objective& objective, const Vec& x);

/// Objective built from callables; used by tests and fault injection.
[[nodiscard]] ObjectivePtr make_custom(
    Eigen::Index dim, double mu, double lipschitz,
    std::function<double(const Vec&)> value,
    std::function<void(const Vec&, Vec&)> gradient,
    std::optional<Vec> minimizer = std::nullopt, std::string name = "custom");

/// Same f and grad f as `base`, different reported constants (fault injection).
[[nodiscard]] ObjectivePtr with_constants(ObjectivePtr base, double mu,
                                          double lipschitz);

}  // namespace raflow
