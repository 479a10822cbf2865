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

#include "raflow/objectives.hpp"

#include "raflow/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace raflow {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::InvalidObjective: return "invalid objective";
    case ErrorCode::Numeric: return "numeric error";
    case ErrorCode::TriggerInfeasible: return "trigger infeasible";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::CheckFailed: return "check failed";
  }
  return "unknown error";
}

Objective::Objective(Eigen::Index dim, double mu, double lipschitz,
                     std::string name)
    : dim_(dim), mu_(mu), lipschitz_(lipschitz), name_(std::move(name)) {
  if (dim <= 0) {
    throw Error(ErrorCode::InvalidObjective, "dimension must be positive");
  }
  if (!(mu > 0.0) || !(lipschitz >= mu) || !std::isfinite(lipschitz)) {
    throw Error(ErrorCode::InvalidObjective,
                "constants must satisfy 0 < mu <= L (mu=" + std::to_string(mu) +
                    ", L=" + std::to_string(lipschitz) + ")");
  }
}

void Objective::set_minimizer(Vec x_star) {
  optimal_value_ = value(x_star);
  minimizer_ = std::move(x_star);
}

namespace {

class Quadratic final : public Objective {
 public:
  explicit Quadratic(Vec diag)
      : Objective(diag.size(), 2.0 * diag.minCoeff(), 2.0 * diag.maxCoeff(),
                  "quadratic"),
        diag_(std::move(diag)) {
    set_minimizer(Vec::Zero(diag_.size()));
  }

  double value(const Vec& x) const override {
    return (diag_.array() * x.array().square()).sum();
  }
  void gradient(const Vec& x, Vec& out) const override {
    out = 2.0 * diag_.cwiseProduct(x);
  }
  double value_difference(const Vec& x, const Vec& delta) const override {
    return (diag_.array() * delta.array() * (2.0 * x.array() + delta.array())).sum();
  }

 private:
  Vec diag_;
};

// log(1 + e^u) without overflow.
double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

// 1 / (1 + e^{-u}) without overflow.
double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

class Logistic final : public Objective {
 public:
  Logistic(const LogisticDataset& data, double lipschitz)
      : Objective(LogisticDataset::kFeatures, 1.0, lipschitz, "logistic"),
        z_(data.features),
        y_(data.labels.cast<double>()),
        reg_(data.regularization) {
    set_minimizer(minimizer_oracle(*this));
  }

  double value(const Vec& x) const override {
    const Vec margins = y_.cwiseProduct(z_ * x);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) sum += softplus(-margins[i]);
    return sum + reg_ * x.squaredNorm();
  }

  void gradient(const Vec& x, Vec& out) const override {
    const Vec margins = y_.cwiseProduct(z_ * x);
    Vec weights(margins.size());
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      weights[i] = -y_[i] * sigmoid(-margins[i]);
    }
    out = z_.transpose() * weights + (2.0 * reg_) * x;
  }

  double value_difference(const Vec& x, const Vec& delta) const override {
    const Vec margins = y_.cwiseProduct(z_ * x);
    const Vec shifts = y_.cwiseProduct(z_ * delta);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      const double h = -shifts[i];
      if (std::abs(h) > 1.0) {
        sum += softplus(-margins[i] + h) - softplus(-margins[i]);
      } else {
        // softplus(u + h) - softplus(u) = log1p(sigmoid(u) expm1(h))
        sum += std::log1p(sigmoid(-margins[i]) * std::expm1(h));
      }
    }
    return sum + reg_ * delta.dot(2.0 * x + delta);
  }

 private:
  Eigen::MatrixXd z_;
  Vec y_;
  double reg_;
};

class Custom final : public Objective {
 public:
  Custom(Eigen::Index dim, double mu, double lipschitz,
         std::function<double(const Vec&)> value,
         std::function<void(const Vec&, Vec&)> gradient,
         std::optional<Vec> minimizer, std::string name)
      : Objective(dim, mu, lipschitz, std::move(name)),
        value_(std::move(value)),
        gradient_(std::move(gradient)) {
    if (minimizer) set_minimizer(std::move(*minimizer));
  }

  double value(const Vec& x) const override { return value_(x); }
  void gradient(const Vec& x, Vec& out) const override { gradient_(x, out); }

 private:
  std::function<double(const Vec&)> value_;
  std::function<void(const Vec&, Vec&)> gradient_;
};

}  // namespace

ObjectivePtr make_quadratic(const Vec& diag) {
  if (diag.size() == 0) {
    throw Error(ErrorCode::InvalidObjective, "quadratic needs at least one entry");
  }
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0) || !std::isfinite(diag[i])) {
      throw Error(ErrorCode::InvalidObjective,
                  "quadratic diagonal entry " + std::to_string(i) +
                      " must be positive and finite");
    }
  }
  return std::make_shared<Quadratic>(diag);
}

void validate_dataset(const LogisticDataset& data) {
  if (data.features.rows() != LogisticDataset::kSamples ||
      data.features.cols() != LogisticDataset::kFeatures) {
    throw Error(ErrorCode::InvalidObjective,
                "dataset must hold exactly 10 samples of 4 features");
  }
  if (data.labels.size() != LogisticDataset::kSamples) {
    throw Error(ErrorCode::InvalidObjective, "dataset must hold exactly 10 labels");
  }
  if (!data.features.allFinite() ||
      data.features.cwiseAbs().maxCoeff() > 5.0) {
    throw Error(ErrorCode::InvalidObjective, "features must lie in [-5, 5]");
  }
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] != 1 && data.labels[i] != -1) {
      throw Error(ErrorCode::InvalidObjective, "labels must be -1 or +1");
    }
  }
  if (!(data.regularization > 0.0)) {
    throw Error(ErrorCode::InvalidObjective, "regularization must be positive");
  }
}

LogisticDataset generate_dataset(std::uint64_t seed) {
  LogisticDataset data;
  data.seed = seed;
  data.features.resize(LogisticDataset::kSamples, LogisticDataset::kFeatures);
  data.labels.resize(LogisticDataset::kSamples);
  SplitMix64 rng(seed);
  for (int i = 0; i < LogisticDataset::kSamples; ++i) {
    for (int j = 0; j < LogisticDataset::kFeatures; ++j) {
      data.features(i, j) = rng.uniform(-5.0, 5.0);
    }
  }
  for (int i = 0; i < LogisticDataset::kSamples; ++i) data.labels[i] = rng.sign();
  return data;
}

std::string dataset_to_json(const LogisticDataset& data) {
  nlohmann::ordered_json doc;
  doc["seed"] = data.seed;
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) row.push_back(data.features(i, j));
    rows.push_back(std::move(row));
  }
  doc["features"] = std::move(rows);
  auto labels = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) labels.push_back(data.labels[i]);
  doc["labels"] = std::move(labels);
  return doc.dump(2) + "\n";
}

LogisticDataset dataset_from_json(const std::string& text) {
  LogisticDataset data;
  try {
    const auto doc = nlohmann::json::parse(text);
    data.seed = doc.at("seed").get<std::uint64_t>();
    const auto& rows = doc.at("features");
    data.features.resize(static_cast<Eigen::Index>(rows.size()),
                         LogisticDataset::kFeatures);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != LogisticDataset::kFeatures) {
        throw Error(ErrorCode::InvalidObjective, "feature rows must have 4 entries");
      }
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            rows[i][j].get<double>();
      }
    }
    const auto& labels = doc.at("labels");
    data.labels.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      data.labels[static_cast<Eigen::Index>(i)] = labels[i].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidObjective, std::string("malformed dataset: ") + e.what());
  }
  validate_dataset(data);
  return data;
}

void save_dataset(const LogisticDataset& data, const std::string& path) {
  validate_dataset(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << dataset_to_json(data);
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

LogisticDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open dataset '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_json(buf.str());
}

double lipschitz_estimate(const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd gram = features.transpose() * features;
  if (gram.cwiseAbs().maxCoeff() == 0.0) return 1.0;

  constexpr int kMaxIterations = 10000;
  constexpr double kRelTol = 1e-10;
  Vec q = Vec::Ones(gram.rows()).normalized();
  double lambda = q.dot(gram * q);
  for (int it = 1; it <= kMaxIterations; ++it) {
    Vec next = gram * q;
    const double nrm = next.norm();
    if (nrm == 0.0) {
      // Start vector in the null space; restart on a coordinate axis.
      q = Vec::Unit(gram.rows(), it % gram.rows());
      continue;
    }
    q = next / nrm;
    const double updated = q.dot(gram * q);
    if (std::abs(updated - lambda) <= kRelTol * std::abs(updated)) {
      return 1.0 + 0.25 * updated;
    }
    lambda = updated;
  }
  throw NumericError("power iteration did not converge after " +
                         std::to_string(kMaxIterations) + " iterations",
                     kMaxIterations);
}

double lipschitz_estimate(const LogisticDataset& data) {
  validate_dataset(data);
  return lipschitz_estimate(data.features);
}

ObjectivePtr make_logistic(const LogisticDataset& data) {
  validate_dataset(data);
  return std::make_shared<Logistic>(data, lipschitz_estimate(data.features));
}

Vec minimizer_oracle(const Objective& objective, const std::optional<Vec>& start) {
  constexpr long kMaxIterations = 10'000'000;
  const Eigen::Index n = objective.dimension();
  Vec x = start ? *start : Vec::Zero(n);
  if (x.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "start point has wrong dimension");
  }
  Vec g;
  objective.gradient(Vec::Zero(n), g);
  const double tol = 1e-12 * std::max(1.0, g.norm());
  const double step = 1.0 / objective.lipschitz();
  for (long it = 0; it < kMaxIterations; ++it) {
    objective.gradient(x, g);
    if (g.norm() <= tol) return x;
    x -= step * g;
  }
  throw NumericError("minimizer_oracle exceeded " + std::to_string(kMaxIterations) +
                         " gradient steps",
                     kMaxIterations);
}

double check_gradient(const Objective& objective, const Vec& x) {
  const double h = 1e-6 * (1.0 + x.norm());
  const Vec analytic = objective.gradient(x);
  double worst = 0.0;
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = objective.value(probe);
    probe[i] = x[i] - h;
    const double down = objective.value(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(numeric - analytic[i]) /
                       std::max(1.0, std::max(std::abs(numeric), std::abs(analytic[i])));
    worst = std::max(worst, err);
  }
  return worst;
}

ObjectivePtr make_custom(Eigen::Index dim, double mu, double lipschitz,
                         std::function<double(const Vec&)> value,
                         std::function<void(const Vec&, Vec&)> gradient,
                         std::optional<Vec> minimizer, std::string name) {
  return std::make_shared<Custom>(dim, mu, lipschitz, std::move(value),
                                  std::move(gradient), std::move(minimizer),
                                  std::move(name));
}

namespace {

class Relabeled final : public Objective {
 public:
  Relabeled(ObjectivePtr base, double mu, double lipschitz)
      : Objective(base->dimension(), mu, lipschitz, base->name() + "(constants overridden)"),
        base_(std::move(base)) {
    if (base_->minimizer()) set_minimizer(*base_->minimizer());
  }

  double value(const Vec& x) const override { return base_->value(x); }
  void gradient(const Vec& x, Vec& out) const override { base_->gradient(x, out); }
  double value_difference(const Vec& x, const Vec& delta) const override {
    return base_->value_difference(x, delta);
  }

 private:
  ObjectivePtr base_;
};

}  // namespace

ObjectivePtr with_constants(ObjectivePtr base, double mu, double lipschitz) {
  if (!base) throw Error(ErrorCode::InvalidArgument, "null objective");
  return std::make_shared<Relabeled>(std::move(base), mu, lipschitz);
}

}  // namespace raflow
