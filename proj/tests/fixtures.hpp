// Copyright 2026 The Telegrasp Authors
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

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "telegrasp/controllers.hpp"
#include "telegrasp/em.hpp"
#include "telegrasp/grasp_model.hpp"

namespace telegrasp::testing {

inline const TaskSet& two_tasks() {
  static const TaskSet tasks({"use", "transfer"});
  return tasks;
}

inline const TaskSet& three_tasks() {
  static const TaskSet tasks({"use", "transfer", "handover"});
  return tasks;
}

inline GaussianClass iso_class(TaskMask mask, double prior, std::vector<double> mean, double sigma) {
  const auto d = static_cast<Eigen::Index>(mean.size());
  Eigen::VectorXd mu = Eigen::Map<Eigen::VectorXd>(mean.data(), d);
  return GaussianClass(mask, prior, mu, Eigen::MatrixXd::Identity(d, d) * sigma * sigma);
}

/// Two 1-D classes {use} and {transfer} with means `a` and `b`.
inline std::shared_ptr<GraspModel> two_class_1d(double a, double b, double sigma,
                                                double prior_a = 0.5) {
  return std::make_shared<GraspModel>(
      "fixture-1d", two_tasks(), FeatureLayout::generic(1),
      std::vector<GaussianClass>{iso_class(1, prior_a, {a}, sigma),
                                 iso_class(2, 1.0 - prior_a, {b}, sigma)});
}

inline Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng, double floor = 0.05) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  Eigen::MatrixXd s = a * a.transpose() / d + floor * Eigen::MatrixXd::Identity(d, d);
  return 0.5 * (s + s.transpose());
}

inline Eigen::MatrixXd random_rotation(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ();
}

/// Random model over the three-task set with one class per listed mask.
inline std::shared_ptr<GraspModel> random_model(int d, const std::vector<TaskMask>& masks,
                                                std::mt19937_64& rng, double spread = 1.0,
                                                double scale = 0.3) {
  std::normal_distribution<double> n(0.0, spread);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> priors;
  double total = 0.0;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    priors.push_back(u(rng));
    total += priors.back();
  }
  std::vector<GaussianClass> classes;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    Eigen::VectorXd mu(d);
    for (int i = 0; i < d; ++i) mu[i] = n(rng);
    classes.emplace_back(masks[k], priors[k] / total, mu, random_spd(d, rng) * scale * scale);
  }
  return std::make_shared<GraspModel>("random", three_tasks(), FeatureLayout::generic(d),
                                      std::move(classes));
}

/// Direct Gaussian density with an explicit inverse and determinant.
inline double direct_density(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                             const Eigen::VectorXd& x) {
  const double d = static_cast<double>(mu.size());
  const Eigen::VectorXd diff = x - mu;
  const double quad = diff.dot(cov.inverse() * diff);
  return std::exp(-0.5 * quad) / std::sqrt(cov.determinant() * std::pow(2.0 * M_PI, d));
}

/// Bayes rule evaluated in direct space, no logarithms.
inline std::vector<double> direct_posterior(const GraspModel& m, const Eigen::VectorXd& x) {
  std::vector<double> w;
  double total = 0.0;
  for (const auto& c : m.classes()) {
    w.push_back(c.prior() * direct_density(c.mean(), c.covariance(), x));
    total += w.back();
  }
  for (auto& v : w) v /= total;
  return w;
}

/// Intent objective written out with explicit loops over the classes.
inline double direct_intent_objective(const GraspModel& m, const TargetVector& p_h,
                                      const Eigen::VectorXd& r) {
  const auto post = direct_posterior(m, r);
  double s = 0.0;
  for (std::size_t k = 0; k < post.size(); ++k) {
    const double diff = post[k] - p_h.q[m.classes()[k].combination()];
    s += diff * diff;
  }
  return 0.5 * s;
}

inline double direct_knitro_objective(const GraspModel& m, const TargetVector& p_h,
                                      const Eigen::VectorXd& r, const Eigen::VectorXd& h,
                                      const ArbitrationWeights& w) {
  double pen = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double diff = r[i] - h[i];
    pen += diff * diff / w.clamped_lambda[static_cast<std::size_t>(i)];
  }
  return direct_intent_objective(m, p_h, r) + pen / w.clamped_gamma;
}

inline ArbitrationWeights fixed_weights(int d, double lambda, double gamma) {
  ArbitrationWeights w;
  w.lambda.assign(static_cast<std::size_t>(d), lambda);
  w.clamped_lambda = w.lambda;
  w.gamma = w.clamped_gamma = gamma;
  w.source = "override";
  return w;
}

inline WorkspaceBounds box(int d, double lo, double hi) {
  return {Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi)};
}

/// Labeled Gaussian clusters, one per combination mask 1, 2, 3, ...
inline std::vector<Demonstration> random_dataset(std::mt19937_64& rng, int d, int classes, int per_class,
                                                  double spread) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> count(per_class / 2, per_class);
  const std::vector<TaskMask> masks{1, 2, 3, 4, 5, 6, 7};
  std::vector<Demonstration> out;
  for (int k = 0; k < classes; ++k) {
    Eigen::VectorXd center(d);
    for (int i = 0; i < d; ++i) center[i] = spread * n(rng);
    const Eigen::MatrixXd shape = random_spd(d, rng, 0.1);
    Eigen::LLT<Eigen::MatrixXd> llt(shape);
    const int m = count(rng);
    for (int s = 0; s < m; ++s) {
      Eigen::VectorXd z(d);
      for (int i = 0; i < d; ++i) z[i] = n(rng);
      out.push_back({"synthetic", masks[static_cast<std::size_t>(k)],
                     center + llt.matrixL() * z, "t" + std::to_string(s), 1.0});
    }
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("telegrasp-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace telegrasp::testing
