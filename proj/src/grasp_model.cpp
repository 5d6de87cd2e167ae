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

#include "telegrasp/grasp_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "telegrasp/error.hpp"

namespace telegrasp {

namespace {
constexpr double kSymmetryTol = 1e-10;
constexpr double kPriorSumTol = 1e-10;
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);
}  // namespace

GaussianClass::GaussianClass(TaskMask combination, double prior, Eigen::VectorXd mean,
                             Eigen::MatrixXd covariance)
    : combination_(combination),
      prior_(prior),
      mean_(std::move(mean)),
      covariance_(std::move(covariance)) {
  if (!(prior_ >= 0.0 && prior_ <= 1.0)) {
    throw InvalidArgument("class prior " + std::to_string(prior_) + " outside [0, 1]");
  }
  const auto d = mean_.size();
  if (d == 0) throw DimensionMismatch("class mean is empty");
  if (covariance_.rows() != d || covariance_.cols() != d) {
    throw DimensionMismatch("covariance is " + std::to_string(covariance_.rows()) + "x" +
                            std::to_string(covariance_.cols()) + ", mean has " +
                            std::to_string(d) + " entries");
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) {
    throw CorruptModel("class parameters contain non-finite values");
  }
  const double asym = (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) {
    throw CorruptModel("covariance not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  llt_.compute(covariance_);
  if (llt_.info() != Eigen::Success) throw CorruptModel("covariance is not positive definite");
  const auto& l = llt_.matrixLLT();
  log_det_ = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(l(i, i) > 0.0)) throw CorruptModel("covariance is not positive definite");
    log_det_ += 2.0 * std::log(l(i, i));
  }
}

double GaussianClass::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean_.size()) {
    throw DimensionMismatch("query has " + std::to_string(x.size()) + " features, class has " +
                            std::to_string(mean_.size()));
  }
  const Eigen::VectorXd z = llt_.matrixL().solve(x - mean_);
  const double d = static_cast<double>(mean_.size());
  return -0.5 * (d * kLogTwoPi + log_det_ + z.squaredNorm());
}

Eigen::VectorXd GaussianClass::solve(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return llt_.solve(v);
}

double GaussianClass::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double class_likelihood(const GaussianClass& model_class, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::exp(model_class.log_density(x));
}

GraspModel::GraspModel(std::string embodiment, TaskSet tasks, FeatureLayout layout,
                       std::vector<GaussianClass> classes, FitMeta meta)
    : embodiment_(std::move(embodiment)),
      tasks_(std::move(tasks)),
      layout_(layout),
      classes_(std::move(classes)),
      meta_(std::move(meta)) {
  if (tasks_.size() == 0) throw InvalidArgument("grasp model needs a non-empty task set");
  if (classes_.empty()) throw InvalidArgument("grasp model has no classes");
  std::stable_sort(classes_.begin(), classes_.end(), [](const auto& a, const auto& b) {
    return a.combination() < b.combination();
  });
  double prior_sum = 0.0;
  bool any_positive = false;
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    const auto& c = classes_[k];
    if (c.dim() != layout_.dim()) {
      throw DimensionMismatch("class " + std::to_string(k) + " has dimension " +
                              std::to_string(c.dim()) + ", model declares " +
                              std::to_string(layout_.dim()));
    }
    if (c.combination() >= tasks_.combination_count()) {
      throw CorruptModel("class combination mask " + std::to_string(c.combination()) +
                         " exceeds the task set");
    }
    if (k > 0 && classes_[k - 1].combination() == c.combination()) {
      throw CorruptModel("duplicate class for combination " + tasks_.label(c.combination()));
    }
    if (meta_.eps_cov > 0.0) {
      const double scale = std::max(1.0, c.covariance().cwiseAbs().maxCoeff());
      if (c.min_eigenvalue() < meta_.eps_cov - 1e-12 * scale) {
        throw CorruptModel("class " + tasks_.label(c.combination()) +
                           " covariance has eigenvalue below the regularization floor");
      }
    }
    prior_sum += c.prior();
    any_positive = any_positive || c.prior() > 0.0;
  }
  if (!any_positive) throw InvalidArgument("grasp model has no class with positive prior");
  if (std::abs(prior_sum - 1.0) > kPriorSumTol) {
    throw CorruptModel("class priors sum to " + std::to_string(prior_sum) + ", expected 1");
  }
}

std::vector<TaskMask> GraspModel::combinations() const {
  std::vector<TaskMask> out;
  out.reserve(classes_.size());
  for (const auto& c : classes_) out.push_back(c.combination());
  return out;
}

std::optional<std::size_t> GraspModel::class_index(TaskMask mask) const {
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    if (classes_[k].combination() == mask) return k;
  }
  return std::nullopt;
}

double log_sum_exp(std::span<const double> v) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (v.empty()) return neg_inf;
  const double max = *std::max_element(v.begin(), v.end());
  if (max == neg_inf) return neg_inf;
  double sum = 0.0;
  for (double a : v) sum += std::exp(a - max);
  return max + std::log(sum);
}

std::vector<double> class_log_joint(const GraspModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.dim()) {
    throw DimensionMismatch("query has " + std::to_string(x.size()) + " features, model '" +
                            model.embodiment() + "' has " + std::to_string(model.dim()));
  }
  std::vector<double> out;
  out.reserve(model.classes().size());
  for (const auto& c : model.classes()) {
    const double log_prior =
        c.prior() > 0.0 ? std::log(c.prior()) : -std::numeric_limits<double>::infinity();
    out.push_back(log_prior + c.log_density(x));
  }
  return out;
}

std::vector<double> posterior(const GraspModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  auto a = class_log_joint(model, x);
  const double norm = log_sum_exp(a);
  for (auto& v : a) v = std::exp(v - norm);
  return a;
}

TargetVector posterior_target(const GraspModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto post = posterior(model, x);
  TargetVector out;
  out.q.assign(model.tasks().combination_count(), 0.0);
  for (std::size_t k = 0; k < post.size(); ++k) out.q[model.classes()[k].combination()] = post[k];
  return out;
}

IntentVector estimate_intent(const GraspModel& human_model, const Eigen::Ref<const Eigen::VectorXd>& h) {
  const auto post = posterior(human_model, h);
  const auto masks = human_model.combinations();
  return task_marginals(post, masks, human_model.tasks().size());
}

}  // namespace telegrasp
