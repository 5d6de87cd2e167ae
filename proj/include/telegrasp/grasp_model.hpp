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

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telegrasp/features.hpp"
#include "telegrasp/intent.hpp"

namespace telegrasp {

/// One Gaussian class of a grasp model: the feature distribution of grasps
/// that satisfy a particular task combination.
class GaussianClass {
 public:
  /// Throws CorruptModel if the covariance is not symmetric (1e-10) or not
  /// positive definite, InvalidArgument for a prior outside [0, 1].
  GaussianClass(TaskMask combination, double prior, Eigen::VectorXd mean,
                Eigen::MatrixXd covariance);

  TaskMask combination() const { return combination_; }
  double prior() const { return prior_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  int dim() const { return static_cast<int>(mean_.size()); }

  /// log N(x; mean, covariance).
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// covariance^{-1} * v
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  double log_det() const { return log_det_; }
  double min_eigenvalue() const;

 private:
  TaskMask combination_;
  double prior_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

/// Multivariate normal density of `x` under the class.
double class_likelihood(const GaussianClass& model_class, const Eigen::Ref<const Eigen::VectorXd>& x);

struct FitMeta {
  int iterations = 0;
  double final_log_likelihood = 0.0;
  double eps_cov = 1e-6;
  bool converged = false;
  std::vector<double> log_likelihood_trace;
  /// Final responsibility mass per class, in class order.
  std::vector<double> responsibility_mass;
  /// Weighted fraction of samples whose most responsible class is the class
  /// of their own label.
  double label_agreement = 1.0;

  bool operator==(const FitMeta&) const = default;
};

/// Per-embodiment set of Gaussian classes, one per task combination, sorted
/// by combination mask. Immutable once constructed.
class GraspModel {
 public:
  GraspModel(std::string embodiment, TaskSet tasks, FeatureLayout layout,
             std::vector<GaussianClass> classes, FitMeta meta = {});

  const std::string& embodiment() const { return embodiment_; }
  const TaskSet& tasks() const { return tasks_; }
  const FeatureLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim(); }
  const std::vector<GaussianClass>& classes() const { return classes_; }
  const FitMeta& fit_meta() const { return meta_; }

  std::vector<TaskMask> combinations() const;
  /// Position of the class for `mask`, if any.
  std::optional<std::size_t> class_index(TaskMask mask) const;
  bool has_combination(TaskMask mask) const { return class_index(mask).has_value(); }

 private:
  std::string embodiment_;
  TaskSet tasks_;
  FeatureLayout layout_;
  std::vector<GaussianClass> classes_;
  FitMeta meta_;
};

/// Numerically stable log(sum(exp(v))); -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

/// log(prior_k) + log N(x | k) for every class.
std::vector<double> class_log_joint(const GraspModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Class posteriors P(k | x) in class order, computed in log space.
std::vector<double> posterior(const GraspModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Class posteriors scattered into a 2^m combination vector; combinations
/// without a class get probability 0.
TargetVector posterior_target(const GraspModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Per-task intent from a human grasp model: P(w_i) is the posterior mass of
/// every class whose combination includes task i.
IntentVector estimate_intent(const GraspModel& human_model, const Eigen::Ref<const Eigen::VectorXd>& h);

}  // namespace telegrasp
