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

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "telegrasp/box_minimizer.hpp"
#include "telegrasp/divergence.hpp"
#include "telegrasp/grasp_model.hpp"

namespace telegrasp {

enum class ControlMode { kMimic, kIntentOnly, kKnitro };

std::string to_string(ControlMode mode);
/// Accepts "mimic", "intent_only" and "knitro"; throws InvalidArgument.
ControlMode parse_mode(const std::string& name);

/// Per-feature box L_i <= R_i <= U_i protecting the robot and its workspace.
struct WorkspaceBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// Checks sizes against `layout`, L <= U, and aperture bounds in [0, 1].
  void validate(const FeatureLayout& layout) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
};

/// Memoizes arbitration weights per (human model, robot model, combination).
/// Entries never go stale because models are immutable; discard the cache
/// together with the models it refers to.
class WeightsCache {
 public:
  ArbitrationWeights get(const GraspModel& human, const GraspModel& robot, TaskMask combination,
                         const WeightConfig& config, const AlignmentTable& alignment);
  std::size_t size() const;

 private:
  using Key = std::tuple<const GraspModel*, const GraspModel*, TaskMask>;
  mutable std::mutex mutex_;
  std::map<Key, ArbitrationWeights> entries_;
};

struct ControllerConfig {
  WeightConfig weights;
  MinimizerOptions minimizer;
  AlignmentTable alignment;
};

struct SolveRequest {
  ControlMode mode = ControlMode::kMimic;
  FeatureVector human;
  /// Per-task intent; ignored when `target` is set. When neither is given
  /// the intent is estimated from `human_model`.
  std::optional<IntentVector> intent;
  std::optional<TargetVector> target;
  std::shared_ptr<const GraspModel> robot_model;
  /// Source of arbitration weights and of estimated intent.
  std::shared_ptr<const GraspModel> human_model;
  WorkspaceBounds bounds;
  std::optional<ArbitrationWeights> weights_override;
  std::uint64_t seed = 0;
  /// Optional shared memo for computed weights.
  WeightsCache* weights_cache = nullptr;
};

struct SolverMeta {
  int iterations = 0;
  int starts_tried = 0;
  bool converged = true;
  double wall_time_s = 0.0;
  /// 1/2 sum of p_h^2 over combinations the robot model has no class for;
  /// constant in R and left out of the objective.
  double dropped_intent_constant = 0.0;
  std::vector<std::string> warnings;
  std::uint64_t seed = 0;
  /// Combination whose statistics produced the weights (knitro only).
  std::optional<TaskMask> weight_combination;
};

struct Solution {
  ControlMode mode = ControlMode::kMimic;
  FeatureVector robot;
  double objective = 0.0;
  double intent_term = 0.0;
  /// Weighted elastic penalty (1/gamma) sum_i (1/lambda_i) (R_i - H_i)^2.
  double mimic_term = 0.0;
  /// Unweighted sum_i (R_i - H_i)^2.
  double mimic_deviation = 0.0;
  TargetVector p_r;
  /// Empty for a mimic solve with no intent source.
  TargetVector p_h;
  std::optional<ArbitrationWeights> weights;
  SolverMeta meta;
};

/// 1/2 sum_k (P(k | r) - p_h[combination_k])^2 over the model's classes.
double objective_intent(const GraspModel& model, const TargetVector& p_h, const Eigen::VectorXd& r);
Eigen::VectorXd gradient_intent(const GraspModel& model, const TargetVector& p_h,
                                const Eigen::VectorXd& r);

/// objective_intent + (1/gamma) sum_i (1/lambda_i) (r_i - h_i)^2 using the
/// clamped weights. Throws InvalidArgument on a non-positive clamped weight.
double objective_knitro(const GraspModel& model, const TargetVector& p_h, const Eigen::VectorXd& r,
                        const Eigen::VectorXd& h, const ArbitrationWeights& weights);
Eigen::VectorXd gradient_knitro(const GraspModel& model, const TargetVector& p_h,
                                const Eigen::VectorXd& r, const Eigen::VectorXd& h,
                                const ArbitrationWeights& weights);

/// The target vector a request resolves to (explicit target, explicit
/// intent, or intent estimated from the human model).
TargetVector resolve_target(const SolveRequest& req);

/// Weights a knitro solve would use for `p_h`.
ArbitrationWeights resolve_weights(const SolveRequest& req, const TargetVector& p_h,
                                   const ControllerConfig& config);

/// R* = clamp(H).
Solution solve_mimic(const SolveRequest& req, const ControllerConfig& config = {});

/// Dispatches on `req.mode`. Intent-only and knitro run the box-constrained
/// minimizer from clamp(H) and from every clamped class mean, keeping the
/// best result (ties within 1e-10 go to the one nearest H).
Solution solve(const SolveRequest& req, const ControllerConfig& config = {});

}  // namespace telegrasp
