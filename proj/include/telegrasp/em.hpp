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
#include <span>
#include <string>

#include "telegrasp/grasp_model.hpp"

namespace telegrasp {

/// One labeled demonstration grasp.
struct Demonstration {
  std::string embodiment;
  TaskMask combination = 0;  // 0 only for explicit "none" samples
  Eigen::VectorXd features;
  std::string trial_id;
  double weight = 1.0;
};

struct FitConfig {
  /// Added to every class covariance diagonal after each M-step.
  double eps_cov = 1e-6;
  /// Stop when |LL_t - LL_{t-1}| < rel_tol * |LL_{t-1}|.
  double rel_tol = 1e-8;
  int max_iters = 200;
  /// Grasp layouts only: unwrap each rotation vector toward the first
  /// sample of its combination before fitting.
  bool unwrap_orientation = true;
};

/// Fits one Gaussian class per distinct combination in `data` with
/// label-seeded soft EM. All demonstrations must share an embodiment and
/// have `layout.dim()` features.
///
/// Combinations with fewer than d + 1 samples get a diagonal covariance.
/// Throws InvalidArgument on an empty dataset, zero total weight, or mixed
/// embodiments; DimensionMismatch on inconsistent feature sizes.
GraspModel fit_em(std::span<const Demonstration> data, const TaskSet& tasks,
                  const FeatureLayout& layout, const FitConfig& config = {});

}  // namespace telegrasp
