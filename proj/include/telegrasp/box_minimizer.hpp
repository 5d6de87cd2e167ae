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
#include <functional>

namespace telegrasp {

struct MinimizerOptions {
  /// Stop when the infinity norm of the projected gradient falls below this.
  double grad_tol = 1e-8;
  int max_iters = 500;
  /// Number of correction pairs kept by the quasi-Newton model.
  int memory = 8;
};

struct MinimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Objective callback: returns f(x) and writes the gradient into `grad`.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Projected limited-memory BFGS over the box lower <= x <= upper.
///
/// Variables pinned at a bound with the gradient pushing outward are frozen
/// for the step; the quasi-Newton direction acts on the remaining ones and
/// the step is projected back onto the box with an Armijo backtracking
/// search along the projected path. Every accepted step decreases f, so the
/// result is never worse than the (projected) start.
MinimizerResult minimize_box(const ObjectiveFn& objective, const Eigen::VectorXd& start,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const MinimizerOptions& options = {});

/// Infinity norm of x - clamp(x - grad).
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

}  // namespace telegrasp
