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

#include "telegrasp/box_minimizer.hpp"

#include <cmath>
#include <deque>
#include <vector>

#include "telegrasp/error.hpp"

namespace telegrasp {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

struct Correction {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
};

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// 1 for variables free to move this step, 0 for ones held at a bound.
Eigen::VectorXd free_mask(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  Eigen::VectorXd mask(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool pinned = lower[i] == upper[i] || (x[i] <= lower[i] && g[i] > 0.0) ||
                        (x[i] >= upper[i] && g[i] < 0.0);
    mask[i] = pinned ? 0.0 : 1.0;
  }
  return mask;
}

// Two-loop recursion restricted to the free variables.
Eigen::VectorXd lbfgs_direction(const std::deque<Correction>& memory, const Eigen::VectorXd& g,
                                const Eigen::VectorXd& mask) {
  Eigen::VectorXd q = g.cwiseProduct(mask);
  std::vector<double> alpha(memory.size(), 0.0);
  std::vector<double> rho(memory.size(), 0.0);
  double scale = 1.0;
  bool have_scale = false;
  for (std::size_t j = memory.size(); j-- > 0;) {
    const Eigen::VectorXd s = memory[j].s.cwiseProduct(mask);
    const Eigen::VectorXd y = memory[j].y.cwiseProduct(mask);
    const double sy = s.dot(y);
    if (!(sy > 0.0)) continue;
    rho[j] = 1.0 / sy;
    alpha[j] = rho[j] * s.dot(q);
    q -= alpha[j] * y;
    if (!have_scale) {
      scale = sy / y.squaredNorm();
      have_scale = true;
    }
  }
  Eigen::VectorXd r = scale * q;
  for (std::size_t j = 0; j < memory.size(); ++j) {
    if (rho[j] == 0.0) continue;
    const Eigen::VectorXd s = memory[j].s.cwiseProduct(mask);
    const Eigen::VectorXd y = memory[j].y.cwiseProduct(mask);
    const double beta = rho[j] * y.dot(r);
    r += (alpha[j] - beta) * s;
  }
  return (-r).cwiseProduct(mask);
}

}  // namespace

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (x.size() == 0) return 0.0;
  return (x - project(x - grad, lower, upper)).cwiseAbs().maxCoeff();
}

MinimizerResult minimize_box(const ObjectiveFn& objective, const Eigen::VectorXd& start,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const MinimizerOptions& options) {
  if (start.size() != lower.size() || start.size() != upper.size()) {
    throw DimensionMismatch("minimizer start and bounds differ in dimension");
  }
  if ((lower.array() > upper.array()).any()) throw InvalidArgument("infeasible bounds: lower > upper");

  MinimizerResult result;
  Eigen::VectorXd x = project(start, lower, upper);
  Eigen::VectorXd g(x.size());
  double f = objective(x, g);
  std::deque<Correction> memory;
  Eigen::VectorXd previous_mask;
  Eigen::VectorXd gn(x.size());

  while (result.iterations < options.max_iters) {
    if (projected_gradient_norm(x, g, lower, upper) < options.grad_tol) {
      result.converged = true;
      break;
    }
    const Eigen::VectorXd mask = free_mask(x, g, lower, upper);
    if (previous_mask.size() != mask.size() || previous_mask != mask) memory.clear();
    previous_mask = mask;

    Eigen::VectorXd dir = lbfgs_direction(memory, g, mask);
    if (!(g.dot(dir) < 0.0)) {
      memory.clear();
      dir = -g.cwiseProduct(mask);
    }
    double step = 1.0;
    if (memory.empty()) {
      const double dmax = dir.cwiseAbs().maxCoeff();
      if (dmax > 1.0) step = 1.0 / dmax;
    }

    bool accepted = false;
    Eigen::VectorXd xn;
    double fn = f;
    for (int ls = 0; ls < kMaxBacktracks; ++ls) {
      xn = project(x + step * dir, lower, upper);
      const Eigen::VectorXd dx = xn - x;
      const double slope = g.dot(dx);
      if (dx.cwiseAbs().maxCoeff() == 0.0 || !(slope < 0.0)) break;
      fn = objective(xn, gn);
      if (fn <= f + kArmijo * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++result.iterations;
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        previous_mask.resize(0);
        continue;
      }
      break;
    }
    Correction c{xn - x, gn - g};
    if (c.s.dot(c.y) > 1e-12 * c.s.norm() * c.y.norm()) {
      memory.push_back(std::move(c));
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    x = std::move(xn);
    f = fn;
    g = gn;
  }
  if (!result.converged) {
    result.converged = projected_gradient_norm(x, g, lower, upper) < options.grad_tol;
  }
  result.x = std::move(x);
  result.value = f;
  return result;
}

}  // namespace telegrasp
