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

#include "telegrasp/controllers.hpp"

#include <chrono>
#include <cmath>

#include "telegrasp/error.hpp"

namespace telegrasp {

namespace {

constexpr double kTieTolerance = 1e-10;

void check_target(const GraspModel& model, const TargetVector& p_h) {
  if (p_h.size() != model.tasks().combination_count()) {
    throw DimensionMismatch("target vector has " + std::to_string(p_h.size()) +
                            " entries, model task set needs " +
                            std::to_string(model.tasks().combination_count()));
  }
}

void check_point(const GraspModel& model, const Eigen::VectorXd& r) {
  if (r.size() != model.dim()) {
    throw DimensionMismatch("point has " + std::to_string(r.size()) + " features, model '" +
                            model.embodiment() + "' has " + std::to_string(model.dim()));
  }
}

// Value and (optionally) gradient of the intent-matching term.
double intent_term(const GraspModel& model, const TargetVector& p_h, const Eigen::VectorXd& r,
                   Eigen::VectorXd* grad) {
  check_target(model, p_h);
  check_point(model, r);
  const auto post = posterior(model, r);
  const auto& classes = model.classes();
  double value = 0.0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const double diff = post[k] - p_h[classes[k].combination()];
    value += diff * diff;
  }
  value *= 0.5;
  if (grad) {
    // dP_k/dr = P_k (g_k - sum_j P_j g_j), g_k = -Sigma_k^-1 (r - mu_k).
    std::vector<Eigen::VectorXd> g(classes.size());
    Eigen::VectorXd g_bar = Eigen::VectorXd::Zero(r.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
      g[k] = classes[k].solve(classes[k].mean() - r);
      g_bar += post[k] * g[k];
    }
    grad->setZero(r.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
      const double coef = (post[k] - p_h[classes[k].combination()]) * post[k];
      if (coef != 0.0) *grad += coef * (g[k] - g_bar);
    }
  }
  return value;
}

Eigen::VectorXd penalty_coefficients(const ArbitrationWeights& weights, Eigen::Index d) {
  if (static_cast<Eigen::Index>(weights.clamped_lambda.size()) != d) {
    throw DimensionMismatch("weights carry " + std::to_string(weights.clamped_lambda.size()) +
                            " lambdas, expected " + std::to_string(d));
  }
  if (!(weights.clamped_gamma > 0.0)) throw InvalidArgument("clamped gamma must be positive");
  Eigen::VectorXd coef(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double l = weights.clamped_lambda[static_cast<std::size_t>(i)];
    if (!(l > 0.0)) throw InvalidArgument("clamped lambda must be positive");
    coef[i] = 1.0 / (weights.clamped_gamma * l);
  }
  return coef;
}

double penalty_value(const Eigen::VectorXd& coef, const Eigen::VectorXd& r, const Eigen::VectorXd& h) {
  return (coef.array() * (r - h).array().square()).sum();
}

bool is_degenerate_intent(const GraspModel& model, const TargetVector& p_h) {
  return p_h[0] >= 1.0 && !model.has_combination(0);
}

double dropped_constant(const GraspModel& model, const TargetVector& p_h) {
  double out = 0.0;
  for (std::size_t mask = 0; mask < p_h.size(); ++mask) {
    if (!model.has_combination(static_cast<TaskMask>(mask))) out += p_h.q[mask] * p_h.q[mask];
  }
  return 0.5 * out;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Prepared {
  const GraspModel& robot;
  Eigen::VectorXd h;
  TargetVector p_h;
};

Prepared prepare(const SolveRequest& req) {
  if (!req.robot_model) throw InvalidArgument("solve request has no robot model");
  const auto& robot = *req.robot_model;
  if (req.human.dim() != robot.dim()) {
    throw DimensionMismatch("human frame has " + std::to_string(req.human.dim()) +
                            " features, robot model '" + robot.embodiment() + "' has " +
                            std::to_string(robot.dim()));
  }
  req.bounds.validate(robot.layout());
  // Mimic needs no target; without any intent source p_h stays empty.
  const bool no_source = !req.target && !req.intent && !req.human_model;
  if (req.mode == ControlMode::kMimic && no_source) return {robot, req.human.values(), TargetVector{}};
  auto p_h = resolve_target(req);
  check_target(robot, p_h);
  return {robot, req.human.values(), std::move(p_h)};
}

Solution finish(const SolveRequest& req, const Prepared& prep, Eigen::VectorXd r,
                std::optional<ArbitrationWeights> weights, SolverMeta meta,
                std::chrono::steady_clock::time_point t0) {
  Solution out;
  out.mode = req.mode;
  const bool has_target = prep.p_h.size() > 0;
  out.intent_term = has_target ? intent_term(prep.robot, prep.p_h, r, nullptr) : 0.0;
  out.mimic_term = weights ? penalty_value(penalty_coefficients(*weights, r.size()), r, prep.h) : 0.0;
  out.objective = out.intent_term + out.mimic_term;
  out.mimic_deviation = (r - prep.h).squaredNorm();
  out.p_r = posterior_target(prep.robot, r);
  out.p_h = prep.p_h;
  out.robot = FeatureVector(std::move(r), prep.robot.layout());
  out.weights = std::move(weights);
  if (has_target) {
    meta.dropped_intent_constant = dropped_constant(prep.robot, prep.p_h);
  } else {
    meta.warnings.push_back("no_intent_source: intent term not evaluated");
  }
  meta.seed = req.seed;
  meta.wall_time_s = elapsed_since(t0);
  out.meta = std::move(meta);
  return out;
}

}  // namespace

std::string to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::kMimic:
      return "mimic";
    case ControlMode::kIntentOnly:
      return "intent_only";
    case ControlMode::kKnitro:
      return "knitro";
  }
  return "unknown";
}

ControlMode parse_mode(const std::string& name) {
  if (name == "mimic") return ControlMode::kMimic;
  if (name == "intent_only") return ControlMode::kIntentOnly;
  if (name == "knitro") return ControlMode::kKnitro;
  throw InvalidArgument("unknown mode '" + name + "' (expected mimic, intent_only or knitro)");
}

void WorkspaceBounds::validate(const FeatureLayout& layout) const {
  if (lower.size() != layout.dim() || upper.size() != layout.dim()) {
    throw DimensionMismatch("bounds have " + std::to_string(lower.size()) + "/" +
                            std::to_string(upper.size()) + " entries, expected " +
                            std::to_string(layout.dim()));
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw InvalidArgument("infeasible bounds at feature " + std::to_string(i) + ": lower " +
                            std::to_string(lower[i]) + " > upper " + std::to_string(upper[i]));
    }
  }
  if (layout.is_grasp()) {
    for (int i = layout.aperture_offset(); i < layout.dim(); ++i) {
      if (lower[i] < 0.0 || upper[i] > 1.0) {
        throw InvalidArgument("aperture bounds at feature " + std::to_string(i) +
                              " must lie within [0, 1]");
      }
    }
  }
}

Eigen::VectorXd WorkspaceBounds::clamp(const Eigen::VectorXd& x) const {
  if (x.size() != lower.size()) throw DimensionMismatch("clamp: dimension mismatch");
  return x.cwiseMax(lower).cwiseMin(upper);
}

bool WorkspaceBounds::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lower.size()) return false;
  return ((x - lower).array() >= -tol).all() && ((upper - x).array() >= -tol).all();
}

ArbitrationWeights WeightsCache::get(const GraspModel& human, const GraspModel& robot,
                                     TaskMask combination, const WeightConfig& config,
                                     const AlignmentTable& alignment) {
  const Key key{&human, &robot, combination};
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  auto weights = arbitration_weights(human, robot, combination, config, alignment);
  std::lock_guard lock(mutex_);
  return entries_.try_emplace(key, std::move(weights)).first->second;
}

std::size_t WeightsCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

double objective_intent(const GraspModel& model, const TargetVector& p_h, const Eigen::VectorXd& r) {
  return intent_term(model, p_h, r, nullptr);
}

Eigen::VectorXd gradient_intent(const GraspModel& model, const TargetVector& p_h,
                                const Eigen::VectorXd& r) {
  Eigen::VectorXd grad;
  intent_term(model, p_h, r, &grad);
  return grad;
}

double objective_knitro(const GraspModel& model, const TargetVector& p_h, const Eigen::VectorXd& r,
                        const Eigen::VectorXd& h, const ArbitrationWeights& weights) {
  check_point(model, h);
  const auto coef = penalty_coefficients(weights, r.size());
  return intent_term(model, p_h, r, nullptr) + penalty_value(coef, r, h);
}

Eigen::VectorXd gradient_knitro(const GraspModel& model, const TargetVector& p_h,
                                const Eigen::VectorXd& r, const Eigen::VectorXd& h,
                                const ArbitrationWeights& weights) {
  check_point(model, h);
  const auto coef = penalty_coefficients(weights, r.size());
  Eigen::VectorXd grad;
  intent_term(model, p_h, r, &grad);
  grad.array() += 2.0 * coef.array() * (r - h).array();
  return grad;
}

TargetVector resolve_target(const SolveRequest& req) {
  if (req.target) return *req.target;
  if (req.intent) {
    if (req.robot_model) return powerset_target(*req.intent, req.robot_model->tasks());
    return powerset_target(*req.intent);
  }
  if (!req.human_model) {
    throw InvalidArgument("request carries no intent, no target and no human model to estimate from");
  }
  if (req.human.dim() != req.human_model->dim()) {
    throw DimensionMismatch("human frame does not match the human model; supply intent explicitly");
  }
  return powerset_target(estimate_intent(*req.human_model, req.human.values()),
                         req.human_model->tasks());
}

ArbitrationWeights resolve_weights(const SolveRequest& req, const TargetVector& p_h,
                                   const ControllerConfig& config) {
  if (req.weights_override) {
    return clamp_weights(req.weights_override->lambda, req.weights_override->gamma,
                         config.weights, "override");
  }
  if (!req.human_model) {
    throw InvalidArgument("knitro mode needs a human model or a weights override");
  }
  const TaskMask combination = p_h.argmax();
  if (req.weights_cache) {
    return req.weights_cache->get(*req.human_model, *req.robot_model, combination, config.weights,
                                  config.alignment);
  }
  return arbitration_weights(*req.human_model, *req.robot_model, combination, config.weights,
                             config.alignment);
}

Solution solve_mimic(const SolveRequest& req, const ControllerConfig&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto prep = prepare(req);
  SolverMeta meta;
  meta.starts_tried = 0;
  return finish(req, prep, req.bounds.clamp(prep.h), std::nullopt, std::move(meta), t0);
}

Solution solve(const SolveRequest& req, const ControllerConfig& config) {
  if (req.mode == ControlMode::kMimic) return solve_mimic(req, config);
  const auto t0 = std::chrono::steady_clock::now();
  const auto prep = prepare(req);
  const auto& robot = prep.robot;
  const Eigen::VectorXd& h = prep.h;
  const TargetVector& p_h = prep.p_h;

  SolverMeta meta;
  std::optional<ArbitrationWeights> weights;
  if (req.mode == ControlMode::kKnitro) {
    weights = resolve_weights(req, p_h, config);
    if (!req.weights_override) meta.weight_combination = p_h.argmax();
  } else if (is_degenerate_intent(robot, p_h)) {
    meta.warnings.push_back("no_intent: target concentrates on the empty combination; following H");
    return finish(req, prep, req.bounds.clamp(h), std::nullopt, std::move(meta), t0);
  }

  Eigen::VectorXd coef;
  if (weights) coef = penalty_coefficients(*weights, h.size());
  const ObjectiveFn fn = [&](const Eigen::VectorXd& r, Eigen::VectorXd& grad) {
    double value = intent_term(robot, p_h, r, &grad);
    if (weights) {
      value += penalty_value(coef, r, h);
      grad.array() += 2.0 * coef.array() * (r - h).array();
    }
    return value;
  };

  std::vector<Eigen::VectorXd> starts{req.bounds.clamp(h)};
  for (const auto& c : robot.classes()) {
    Eigen::VectorXd s = req.bounds.clamp(c.mean());
    bool seen = false;
    for (const auto& e : starts) seen = seen || e == s;
    if (!seen) starts.push_back(std::move(s));
  }

  std::optional<MinimizerResult> best;
  double best_dist = 0.0;
  for (const auto& start : starts) {
    auto leg = minimize_box(fn, start, req.bounds.lower, req.bounds.upper, config.minimizer);
    meta.iterations += leg.iterations;
    ++meta.starts_tried;
    const double dist = (leg.x - h).norm();
    const bool better = !best || leg.value < best->value - kTieTolerance ||
                        (std::abs(leg.value - best->value) <= kTieTolerance && dist < best_dist);
    if (better) {
      best = std::move(leg);
      best_dist = dist;
    }
  }
  meta.converged = best->converged;
  if (!meta.converged) meta.warnings.push_back("not_converged: best start hit the iteration limit");
  return finish(req, prep, best->x, std::move(weights), std::move(meta), t0);
}

}  // namespace telegrasp
