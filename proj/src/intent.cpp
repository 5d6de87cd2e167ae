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

#include "telegrasp/intent.hpp"

#include <algorithm>
#include <set>

#include "telegrasp/error.hpp"

namespace telegrasp {

TaskSet::TaskSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw InvalidArgument("task set must contain at least one task");
  if (names_.size() > kMaxTasks) {
    throw InvalidArgument("task set holds " + std::to_string(names_.size()) +
                          " tasks; at most " + std::to_string(kMaxTasks) + " are supported");
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw InvalidArgument("task names must be non-empty");
    if (name == "none") throw InvalidArgument("\"none\" is reserved for the empty combination");
    if (!seen.insert(name).second) throw InvalidArgument("duplicate task name '" + name + "'");
  }
}

std::size_t TaskSet::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw NotFound("unknown task '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

bool TaskSet::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

TaskMask TaskSet::mask_of(std::span<const std::string> names) const {
  if (names.size() == 1 && names[0] == "none") return 0;
  if (names.empty()) throw InvalidArgument("empty combination; use [\"none\"] for the empty set");
  TaskMask mask = 0;
  for (const auto& name : names) {
    const TaskMask bit = TaskMask{1} << index_of(name);
    if (mask & bit) throw InvalidArgument("task '" + name + "' repeated in combination");
    mask |= bit;
  }
  return mask;
}

std::vector<std::string> TaskSet::names_of(TaskMask mask) const {
  if (mask >= combination_count()) {
    throw InvalidArgument("combination mask " + std::to_string(mask) + " out of range");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (mask & (TaskMask{1} << i)) out.push_back(names_[i]);
  }
  return out;
}

std::string TaskSet::label(TaskMask mask) const {
  std::string out = "{";
  bool first = true;
  for (const auto& name : names_of(mask)) {
    if (!first) out += ", ";
    out += name;
    first = false;
  }
  return out + "}";
}

void IntentVector::validate(std::size_t task_count) const {
  if (p.size() != task_count) {
    throw DimensionMismatch("intent vector has " + std::to_string(p.size()) +
                            " entries, task set has " + std::to_string(task_count));
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
      throw InvalidArgument("intent entry " + std::to_string(i) + " = " + std::to_string(p[i]) +
                            " is outside [0, 1]");
    }
  }
}

TaskMask TargetVector::argmax() const {
  if (q.empty()) throw InvalidArgument("argmax of an empty target vector");
  return static_cast<TaskMask>(std::max_element(q.begin(), q.end()) - q.begin());
}

TargetVector powerset_target(const IntentVector& intent) {
  intent.validate(intent.p.size());
  if (intent.p.empty() || intent.p.size() > TaskSet::kMaxTasks) {
    throw DimensionMismatch("intent vector must have between 1 and " +
                            std::to_string(TaskSet::kMaxTasks) + " entries");
  }
  const std::size_t m = intent.p.size();
  TargetVector out;
  out.q.resize(std::size_t{1} << m);
  for (std::size_t mask = 0; mask < out.q.size(); ++mask) {
    double prod = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      prod *= (mask & (std::size_t{1} << i)) ? intent.p[i] : 1.0 - intent.p[i];
    }
    out.q[mask] = prod;
  }
  return out;
}

TargetVector powerset_target(const IntentVector& intent, const TaskSet& tasks) {
  intent.validate(tasks.size());
  return powerset_target(intent);
}

IntentVector task_marginals(std::span<const double> combination_probs,
                            std::span<const TaskMask> masks, std::size_t task_count) {
  if (combination_probs.size() != masks.size()) {
    throw DimensionMismatch("probability and mask lists differ in length");
  }
  IntentVector out;
  out.p.assign(task_count, 0.0);
  for (std::size_t k = 0; k < masks.size(); ++k) {
    for (std::size_t i = 0; i < task_count; ++i) {
      if (masks[k] & (TaskMask{1} << i)) out.p[i] += combination_probs[k];
    }
  }
  // Summation roundoff can push a saturated marginal a few ulps past 1.
  for (auto& v : out.p) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace telegrasp
