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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace telegrasp {

/// Bitmask over a TaskSet: bit i set means task i belongs to the
/// combination. Mask 0 is the empty combination ("none").
using TaskMask = std::uint32_t;

/// Ordered list of principal task names. The order is fixed for the lifetime
/// of any model built on it since combination masks depend on it.
class TaskSet {
 public:
  static constexpr std::size_t kMaxTasks = 16;

  TaskSet() = default;
  explicit TaskSet(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  std::size_t combination_count() const { return std::size_t{1} << names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  /// Index of `name`, or throws NotFound.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  /// Builds a mask from task names. The single name "none" maps to mask 0.
  TaskMask mask_of(std::span<const std::string> names) const;
  /// Task names in mask order; the empty mask yields an empty list.
  std::vector<std::string> names_of(TaskMask mask) const;
  /// Set notation, e.g. "{use, handover}"; "{}" for the empty combination.
  std::string label(TaskMask mask) const;

  bool operator==(const TaskSet&) const = default;

 private:
  std::vector<std::string> names_;
};

/// Per-task probabilities P(w_i) from independent intent classifiers.
/// Entries need not sum to one.
struct IntentVector {
  std::vector<double> p;

  void validate(std::size_t task_count) const;
};

/// Probability over all 2^m task combinations, indexed by TaskMask.
struct TargetVector {
  std::vector<double> q;

  std::size_t size() const { return q.size(); }
  double operator[](TaskMask mask) const { return q[mask]; }
  /// Lowest mask attaining the maximum probability.
  TaskMask argmax() const;
};

/// Powerset descriptor of independent task probabilities:
/// q[b] = prod_{i in b} p_i * prod_{i not in b} (1 - p_i).
TargetVector powerset_target(const IntentVector& intent);
/// Same, checking `intent` against `tasks` first.
TargetVector powerset_target(const IntentVector& intent, const TaskSet& tasks);

/// Marginal task probabilities of a combination distribution:
/// P(w_i) = sum of q[b] over every b containing task i.
IntentVector task_marginals(std::span<const double> combination_probs,
                            std::span<const TaskMask> masks, std::size_t task_count);

}  // namespace telegrasp
