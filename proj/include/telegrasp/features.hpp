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
#include <algorithm>
#include <span>
#include <vector>

namespace telegrasp {

/// How the entries of a feature vector are interpreted.
///
/// A grasp layout is [position (3, m), orientation (3, rotation vector, rad),
/// apertures (F, 0 = fully open .. 1 = closed)], so d = 6 + F. A generic
/// layout carries d unnamed real features; it is used for synthetic models.
class FeatureLayout {
 public:
  static constexpr int kPoseDims = 6;

  static FeatureLayout generic(int dim);
  static FeatureLayout grasp(int aperture_count);

  int dim() const { return dim_; }
  bool is_grasp() const { return grasp_; }
  int aperture_count() const { return grasp_ ? dim_ - kPoseDims : 0; }
  /// Index of the first aperture feature; only meaningful for grasp layouts.
  int aperture_offset() const { return kPoseDims; }
  /// Number of leading features treated as position (3 for grasp layouts,
  /// min(3, d) for generic ones).
  int position_dims() const { return grasp_ ? 3 : std::min(dim_, 3); }

  bool operator==(const FeatureLayout&) const = default;

 private:
  FeatureLayout(int dim, bool grasp) : dim_(dim), grasp_(grasp) {}
  int dim_ = 0;
  bool grasp_ = false;
};

/// A hand or gripper configuration in a declared layout.
class FeatureVector {
 public:
  FeatureVector() : layout_(FeatureLayout::generic(0)) {}
  /// Wraps `values` as-is. Throws DimensionMismatch if sizes disagree.
  FeatureVector(Eigen::VectorXd values, FeatureLayout layout);

  /// Builds a grasp-layout vector, canonicalizing the rotation vector to
  /// norm <= pi and clamping apertures to [0, 1].
  static FeatureVector from_parts(const Eigen::Vector3d& position,
                                  const Eigen::Vector3d& orientation,
                                  std::span<const double> apertures);
  /// Generic-layout vector from plain values.
  static FeatureVector generic(std::span<const double> values);

  const Eigen::VectorXd& values() const { return values_; }
  const FeatureLayout& layout() const { return layout_; }
  int dim() const { return static_cast<int>(values_.size()); }

  Eigen::Vector3d position() const;
  Eigen::Vector3d orientation() const;
  std::vector<double> apertures() const;

 private:
  Eigen::VectorXd values_;
  FeatureLayout layout_;
};

/// Equivalent rotation vector with norm in [0, pi].
Eigen::Vector3d canonicalize_rotation(const Eigen::Vector3d& rotvec);

/// Equivalent rotation vector (same axis, angle shifted by multiples of
/// 2*pi, axis possibly flipped) closest to `reference`. Returns `rotvec`
/// unchanged when it is already the closest representative.
Eigen::Vector3d unwrap_rotation(const Eigen::Vector3d& rotvec, const Eigen::Vector3d& reference);

}  // namespace telegrasp
