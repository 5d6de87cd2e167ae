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

#include "telegrasp/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "telegrasp/error.hpp"

namespace telegrasp {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

FeatureLayout FeatureLayout::generic(int dim) {
  if (dim < 0) throw InvalidArgument("feature dimension must be non-negative");
  return FeatureLayout(dim, false);
}

FeatureLayout FeatureLayout::grasp(int aperture_count) {
  if (aperture_count < 0) throw InvalidArgument("aperture count must be non-negative");
  return FeatureLayout(kPoseDims + aperture_count, true);
}

FeatureVector::FeatureVector(Eigen::VectorXd values, FeatureLayout layout)
    : values_(std::move(values)), layout_(layout) {
  if (values_.size() != layout_.dim()) {
    throw DimensionMismatch("feature vector has " + std::to_string(values_.size()) +
                            " entries, layout expects " + std::to_string(layout_.dim()));
  }
}

FeatureVector FeatureVector::from_parts(const Eigen::Vector3d& position,
                                        const Eigen::Vector3d& orientation,
                                        std::span<const double> apertures) {
  const auto layout = FeatureLayout::grasp(static_cast<int>(apertures.size()));
  Eigen::VectorXd v(layout.dim());
  v.segment<3>(0) = position;
  v.segment<3>(3) = canonicalize_rotation(orientation);
  for (std::size_t i = 0; i < apertures.size(); ++i) {
    v[FeatureLayout::kPoseDims + static_cast<Eigen::Index>(i)] = std::clamp(apertures[i], 0.0, 1.0);
  }
  return FeatureVector(std::move(v), layout);
}

FeatureVector FeatureVector::generic(std::span<const double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return FeatureVector(std::move(v), FeatureLayout::generic(static_cast<int>(values.size())));
}

Eigen::Vector3d FeatureVector::position() const {
  if (!layout_.is_grasp()) throw InvalidArgument("position requested from a generic feature vector");
  return values_.segment<3>(0);
}

Eigen::Vector3d FeatureVector::orientation() const {
  if (!layout_.is_grasp()) throw InvalidArgument("orientation requested from a generic feature vector");
  return values_.segment<3>(3);
}

std::vector<double> FeatureVector::apertures() const {
  std::vector<double> out;
  for (int i = layout_.aperture_offset(); layout_.is_grasp() && i < layout_.dim(); ++i) {
    out.push_back(values_[i]);
  }
  return out;
}

Eigen::Vector3d canonicalize_rotation(const Eigen::Vector3d& rotvec) {
  const double angle = rotvec.norm();
  if (angle <= kPi) return rotvec;
  const Eigen::Vector3d axis = rotvec / angle;
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped > kPi) return -axis * (kTwoPi - wrapped);
  return axis * wrapped;
}

Eigen::Vector3d unwrap_rotation(const Eigen::Vector3d& rotvec, const Eigen::Vector3d& reference) {
  const double angle = rotvec.norm();
  Eigen::Vector3d axis;
  if (angle > 0.0) {
    axis = rotvec / angle;
  } else if (reference.norm() > 0.0) {
    axis = reference.normalized();
  } else {
    return rotvec;
  }
  // Every representative of the rotation is axis * (angle + 2*pi*k).
  const double along = axis.dot(reference);
  const long k_center = std::lround((along - angle) / kTwoPi);
  Eigen::Vector3d best = rotvec;
  double best_dist = (rotvec - reference).squaredNorm();
  for (long k = k_center - 1; k <= k_center + 1; ++k) {
    if (k == 0) continue;
    const Eigen::Vector3d candidate = axis * (angle + kTwoPi * static_cast<double>(k));
    const double dist = (candidate - reference).squaredNorm();
    if (dist < best_dist) {
      best = candidate;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace telegrasp
