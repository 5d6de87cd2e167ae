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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "telegrasp/grasp_model.hpp"

namespace telegrasp {

struct UnivariateNormal {
  double mean = 0.0;
  double sigma = 1.0;
};

struct MultivariateNormal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Divergence between a human population (H) and a robot population (R) of
/// one feature, in the arbitration convention:
///   ln(sigma_H / sigma_R) + (sigma_R^2 + (mu_R - mu_H)^2) / (2 sigma_H^2) - 1/2
/// Note this is the textbook KL(R || H) written with the arguments named
/// (H, R). Throws InvalidArgument unless both sigmas are positive.
double kl_feature(const UnivariateNormal& h, const UnivariateNormal& r);

/// Whole-hand divergence in the same convention:
///   1/2 (tr(S_H^-1 S_R) + (mu_H - mu_R)^T S_H^-1 (mu_H - mu_R) - d + ln |S_H| / |S_R|)
/// Throws DimensionMismatch or InvalidArgument (non-SPD covariance).
double kl_hand(const MultivariateNormal& h, const MultivariateNormal& r);

/// Mean and covariance of the class for `combination`. Throws NotFound.
MultivariateNormal marginal_stats(const GraspModel& model, TaskMask combination);
/// Moment-matched single Gaussian of the whole mixture (prior weighted).
MultivariateNormal pooled_stats(const GraspModel& model);

/// Which features of two embodiments correspond. `pairs[j] = {a, b}` says
/// feature `a` of the first model matches feature `b` of the second.
/// Features that appear in no pair are left out of every comparison.
struct FeatureAlignment {
  std::vector<std::pair<int, int>> pairs;

  static FeatureAlignment identity(int dim);
};

/// Declared aperture correspondences between embodiments, read from JSON:
/// {"pairs": [{"a": "human", "b": "two-finger", "apertures": [[0, 0], [3, 1]]}]}
/// Aperture indices are relative to each layout's aperture block.
class AlignmentTable {
 public:
  AlignmentTable() = default;
  static AlignmentTable from_json(const nlohmann::json& j);

  /// Identity for equal layouts; otherwise position + orientation plus the
  /// declared aperture pairs. Throws InvalidArgument when the layouts differ
  /// and no declaration exists.
  FeatureAlignment resolve(const GraspModel& a, const GraspModel& b) const;

 private:
  struct Entry {
    std::string a;
    std::string b;
    std::vector<std::pair<int, int>> apertures;
  };
  std::vector<Entry> entries_;
};

/// Restricts a normal to the first (`use_first`) or second side of an alignment.
MultivariateNormal select_features(const MultivariateNormal& n, const FeatureAlignment& alignment,
                                   bool use_first);

/// Square table of whole-hand divergences over one task combination (or the
/// pooled mixtures when `combination` is empty). Row P is the embodiment
/// performing the task, column Q the one providing input:
///   entry(P, Q) = kl_hand(h = Q, r = P)
/// which is the textbook KL(P || Q). The diagonal is exactly zero.
Eigen::MatrixXd kl_table(const std::vector<const GraspModel*>& models,
                         std::optional<TaskMask> combination,
                         const AlignmentTable& alignment = {});

enum class WeightSource { kPerTask, kPooled };

struct WeightConfig {
  double w_min = 1e-3;
  double w_max = 1e3;
  WeightSource source = WeightSource::kPerTask;
  /// Use the pooled mixtures when either model lacks the requested class.
  bool fallback_pooled = true;
  /// Divide raw lambdas by their mean before clamping.
  bool normalize_lambda = false;
};

/// Arbitration weights between a human model and a robot model. `lambda`
/// is indexed by robot feature.
struct ArbitrationWeights {
  std::vector<double> lambda;
  double gamma = 0.0;
  std::vector<double> clamped_lambda;
  double clamped_gamma = 0.0;
  /// How the statistics were chosen: "per_task", "pooled" or "override".
  std::string source;

  bool operator==(const ArbitrationWeights&) const = default;
};

/// Clamps raw weights into [w_min, w_max].
ArbitrationWeights clamp_weights(std::vector<double> lambda, double gamma,
                                 const WeightConfig& config, std::string source);

/// Per-feature and whole-hand divergences for one task combination. Robot
/// features with no human counterpart in the alignment get lambda = w_max
/// (weakest mimic pull) and are left out of gamma.
ArbitrationWeights arbitration_weights(const GraspModel& human, const GraspModel& robot,
                                       TaskMask combination, const WeightConfig& config,
                                       const AlignmentTable& alignment = {});

/// CSV with a header row and column of embodiment ids.
std::string kl_table_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& table);
nlohmann::json kl_table_json(const std::vector<std::string>& ids, const Eigen::MatrixXd& table,
                             const std::string& combination_label);

}  // namespace telegrasp
