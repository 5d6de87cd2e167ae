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

#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "telegrasp/controllers.hpp"

namespace telegrasp {

inline constexpr int kReplaySchemaVersion = 1;

struct TrajectoryFrame {
  double t = 0.0;
  FeatureVector features;
  std::optional<IntentVector> intent;
};

/// Recorded operator motion. Timestamps strictly increase and every frame
/// has the same layout.
struct Trajectory {
  std::vector<TrajectoryFrame> frames;
  std::string task;
  std::string operator_id;
};

/// JSON-Lines: optional first line {"metadata": {"task", "operator"}},
/// then one {"t", "features", "intent"?} object per line.
Trajectory parse_trajectory(std::istream& in);
Trajectory load_trajectory(const std::filesystem::path& path);

/// Everything but the frame itself that a solve needs.
struct FrameContext {
  std::shared_ptr<const GraspModel> robot_model;
  std::shared_ptr<const GraspModel> human_model;
  WorkspaceBounds bounds;
  std::optional<ArbitrationWeights> weights_override;
  std::uint64_t seed = 0;
  WeightsCache* weights_cache = nullptr;
};

/// The request for one frame: frame intent when present, otherwise the
/// estimator runs against the human model.
SolveRequest frame_request(ControlMode mode, const FeatureVector& features,
                           const std::optional<IntentVector>& intent, const FrameContext& ctx);

struct ReplaySummary {
  std::size_t frames = 0;
  /// Sum of Euclidean steps between consecutive R* positions.
  double path_length = 0.0;
  double mean_objective = 0.0;
  double max_objective = 0.0;
  double mean_solve_wall_time_s = 0.0;
  /// argmax p_r == argmax p_h on the last frame.
  bool final_task_match = false;
};

struct ReplayReport {
  ControlMode mode = ControlMode::kMimic;
  std::vector<double> timestamps;
  std::vector<Solution> solutions;
  ReplaySummary summary;
};

/// Solves every frame in order.
ReplayReport replay(const Trajectory& trajectory, ControlMode mode, const FrameContext& ctx,
                    const ControllerConfig& config = {});

/// Report document. Wall-clock fields are written only with
/// `include_timing`, so the default output is byte-for-byte reproducible.
nlohmann::json replay_reports_to_json(const std::vector<ReplayReport>& reports, const TaskSet& tasks,
                                      const Trajectory& trajectory, std::uint64_t seed,
                                      bool include_timing = false);

}  // namespace telegrasp
