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

// Small on-disk deployment shared by the replay, service and CLI tests.
// Models live under models/ next to bounds.json and stream.jsonl.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "fixtures.hpp"
#include "json.hpp"
#include "telegrasp/json_io.hpp"
#include "telegrasp/model_io.hpp"
#include "telegrasp/replay.hpp"

namespace telegrasp::testing {

struct World {
  std::filesystem::path dir;
  std::filesystem::path models_dir;
  std::filesystem::path bounds_path;
  std::filesystem::path trajectory_path;
  std::shared_ptr<const GraspModel> human;
  std::shared_ptr<const GraspModel> gripper;
  std::shared_ptr<const GraspModel> wide_gripper;
  BoundsCatalog bounds;
  Trajectory trajectory;
};

inline GaussianClass grasp_class(TaskMask mask, double prior, const std::vector<double>& mean,
                                 const std::vector<double>& sigma) {
  const auto d = static_cast<Eigen::Index>(mean.size());
  Eigen::VectorXd mu(d), var(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    mu[i] = mean[static_cast<std::size_t>(i)];
    var[i] = sigma[static_cast<std::size_t>(i)] * sigma[static_cast<std::size_t>(i)];
  }
  return GaussianClass(mask, prior, mu, var.asDiagonal());
}

// Three task combinations with distinct approach poses and closures.
inline std::shared_ptr<const GraspModel> world_model(const std::string& embodiment, double spread) {
  const std::vector<double> s = {0.04 * spread, 0.04 * spread, 0.03 * spread, 0.3 * spread,
                                 0.3 * spread,  0.4 * spread,  0.15 * spread, 0.15 * spread};
  std::vector<GaussianClass> classes{
      grasp_class(1, 0.4, {0.45, -0.05, 0.12, 0.0, 1.4, 0.0, 0.8, 0.7}, s),
      grasp_class(2, 0.35, {0.50, 0.05, 0.20, 0.0, 0.6, 1.2, 0.4, 0.5}, s),
      grasp_class(6, 0.25, {0.40, 0.10, 0.28, 0.5, 0.2, 1.6, 0.3, 0.2}, s)};
  return std::make_shared<const GraspModel>(embodiment, three_tasks(), FeatureLayout::grasp(2),
                                            std::move(classes));
}

inline FeatureVector world_frame(int i) {
  const double t = i / 99.0;
  const Eigen::Vector3d position(0.38 + 0.16 * t, -0.08 + 0.2 * t + 0.02 * std::sin(9.0 * t),
                                 0.10 + 0.2 * t);
  const Eigen::Vector3d orientation(0.4 * t, 1.5 - 1.3 * t, 1.7 * t);
  const std::vector<double> apertures{0.85 - 0.6 * t + 0.1 * std::sin(5.0 * t), 0.7 - 0.5 * t};
  return FeatureVector::from_parts(position, orientation, apertures);
}

inline World make_world(const std::string& name) {
  World w;
  w.dir = temp_dir(name);
  w.models_dir = w.dir / "models";
  std::filesystem::create_directories(w.models_dir);
  w.human = world_model("human", 1.6);
  w.gripper = world_model("gripper", 1.0);
  w.wide_gripper = world_model("wide-gripper", 2.2);
  save_model(*w.human, w.models_dir / "human.json");
  save_model(*w.gripper, w.models_dir / "gripper.json");
  save_model(*w.wide_gripper, w.models_dir / "wide-gripper.json");

  const double pi = std::acos(-1.0);
  w.bounds["default"] = {(Eigen::VectorXd(8) << 0.3, -0.3, 0.05, -pi, -pi, -pi, 0, 0).finished(),
                         (Eigen::VectorXd(8) << 0.7, 0.3, 0.5, pi, pi, pi, 1, 1).finished()};
  w.bounds["table"] = {(Eigen::VectorXd(8) << 0.3, -0.3, 0.15, -pi, -pi, -pi, 0, 0).finished(),
                       (Eigen::VectorXd(8) << 0.7, 0.3, 0.5, pi, pi, pi, 1, 1).finished()};
  nlohmann::json catalog = nlohmann::json::object();
  for (const auto& [id, b] : w.bounds) catalog[id] = bounds_to_json(b);
  w.bounds_path = w.dir / "bounds.json";
  write_text_file(w.bounds_path, nlohmann::json{{"bounds", catalog}}.dump(2));

  w.trajectory_path = w.dir / "stream.jsonl";
  std::ofstream out(w.trajectory_path);
  out << nlohmann::json{{"metadata", {{"task", "use"}, {"operator", "scripted"}}}}.dump() << "\n";
  for (int i = 0; i < 100; ++i) {
    nlohmann::json frame = {{"t", 0.0 + i / 30.0}, {"features", features_to_json(world_frame(i))}};
    // Every third frame carries classifier output; the rest use the estimator.
    if (i % 3 == 0) frame["intent"] = {0.9 - 0.008 * i, 0.1 + 0.007 * i, 0.05 + 0.004 * i};
    out << frame.dump() << "\n";
  }
  out.close();
  w.trajectory = load_trajectory(w.trajectory_path);
  return w;
}

inline FrameContext world_context(const World& w, const std::shared_ptr<const GraspModel>& robot,
                                  const std::string& bounds_id = "default") {
  return {robot, w.human, w.bounds.at(bounds_id), std::nullopt, 0, nullptr};
}

/// Copy of `j` without wall-clock fields.
inline nlohmann::json without_timing(nlohmann::json j) {
  if (j.is_object()) {
    j.erase("wall_time_s");
    j.erase("mean_solve_wall_time_s");
    for (auto& [k, v] : j.items()) v = without_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = without_timing(v);
  }
  return j;
}

}  // namespace telegrasp::testing
