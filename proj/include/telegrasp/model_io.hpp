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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "telegrasp/em.hpp"
#include "telegrasp/grasp_model.hpp"

namespace telegrasp {

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json model_to_json(const GraspModel& model);
/// Throws SchemaVersionError, ParseError, or CorruptModel.
GraspModel model_from_json(const nlohmann::json& doc);

void save_model(const GraspModel& model, const std::filesystem::path& path);
GraspModel load_model(const std::filesystem::path& path);

/// Feature JSON is either {"position": [3], "orientation": [3],
/// "apertures": [F]} (grasp layout, normalized on read) or a plain array
/// (generic layout).
FeatureVector features_from_json(const nlohmann::json& j);
nlohmann::json features_to_json(const FeatureVector& f);

/// Combination JSON is a list of task names; ["none"] is the empty set.
TaskMask combination_from_json(const nlohmann::json& j, const TaskSet& tasks);
nlohmann::json combination_to_json(TaskMask mask, const TaskSet& tasks);

struct Dataset {
  TaskSet tasks;
  FeatureLayout layout = FeatureLayout::generic(0);
  std::vector<Demonstration> demonstrations;
};

/// Reads a JSON-Lines demonstration file. When `tasks` is empty, the task
/// set is built from task names in order of first appearance. Errors carry
/// the 1-based line number ("line 7: ...").
Dataset parse_dataset(std::istream& in, const std::optional<TaskSet>& tasks = std::nullopt);
Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<TaskSet>& tasks = std::nullopt);

/// Reads and parses a whole JSON file; ParseError names the path.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace telegrasp
