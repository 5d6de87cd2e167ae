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
#include <map>
#include <string>

#include "json.hpp"
#include "telegrasp/controllers.hpp"

namespace telegrasp {

inline constexpr int kSolutionSchemaVersion = 1;

/// {"lower": [...], "upper": [...]}
WorkspaceBounds bounds_from_json(const nlohmann::json& j);
nlohmann::json bounds_to_json(const WorkspaceBounds& b);

/// Named bounds sets. A file holds either one {"lower", "upper"} object
/// (registered as "default") or {"bounds": {"<id>": {...}, ...}}.
using BoundsCatalog = std::map<std::string, WorkspaceBounds>;
BoundsCatalog bounds_catalog_from_json(const nlohmann::json& j);
BoundsCatalog load_bounds_catalog(const std::filesystem::path& path);
/// The single entry of a catalog, or the one named "default".
const WorkspaceBounds& default_bounds(const BoundsCatalog& catalog);

/// Weight override: {"lambda": number | [d numbers], "gamma": number}.
/// A scalar lambda is broadcast to all `dim` features.
ArbitrationWeights weights_override_from_json(const nlohmann::json& j, int dim);
nlohmann::json weights_to_json(const ArbitrationWeights& w);

nlohmann::json solution_to_json(const Solution& s, const TaskSet& tasks, bool include_timing = true);

IntentVector intent_from_json(const nlohmann::json& j);

}  // namespace telegrasp
