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

#include "telegrasp/replay.hpp"

#include <fstream>

#include "telegrasp/error.hpp"
#include "telegrasp/json_io.hpp"
#include "telegrasp/model_io.hpp"

namespace telegrasp {

using nlohmann::json;

Trajectory parse_trajectory(std::istream& in) {
  Trajectory out;
  std::string text;
  std::size_t line = 0;
  auto fail = [&line](const std::string& what) {
    return ParseError("line " + std::to_string(line) + ": " + what);
  };
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw fail(e.what());
    }
    if (!doc.is_object()) throw fail("expected a JSON object");
    if (doc.contains("metadata")) {
      if (!out.frames.empty()) throw fail("metadata must precede all frames");
      const auto& meta = doc["metadata"];
      out.task = meta.value("task", "");
      out.operator_id = meta.value("operator", "");
      continue;
    }
    try {
      TrajectoryFrame frame;
      if (!doc.contains("t") || !doc["t"].is_number()) throw fail("missing numeric 't'");
      frame.t = doc["t"].get<double>();
      if (!doc.contains("features")) throw fail("missing 'features'");
      frame.features = features_from_json(doc["features"]);
      if (doc.contains("intent") && !doc["intent"].is_null()) frame.intent = intent_from_json(doc["intent"]);
      if (!out.frames.empty()) {
        const auto& prev = out.frames.back();
        if (!(frame.t > prev.t)) throw fail("timestamps must strictly increase");
        if (!(frame.features.layout() == prev.features.layout())) {
          throw fail("feature dimension " + std::to_string(frame.features.dim()) +
                     " differs from earlier frames (" + std::to_string(prev.features.dim()) + ")");
        }
      }
      out.frames.push_back(std::move(frame));
    } catch (const ParseError& e) {
      if (std::string(e.what()).rfind("line ", 0) == 0) throw;
      throw fail(e.what());
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  if (out.frames.empty()) throw InvalidArgument("trajectory has no frames");
  return out;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  return parse_trajectory(in);
}

SolveRequest frame_request(ControlMode mode, const FeatureVector& features,
                           const std::optional<IntentVector>& intent, const FrameContext& ctx) {
  SolveRequest req;
  req.mode = mode;
  req.human = features;
  req.intent = intent;
  req.robot_model = ctx.robot_model;
  req.human_model = ctx.human_model;
  req.bounds = ctx.bounds;
  req.weights_override = ctx.weights_override;
  req.seed = ctx.seed;
  req.weights_cache = ctx.weights_cache;
  return req;
}

ReplayReport replay(const Trajectory& trajectory, ControlMode mode, const FrameContext& ctx,
                    const ControllerConfig& config) {
  if (!ctx.robot_model) throw InvalidArgument("replay needs a robot model");
  ReplayReport report;
  report.mode = mode;
  const int pos_dims = ctx.robot_model->layout().position_dims();
  double wall = 0.0;
  for (const auto& frame : trajectory.frames) {
    auto sol = solve(frame_request(mode, frame.features, frame.intent, ctx), config);
    auto& s = report.summary;
    if (!report.solutions.empty()) {
      const auto& prev = report.solutions.back().robot.values();
      s.path_length += (sol.robot.values().head(pos_dims) - prev.head(pos_dims)).norm();
    }
    s.max_objective = report.solutions.empty() ? sol.objective : std::max(s.max_objective, sol.objective);
    s.mean_objective += sol.objective;
    wall += sol.meta.wall_time_s;
    report.timestamps.push_back(frame.t);
    report.solutions.push_back(std::move(sol));
  }
  auto& s = report.summary;
  s.frames = report.solutions.size();
  s.mean_objective /= static_cast<double>(s.frames);
  s.mean_solve_wall_time_s = wall / static_cast<double>(s.frames);
  const auto& last = report.solutions.back();
  s.final_task_match = last.p_r.argmax() == last.p_h.argmax();
  return report;
}

json replay_reports_to_json(const std::vector<ReplayReport>& reports, const TaskSet& tasks,
                            const Trajectory& trajectory, std::uint64_t seed, bool include_timing) {
  json out_reports = json::array();
  for (const auto& r : reports) {
    json frames = json::array();
    for (std::size_t i = 0; i < r.solutions.size(); ++i) {
      frames.push_back({{"t", r.timestamps[i]},
                        {"solution", solution_to_json(r.solutions[i], tasks, include_timing)}});
    }
    json summary = {{"frames", r.summary.frames},
                    {"path_length", r.summary.path_length},
                    {"mean_objective", r.summary.mean_objective},
                    {"max_objective", r.summary.max_objective},
                    {"final_task_match", r.summary.final_task_match}};
    if (include_timing) summary["mean_solve_wall_time_s"] = r.summary.mean_solve_wall_time_s;
    out_reports.push_back({{"mode", to_string(r.mode)}, {"summary", summary}, {"frames", frames}});
  }
  return {{"schema_version", kReplaySchemaVersion},
          {"seed", seed},
          {"trajectory", {{"task", trajectory.task}, {"operator", trajectory.operator_id},
                          {"frames", trajectory.frames.size()}}},
          {"reports", out_reports}};
}

}  // namespace telegrasp
