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

#include "telegrasp/json_io.hpp"

#include "telegrasp/error.hpp"
#include "telegrasp/model_io.hpp"

namespace telegrasp {

using nlohmann::json;

namespace {

Eigen::VectorXd numbers(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + "[" + std::to_string(i) + "] is not a number");
    out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

WorkspaceBounds bounds_from_json(const json& j) {
  if (!j.is_object() || !j.contains("lower") || !j.contains("upper")) {
    throw ParseError("bounds need 'lower' and 'upper' arrays");
  }
  WorkspaceBounds b{numbers(j.at("lower"), "bounds.lower"), numbers(j.at("upper"), "bounds.upper")};
  if (b.lower.size() != b.upper.size()) throw ParseError("bounds.lower and bounds.upper differ in length");
  return b;
}

json bounds_to_json(const WorkspaceBounds& b) {
  return {{"lower", to_std(b.lower)}, {"upper", to_std(b.upper)}};
}

BoundsCatalog bounds_catalog_from_json(const json& j) {
  BoundsCatalog out;
  if (j.is_object() && j.contains("bounds")) {
    for (const auto& [id, b] : j.at("bounds").items()) out.emplace(id, bounds_from_json(b));
  } else {
    out.emplace("default", bounds_from_json(j));
  }
  if (out.empty()) throw ParseError("bounds file defines no bounds");
  return out;
}

BoundsCatalog load_bounds_catalog(const std::filesystem::path& path) {
  try {
    return bounds_catalog_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

const WorkspaceBounds& default_bounds(const BoundsCatalog& catalog) {
  if (catalog.size() == 1) return catalog.begin()->second;
  auto it = catalog.find("default");
  if (it == catalog.end()) throw InvalidArgument("several bounds defined and none named 'default'");
  return it->second;
}

ArbitrationWeights weights_override_from_json(const json& j, int dim) {
  if (!j.is_object() || !j.contains("lambda") || !j.contains("gamma")) {
    throw ParseError("weights override needs 'lambda' and 'gamma'");
  }
  ArbitrationWeights w;
  const auto& lambda = j.at("lambda");
  if (lambda.is_number()) {
    w.lambda.assign(static_cast<std::size_t>(dim), lambda.get<double>());
  } else {
    w.lambda = to_std(numbers(lambda, "lambda"));
    if (static_cast<int>(w.lambda.size()) != dim) {
      throw DimensionMismatch("weights override has " + std::to_string(w.lambda.size()) +
                              " lambdas, model has " + std::to_string(dim) + " features");
    }
  }
  if (!j.at("gamma").is_number()) throw ParseError("gamma must be a number");
  w.gamma = j.at("gamma").get<double>();
  w.source = "override";
  return w;
}

json weights_to_json(const ArbitrationWeights& w) {
  return {{"lambda", w.lambda},
          {"gamma", w.gamma},
          {"clamped_lambda", w.clamped_lambda},
          {"clamped_gamma", w.clamped_gamma},
          {"source", w.source}};
}

json solution_to_json(const Solution& s, const TaskSet& tasks, bool include_timing) {
  json meta = {{"iterations", s.meta.iterations},
               {"starts_tried", s.meta.starts_tried},
               {"converged", s.meta.converged},
               {"dropped_intent_constant", s.meta.dropped_intent_constant},
               {"warnings", s.meta.warnings},
               {"seed", s.meta.seed},
               {"weight_combination", s.meta.weight_combination
                                          ? combination_to_json(*s.meta.weight_combination, tasks)
                                          : json(nullptr)}};
  if (include_timing) meta["wall_time_s"] = s.meta.wall_time_s;
  return {{"schema_version", kSolutionSchemaVersion},
          {"mode", to_string(s.mode)},
          {"robot", features_to_json(s.robot)},
          {"objective", s.objective},
          {"intent_term", s.intent_term},
          {"mimic_term", s.mimic_term},
          {"mimic_deviation", s.mimic_deviation},
          {"p_h", s.p_h.q},
          {"p_r", s.p_r.q},
          {"weights", s.weights ? weights_to_json(*s.weights) : json(nullptr)},
          {"solver_meta", meta}};
}

IntentVector intent_from_json(const json& j) {
  IntentVector out{to_std(numbers(j, "intent"))};
  out.validate(out.p.size());
  return out;
}

}  // namespace telegrasp
