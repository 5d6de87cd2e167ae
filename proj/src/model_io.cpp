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

#include "telegrasp/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string_view>

#include "telegrasp/error.hpp"

namespace telegrasp {

using nlohmann::json;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + "[" + std::to_string(i) + "] is not a number");
    out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return out;
}

Eigen::Vector3d vec3_from_json(const json& j, const std::string& what) {
  auto v = vector_from_json(j, what);
  if (v.size() != 3) throw ParseError(what + " must have 3 entries");
  return v;
}

json layout_to_json(const FeatureLayout& layout) {
  if (layout.is_grasp()) return {{"kind", "grasp"}, {"apertures", layout.aperture_count()}};
  return {{"kind", "generic"}};
}

FeatureLayout layout_from_json(const json& j, int d) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "generic") return FeatureLayout::generic(d);
  if (kind == "grasp") {
    auto layout = FeatureLayout::grasp(j.at("apertures").get<int>());
    if (layout.dim() != d) throw CorruptModel("grasp layout does not match d");
    return layout;
  }
  throw ParseError("unknown layout kind '" + kind + "'");
}

json fit_meta_to_json(const FitMeta& m) {
  return {{"iterations", m.iterations},
          {"final_log_likelihood", m.final_log_likelihood},
          {"eps_cov", m.eps_cov},
          {"converged", m.converged},
          {"log_likelihood_trace", m.log_likelihood_trace},
          {"responsibility_mass", m.responsibility_mass},
          {"label_agreement", m.label_agreement}};
}

FitMeta fit_meta_from_json(const json& j) {
  FitMeta m;
  m.iterations = j.at("iterations").get<int>();
  m.final_log_likelihood = j.at("final_log_likelihood").get<double>();
  m.eps_cov = j.at("eps_cov").get<double>();
  m.converged = j.at("converged").get<bool>();
  m.log_likelihood_trace = j.value("log_likelihood_trace", std::vector<double>{});
  m.responsibility_mass = j.value("responsibility_mass", std::vector<double>{});
  m.label_agreement = j.value("label_agreement", 1.0);
  return m;
}

}  // namespace

TaskMask combination_from_json(const json& j, const TaskSet& tasks) {
  if (!j.is_array()) throw ParseError("combination must be an array of task names");
  std::vector<std::string> names;
  for (const auto& e : j) {
    if (!e.is_string()) throw ParseError("combination entries must be strings");
    names.push_back(e.get<std::string>());
  }
  return tasks.mask_of(names);
}

json combination_to_json(TaskMask mask, const TaskSet& tasks) {
  if (mask == 0) return json::array({"none"});
  return tasks.names_of(mask);
}

FeatureVector features_from_json(const json& j) {
  if (j.is_array()) {
    const auto v = vector_from_json(j, "features");
    return FeatureVector(v, FeatureLayout::generic(static_cast<int>(v.size())));
  }
  if (!j.is_object()) throw ParseError("features must be an object or an array");
  for (const char* key : {"position", "orientation", "apertures"}) {
    if (!j.contains(key)) throw ParseError(std::string("features missing '") + key + "'");
  }
  const auto apertures = vector_from_json(j.at("apertures"), "features.apertures");
  return FeatureVector::from_parts(vec3_from_json(j.at("position"), "features.position"),
                                   vec3_from_json(j.at("orientation"), "features.orientation"),
                                   to_std(apertures));
}

json features_to_json(const FeatureVector& f) {
  if (!f.layout().is_grasp()) return to_std(f.values());
  const Eigen::Vector3d p = f.position();
  const Eigen::Vector3d o = f.orientation();
  return {{"position", {p[0], p[1], p[2]}},
          {"orientation", {o[0], o[1], o[2]}},
          {"apertures", f.apertures()}};
}

json model_to_json(const GraspModel& model) {
  json classes = json::array();
  for (const auto& c : model.classes()) {
    json cov = json::array();
    for (Eigen::Index r = 0; r < c.covariance().rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(c.covariance().cols()));
      for (Eigen::Index col = 0; col < c.covariance().cols(); ++col) {
        row[static_cast<std::size_t>(col)] = c.covariance()(r, col);
      }
      cov.push_back(row);
    }
    classes.push_back({{"combination", combination_to_json(c.combination(), model.tasks())},
                       {"prior", c.prior()},
                       {"mean", to_std(c.mean())},
                       {"covariance", cov}});
  }
  return {{"schema_version", kModelSchemaVersion},
          {"embodiment", model.embodiment()},
          {"tasks", model.tasks().names()},
          {"d", model.dim()},
          {"layout", layout_to_json(model.layout())},
          {"classes", classes},
          {"fit_meta", fit_meta_to_json(model.fit_meta())}};
}

GraspModel model_from_json(const json& doc) {
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) throw SchemaVersionError(kModelSchemaVersion, version);
    TaskSet tasks(doc.at("tasks").get<std::vector<std::string>>());
    const int d = doc.at("d").get<int>();
    if (d <= 0) throw CorruptModel("model dimension must be positive");
    const auto layout = doc.contains("layout") ? layout_from_json(doc.at("layout"), d)
                                               : FeatureLayout::generic(d);
    std::vector<GaussianClass> classes;
    for (const auto& c : doc.at("classes")) {
      const auto mean = vector_from_json(c.at("mean"), "mean");
      const auto& rows = c.at("covariance");
      if (!rows.is_array()) throw CorruptModel("covariance must be a list of rows");
      Eigen::MatrixXd cov(static_cast<Eigen::Index>(rows.size()), mean.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto row = vector_from_json(rows[r], "covariance row");
        if (row.size() != mean.size()) throw CorruptModel("covariance row length mismatch");
        cov.row(static_cast<Eigen::Index>(r)) = row.transpose();
      }
      classes.emplace_back(combination_from_json(c.at("combination"), tasks),
                           c.at("prior").get<double>(), mean, cov);
    }
    const auto meta = doc.contains("fit_meta") ? fit_meta_from_json(doc.at("fit_meta")) : FitMeta{};
    return GraspModel(doc.at("embodiment").get<std::string>(), std::move(tasks), layout,
                      std::move(classes), meta);
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InvalidArgument("failed writing '" + path.string() + "'");
}

void save_model(const GraspModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model).dump(2) + "\n");
}

GraspModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_json_file(path));
  } catch (const CorruptModel& e) {
    throw CorruptModel(path.string() + ": " + e.what());
  }
}

Dataset parse_dataset(std::istream& in, const std::optional<TaskSet>& tasks) {
  struct Line {
    std::size_t number;
    json doc;
  };
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      lines.push_back({number, json::parse(text)});
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (lines.empty()) throw InvalidArgument("no demonstrations");

  auto fail = [](std::size_t line, const std::string& what) -> ParseError {
    return ParseError("line " + std::to_string(line) + ": " + what);
  };

  Dataset out;
  if (tasks) {
    out.tasks = *tasks;
  } else {
    std::vector<std::string> names;
    for (const auto& [line, doc] : lines) {
      if (!doc.is_object() || !doc.contains("combination") || !doc["combination"].is_array()) {
        throw fail(line, "missing 'combination' array");
      }
      for (const auto& name : doc["combination"]) {
        if (!name.is_string()) throw fail(line, "combination entries must be strings");
        const auto s = name.get<std::string>();
        if (s != "none" && std::find(names.begin(), names.end(), s) == names.end()) names.push_back(s);
      }
    }
    if (names.empty()) throw InvalidArgument("dataset names no tasks");
    out.tasks = TaskSet(std::move(names));
  }

  std::optional<std::size_t> layout_line;
  for (const auto& [line, doc] : lines) {
    try {
      if (!doc.is_object()) throw fail(line, "expected a JSON object");
      Demonstration demo;
      if (!doc.contains("embodiment") || !doc["embodiment"].is_string()) {
        throw fail(line, "missing 'embodiment' string");
      }
      demo.embodiment = doc["embodiment"].get<std::string>();
      if (!doc.contains("combination")) throw fail(line, "missing 'combination'");
      demo.combination = combination_from_json(doc["combination"], out.tasks);
      if (!doc.contains("features")) throw fail(line, "missing 'features'");
      const auto features = features_from_json(doc["features"]);
      if (!layout_line) {
        out.layout = features.layout();
        layout_line = line;
      } else if (!(features.layout() == out.layout)) {
        throw fail(line, "feature dimension " + std::to_string(features.dim()) +
                             " differs from " + std::to_string(out.layout.dim()) +
                             " established at line " + std::to_string(*layout_line));
      }
      demo.features = features.values();
      if (doc.contains("trial_id")) {
        const auto& t = doc["trial_id"];
        demo.trial_id = t.is_string() ? t.get<std::string>() : t.dump();
      }
      demo.weight = doc.value("weight", 1.0);
      if (!(demo.weight >= 0.0)) throw fail(line, "weight must be non-negative");
      out.demonstrations.push_back(std::move(demo));
    } catch (const ParseError& e) {
      if (std::string_view(e.what()).starts_with("line ")) throw;
      throw fail(line, e.what());
    } catch (const Error& e) {
      throw fail(line, e.what());
    } catch (const json::exception& e) {
      throw fail(line, e.what());
    }
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, const std::optional<TaskSet>& tasks) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  return parse_dataset(in, tasks);
}

}  // namespace telegrasp
