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

#include "telegrasp/service.hpp"

#include <algorithm>
#include <cmath>

#include "telegrasp/error.hpp"
#include "telegrasp/model_io.hpp"
#include "telegrasp/replay.hpp"

namespace telegrasp {

using nlohmann::json;

namespace {

json error_body(const std::string& message, const std::string& kind) {
  return {{"error", message}, {"kind", kind}};
}

HttpReply error_reply(int status, const std::string& message, const std::string& kind) {
  return {status, error_body(message, kind)};
}

json model_entry(const std::string& id, const GraspModel& m, bool is_human) {
  json combos = json::array();
  for (auto mask : m.combinations()) combos.push_back(combination_to_json(mask, m.tasks()));
  return {{"id", id},
          {"embodiment", m.embodiment()},
          {"d", m.dim()},
          {"tasks", m.tasks().names()},
          {"layout", m.layout().is_grasp() ? "grasp" : "generic"},
          {"combinations", combos},
          {"human", is_human}};
}

std::string path_of(const std::string& target) { return target.substr(0, target.find('?')); }

}  // namespace

std::shared_ptr<const GraspModel> Registry::human_model() const {
  return human_model_id.empty() ? nullptr : find(human_model_id);
}

std::shared_ptr<const GraspModel> Registry::find(const std::string& id) const {
  auto it = models.find(id);
  return it == models.end() ? nullptr : it->second;
}

std::shared_ptr<const Registry> load_registry(const std::filesystem::path& models_dir,
                                              const std::optional<std::filesystem::path>& bounds_path,
                                              const std::string& human_model_id) {
  auto reg = std::make_shared<Registry>();
  if (!models_dir.empty()) {
    if (!std::filesystem::is_directory(models_dir)) {
      throw NotFound("models directory '" + models_dir.string() + "' does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(models_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      reg->models.emplace(f.stem().string(), std::make_shared<const GraspModel>(load_model(f)));
    }
  }
  if (reg->models.contains(human_model_id)) reg->human_model_id = human_model_id;
  if (bounds_path) reg->bounds = load_bounds_catalog(*bounds_path);
  return reg;
}

RequestError::RequestError(std::vector<FieldError> fields)
    : std::runtime_error("invalid request"), fields_(std::move(fields)) {}

RequestError::RequestError(std::string field, std::string message)
    : RequestError(std::vector<FieldError>{{std::move(field), std::move(message)}}) {}

json RequestError::to_json() const {
  json fields = json::array();
  for (const auto& f : fields_) fields.push_back({{"field", f.field}, {"message", f.message}});
  return {{"error", "invalid request"}, {"kind", "invalid_request"}, {"fields", fields}};
}

ServiceCore::ServiceCore(ServiceOptions options)
    : options_(std::move(options)),
      registry_(load_registry(options_.models_dir, options_.bounds_path, options_.human_model_id)) {}

ServiceCore::ServiceCore(ServiceOptions options, std::shared_ptr<const Registry> registry)
    : options_(std::move(options)), registry_(std::move(registry)) {}

std::shared_ptr<const Registry> ServiceCore::registry() const {
  std::lock_guard lock(registry_mutex_);
  return registry_;
}

void ServiceCore::reload() {
  auto fresh = load_registry(options_.models_dir, options_.bounds_path, options_.human_model_id);
  std::lock_guard lock(registry_mutex_);
  registry_ = std::move(fresh);
}

WorkspaceBounds ServiceCore::resolve_bounds(const json& ref, const Registry& registry) const {
  if (ref.is_null()) {
    if (registry.bounds.empty()) throw InvalidArgument("no bounds given and no bounds catalog loaded");
    return default_bounds(registry.bounds);
  }
  if (ref.is_string()) {
    auto it = registry.bounds.find(ref.get<std::string>());
    if (it == registry.bounds.end()) throw NotFound("unknown bounds id '" + ref.get<std::string>() + "'");
    return it->second;
  }
  return bounds_from_json(ref);
}

SolveRequest ServiceCore::parse_solve_request(const json& body, const Registry& registry) const {
  if (!body.is_object()) throw RequestError("", "body must be a JSON object");
  std::vector<FieldError> errors;
  SolveRequest req;

  std::string model_id;
  if (!body.contains("model") || !body["model"].is_string()) {
    errors.push_back({"model", "required string"});
  } else {
    model_id = body["model"].get<std::string>();
  }
  if (!body.contains("mode") || !body["mode"].is_string()) {
    errors.push_back({"mode", "required string: mimic, intent_only or knitro"});
  } else {
    try {
      req.mode = parse_mode(body["mode"].get<std::string>());
    } catch (const Error& e) {
      errors.push_back({"mode", e.what()});
    }
  }
  if (!body.contains("features")) {
    errors.push_back({"features", "required"});
  } else {
    try {
      req.human = features_from_json(body["features"]);
    } catch (const Error& e) {
      errors.push_back({"features", e.what()});
    }
  }
  if (body.contains("intent") && !body["intent"].is_null()) {
    try {
      req.intent = intent_from_json(body["intent"]);
    } catch (const Error& e) {
      errors.push_back({"intent", e.what()});
    }
  }
  if (body.contains("seed")) {
    if (!body["seed"].is_number_unsigned()) {
      errors.push_back({"seed", "must be a non-negative integer"});
    } else {
      req.seed = body["seed"].get<std::uint64_t>();
    }
  }
  try {
    req.bounds = resolve_bounds(body.value("bounds", json(nullptr)), registry);
  } catch (const Error& e) {
    errors.push_back({"bounds", e.what()});
  }
  if (!errors.empty()) throw RequestError(std::move(errors));

  req.robot_model = registry.find(model_id);
  if (!req.robot_model) throw NotFound("unknown model id '" + model_id + "'");
  req.human_model = registry.human_model();
  req.weights_cache = registry.weights_cache.get();
  if (body.contains("weights_override") && !body["weights_override"].is_null()) {
    try {
      req.weights_override = weights_override_from_json(body["weights_override"], req.robot_model->dim());
    } catch (const Error& e) {
      throw RequestError("weights_override", e.what());
    }
  }
  return req;
}

HttpReply ServiceCore::handle_http(const std::string& method, const std::string& target,
                                   const std::string& body) const {
  const auto path = path_of(target);
  try {
    if (path == "/models") return method == "GET" ? get_models() : error_reply(405, "use GET", "method");
    if (path == "/bounds") return method == "GET" ? get_bounds() : error_reply(405, "use GET", "method");
    if (path == "/solve") return method == "POST" ? post_solve(body) : error_reply(405, "use POST", "method");
    if (path == "/intent") return method == "POST" ? post_intent(body) : error_reply(405, "use POST", "method");
    if (path == "/reload") {
      return method == "POST" ? const_cast<ServiceCore*>(this)->post_reload()
                              : error_reply(405, "use POST", "method");
    }
    return error_reply(404, "no route for " + path, "not_found");
  } catch (const std::exception& e) {
    return error_reply(500, e.what(), "internal");
  }
}

HttpReply ServiceCore::get_models() const {
  const auto reg = registry();
  json out = json::array();
  for (const auto& [id, m] : reg->models) out.push_back(model_entry(id, *m, id == reg->human_model_id));
  return {200, out};
}

HttpReply ServiceCore::get_bounds() const {
  const auto reg = registry();
  json out = json::object();
  for (const auto& [id, b] : reg->bounds) out[id] = bounds_to_json(b);
  return {200, out};
}

HttpReply ServiceCore::post_solve(const std::string& body) const {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    return {400, RequestError("", std::string("malformed JSON: ") + e.what()).to_json()};
  }
  const auto reg = registry();
  try {
    const auto req = parse_solve_request(doc, *reg);
    const auto sol = solve(req, options_.controller);
    auto out = solution_to_json(sol, req.robot_model->tasks(), true);
    out["model"] = doc["model"];
    return {200, out};
  } catch (const RequestError& e) {
    return {400, e.to_json()};
  } catch (const NotFound& e) {
    return error_reply(404, e.what(), e.kind());
  } catch (const Error& e) {
    return error_reply(400, e.what(), e.kind());
  }
}

HttpReply ServiceCore::post_intent(const std::string& body) const {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    return {400, RequestError("", std::string("malformed JSON: ") + e.what()).to_json()};
  }
  const auto reg = registry();
  try {
    if (!doc.is_object() || !doc.contains("features")) throw RequestError("features", "required");
    FeatureVector features;
    try {
      features = features_from_json(doc["features"]);
    } catch (const Error& e) {
      throw RequestError("features", e.what());
    }
    const std::string id = doc.value("model", reg->human_model_id);
    if (id.empty()) return error_reply(404, "no human model loaded", "not_found");
    const auto model = reg->find(id);
    if (!model) return error_reply(404, "unknown model id '" + id + "'", "not_found");
    if (features.dim() != model->dim()) {
      throw DimensionMismatch("frame has " + std::to_string(features.dim()) + " features, model '" + id +
                              "' has " + std::to_string(model->dim()));
    }
    const auto intent = estimate_intent(*model, features.values());
    const auto target = powerset_target(intent, model->tasks());
    json labels = json::array();
    for (TaskMask b = 0; b < target.size(); ++b) labels.push_back(model->tasks().label(b));
    return {200, {{"model", id}, {"tasks", model->tasks().names()}, {"intent", intent.p},
                  {"target", target.q}, {"labels", labels}}};
  } catch (const RequestError& e) {
    return {400, e.to_json()};
  } catch (const Error& e) {
    return error_reply(400, e.what(), e.kind());
  }
}

HttpReply ServiceCore::post_reload() {
  try {
    reload();
  } catch (const Error& e) {
    return error_reply(500, std::string("reload failed, previous registry kept: ") + e.what(), e.kind());
  }
  return {200, {{"models", registry()->models.size()}}};
}

json session_solution_message(std::int64_t seq, const Solution& s, std::size_t coalesced) {
  json msg = {{"type", "solution"},
              {"seq", seq},
              {"mode", to_string(s.mode)},
              {"robot_features", features_to_json(s.robot)},
              {"p_h", s.p_h.q},
              {"p_r", s.p_r.q},
              {"lambda", nullptr},
              {"gamma", nullptr},
              {"clamped_lambda", nullptr},
              {"clamped_gamma", nullptr},
              {"intent_term", s.intent_term},
              {"mimic_term", s.mimic_term},
              {"mimic_deviation", s.mimic_deviation},
              {"objective", s.objective},
              {"warnings", s.meta.warnings},
              {"coalesced", coalesced}};
  if (s.weights) {
    msg["lambda"] = s.weights->lambda;
    msg["gamma"] = s.weights->gamma;
    msg["clamped_lambda"] = s.weights->clamped_lambda;
    msg["clamped_gamma"] = s.weights->clamped_gamma;
  }
  return msg;
}

SessionLogic::SessionLogic(const ServiceCore& core, std::string id) : core_(core), id_(std::move(id)) {}

bool SessionLogic::is_hand_update(const std::string& text) {
  const auto doc = json::parse(text, nullptr, false);
  return doc.is_object() && doc.value("type", "") == "hand_update";
}

std::optional<json> SessionLogic::handle(const std::string& text, std::size_t coalesced) {
  auto error = [](const std::string& message, const json& seq = nullptr) {
    json e = {{"type", "error"}, {"message", message}};
    if (!seq.is_null()) e["seq"] = seq;
    return e;
  };
  const auto msg = json::parse(text, nullptr, false);
  if (msg.is_discarded()) return error("malformed JSON");
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return error("message needs a string 'type'");
  }
  const auto type = msg["type"].get<std::string>();
  try {
    if (type == "hello") {
      const auto reg = core_.registry();
      if (!msg.contains("model") || !msg["model"].is_string()) return error("hello needs a 'model' id");
      auto robot = reg->find(msg["model"].get<std::string>());
      if (!robot) return error("unknown model id '" + msg["model"].get<std::string>() + "'");
      const auto mode = parse_mode(msg.value("mode", "mimic"));
      auto bounds = core_.resolve_bounds(msg.value("bounds", json(nullptr)), *reg);
      bounds.validate(robot->layout());
      registry_ = reg;
      model_id_ = msg["model"].get<std::string>();
      robot_ = std::move(robot);
      mode_ = mode;
      bounds_ = std::move(bounds);
      history_.clear();
      return std::nullopt;
    }
    if (type == "set_mode") {
      if (!msg.contains("mode") || !msg["mode"].is_string()) return error("set_mode needs a 'mode'");
      mode_ = parse_mode(msg["mode"].get<std::string>());
      return std::nullopt;
    }
    if (type == "hand_update") return on_hand_update(msg, coalesced);
  } catch (const std::exception& e) {
    return error(e.what(), msg.value("seq", json(nullptr)));
  }
  return error("unknown message type '" + type + "'");
}

json SessionLogic::on_hand_update(const json& msg, std::size_t coalesced) {
  const json seq = msg.value("seq", json(nullptr));
  auto error = [&seq](const std::string& message) {
    json e = {{"type", "error"}, {"message", message}};
    if (!seq.is_null()) e["seq"] = seq;
    return e;
  };
  if (!seq.is_number_integer()) return error("hand_update needs an integer 'seq'");
  if (!ready()) return error("send hello before hand_update");
  if (!msg.contains("features")) return error("hand_update needs 'features'");
  std::optional<IntentVector> intent;
  if (msg.contains("intent") && !msg["intent"].is_null()) intent = intent_from_json(msg["intent"]);
  FrameContext ctx{robot_, registry_->human_model(), bounds_, std::nullopt, 0,
                   registry_->weights_cache.get()};
  const auto sol = solve(frame_request(mode_, features_from_json(msg["features"]), intent, ctx),
                         core_.controller());
  auto out = session_solution_message(seq.get<std::int64_t>(), sol, coalesced);
  history_.push_back(out);
  while (history_.size() > core_.options().history_size) history_.pop_front();
  return out;
}

RateBudget::RateBudget(double per_second)
    : interval_(per_second > 0.0 ? std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(1.0 / per_second))
                                 : Clock::duration::zero()) {}

bool RateBudget::available(Clock::time_point now) const {
  return unlimited() || !used_ || now >= last_ + interval_;
}

void RateBudget::consume(Clock::time_point now) {
  last_ = now;
  used_ = true;
}

}  // namespace telegrasp
