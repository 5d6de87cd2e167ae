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

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "telegrasp/controllers.hpp"
#include "telegrasp/json_io.hpp"

namespace telegrasp {

struct ServiceOptions {
  std::string address = "127.0.0.1";
  /// 0 picks a free port.
  unsigned short port = 8080;
  std::filesystem::path models_dir;
  std::optional<std::filesystem::path> bounds_path;
  /// Registry id of the model used for intent estimation and weights.
  std::string human_model_id = "human";
  /// Solves per second per session; 0 disables the budget and coalescing.
  double rate_limit = 30.0;
  /// Solutions kept per session.
  std::size_t history_size = 32;
  int threads = 2;
  ControllerConfig controller;
};

/// Immutable snapshot of everything loaded from disk. Reload builds a new
/// one; sessions and requests keep whichever snapshot they started with.
struct Registry {
  std::map<std::string, std::shared_ptr<const GraspModel>> models;
  std::string human_model_id;  // empty when no such model was loaded
  BoundsCatalog bounds;
  std::shared_ptr<WeightsCache> weights_cache = std::make_shared<WeightsCache>();

  std::shared_ptr<const GraspModel> human_model() const;
  /// nullptr when unknown.
  std::shared_ptr<const GraspModel> find(const std::string& id) const;
};

/// Loads every *.json under `models_dir` (id = file stem) plus the bounds
/// catalog. Throws on the first unreadable file.
std::shared_ptr<const Registry> load_registry(const std::filesystem::path& models_dir,
                                              const std::optional<std::filesystem::path>& bounds_path,
                                              const std::string& human_model_id);

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent request handling shared by every connection.
class ServiceCore {
 public:
  explicit ServiceCore(ServiceOptions options);
  ServiceCore(ServiceOptions options, std::shared_ptr<const Registry> registry);

  std::shared_ptr<const Registry> registry() const;
  /// Rebuilds the registry from disk and swaps it in whole. On failure the
  /// old registry stays active and the error propagates.
  void reload();

  HttpReply handle_http(const std::string& method, const std::string& target,
                        const std::string& body) const;

  /// Body of POST /solve turned into a request against `registry`. Throws
  /// RequestError (400) or NotFound (404, unknown model).
  SolveRequest parse_solve_request(const nlohmann::json& body, const Registry& registry) const;

  const ServiceOptions& options() const { return options_; }
  const ControllerConfig& controller() const { return options_.controller; }

  /// Resolves a bounds reference: an id, an inline object, or null for the
  /// catalog default.
  WorkspaceBounds resolve_bounds(const nlohmann::json& ref, const Registry& registry) const;

 private:
  HttpReply get_models() const;
  HttpReply get_bounds() const;
  HttpReply post_solve(const std::string& body) const;
  HttpReply post_intent(const std::string& body) const;
  HttpReply post_reload();

  ServiceOptions options_;
  mutable std::mutex registry_mutex_;
  std::shared_ptr<const Registry> registry_;
};

/// Field-level validation failure of a request body.
struct FieldError {
  std::string field;
  std::string message;
};

class RequestError : public std::runtime_error {
 public:
  explicit RequestError(std::vector<FieldError> fields);
  RequestError(std::string field, std::string message);
  const std::vector<FieldError>& fields() const { return fields_; }
  nlohmann::json to_json() const;

 private:
  std::vector<FieldError> fields_;
};

/// Wire form of a solution pushed over a session.
nlohmann::json session_solution_message(std::int64_t seq, const Solution& solution,
                                        std::size_t coalesced);

/// State and message handling of one live session, without any transport.
///
/// Inbound: {"type": "hello", "model", "mode", "bounds"?},
/// {"type": "hand_update", "seq", "features", "intent"?},
/// {"type": "set_mode", "mode"}. Every hand_update yields exactly one
/// reply (solution or error); hello and set_mode reply only on error.
class SessionLogic {
 public:
  SessionLogic(const ServiceCore& core, std::string id);

  std::optional<nlohmann::json> handle(const std::string& text, std::size_t coalesced = 0);

  /// True when `text` is a well-formed hand_update.
  static bool is_hand_update(const std::string& text);

  const std::string& id() const { return id_; }
  ControlMode mode() const { return mode_; }
  bool ready() const { return robot_ != nullptr; }
  const std::deque<nlohmann::json>& history() const { return history_; }

 private:
  nlohmann::json on_hand_update(const nlohmann::json& msg, std::size_t coalesced);

  const ServiceCore& core_;
  std::string id_;
  std::shared_ptr<const Registry> registry_;
  std::string model_id_;
  std::shared_ptr<const GraspModel> robot_;
  ControlMode mode_ = ControlMode::kMimic;
  WorkspaceBounds bounds_;
  std::deque<nlohmann::json> history_;
};

/// Minimum spacing between solves for a per-session rate budget.
class RateBudget {
 public:
  using Clock = std::chrono::steady_clock;
  explicit RateBudget(double per_second);
  bool unlimited() const { return interval_ == Clock::duration::zero(); }
  bool available(Clock::time_point now) const;
  Clock::time_point next_slot() const { return last_ + interval_; }
  void consume(Clock::time_point now);

 private:
  Clock::duration interval_;
  Clock::time_point last_;
  bool used_ = false;
};

}  // namespace telegrasp
