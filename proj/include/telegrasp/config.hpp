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
#include <string>

#include "json.hpp"
#include "telegrasp/controllers.hpp"
#include "telegrasp/em.hpp"

namespace telegrasp {

/// Flat settings read from a TOML-style file:
///
///   # comment
///   [weights]
///   w_min = 1e-3
///   source = "pooled"
///
/// Keys are addressed as "section.key". Values are numbers, booleans,
/// quoted strings, or single-line arrays of those.
class Config {
 public:
  Config() = default;
  static Config parse(std::istream& in);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  void set(const std::string& key, nlohmann::json value) { values_[key] = std::move(value); }

 private:
  nlohmann::json values_ = nlohmann::json::object();
};

/// fit.eps_cov, fit.rel_tol, fit.max_iters, fit.unwrap_orientation
FitConfig fit_config_from(const Config& config);
/// weights.{w_min, w_max, source, fallback_pooled, normalize_lambda,
/// alignment}, solver.{grad_tol, max_iters, memory}
ControllerConfig controller_config_from(const Config& config);

}  // namespace telegrasp
