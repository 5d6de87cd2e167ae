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

#include "telegrasp/config.hpp"

#include <fstream>

#include "telegrasp/error.hpp"
#include "telegrasp/model_io.hpp"

namespace telegrasp {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Drops a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return s.substr(0, i);
    }
  }
  return s;
}

nlohmann::json parse_value(const std::string& text) {
  if (text.size() >= 2 && text.front() == '\'' && text.back() == '\'') {
    return text.substr(1, text.size() - 2);
  }
  // Numbers, booleans, double-quoted strings and simple arrays share JSON syntax.
  return nlohmann::json::parse(text);
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config out;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(strip_comment(raw));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError("config line " + std::to_string(line) + ": bad section header");
      section = trim(text.substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    if (key.empty()) throw ParseError("config line " + std::to_string(line) + ": empty key");
    try {
      out.values_[section.empty() ? key : section + "." + key] = parse_value(trim(text.substr(eq + 1)));
    } catch (const nlohmann::json::parse_error&) {
      throw ParseError("config line " + std::to_string(line) + ": cannot parse value for '" + key + "'");
    }
  }
  return out;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open config '" + path.string() + "'");
  return parse(in);
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const auto& v = values_.at(key);
  if (!v.is_number()) throw InvalidArgument("config key '" + key + "' must be a number");
  return v.get<double>();
}

int Config::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const auto& v = values_.at(key);
  if (!v.is_number_integer()) throw InvalidArgument("config key '" + key + "' must be an integer");
  return v.get<int>();
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = values_.at(key);
  if (!v.is_boolean()) throw InvalidArgument("config key '" + key + "' must be true or false");
  return v.get<bool>();
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const auto& v = values_.at(key);
  if (!v.is_string()) throw InvalidArgument("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

FitConfig fit_config_from(const Config& config) {
  FitConfig out;
  out.eps_cov = config.get_double("fit.eps_cov", out.eps_cov);
  out.rel_tol = config.get_double("fit.rel_tol", out.rel_tol);
  out.max_iters = config.get_int("fit.max_iters", out.max_iters);
  out.unwrap_orientation = config.get_bool("fit.unwrap_orientation", out.unwrap_orientation);
  return out;
}

ControllerConfig controller_config_from(const Config& config) {
  ControllerConfig out;
  out.weights.w_min = config.get_double("weights.w_min", out.weights.w_min);
  out.weights.w_max = config.get_double("weights.w_max", out.weights.w_max);
  const auto source = config.get_string("weights.source", "per_task");
  if (source == "per_task") {
    out.weights.source = WeightSource::kPerTask;
  } else if (source == "pooled") {
    out.weights.source = WeightSource::kPooled;
  } else {
    throw InvalidArgument("weights.source must be \"per_task\" or \"pooled\"");
  }
  out.weights.fallback_pooled = config.get_bool("weights.fallback_pooled", out.weights.fallback_pooled);
  out.weights.normalize_lambda = config.get_bool("weights.normalize_lambda", out.weights.normalize_lambda);
  if (config.has("weights.alignment")) {
    out.alignment = AlignmentTable::from_json(read_json_file(config.get_string("weights.alignment", "")));
  }
  out.minimizer.grad_tol = config.get_double("solver.grad_tol", out.minimizer.grad_tol);
  out.minimizer.max_iters = config.get_int("solver.max_iters", out.minimizer.max_iters);
  out.minimizer.memory = config.get_int("solver.memory", out.minimizer.memory);
  return out;
}

}  // namespace telegrasp
