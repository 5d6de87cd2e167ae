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

#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "telegrasp/config.hpp"
#include "telegrasp/divergence.hpp"
#include "telegrasp/em.hpp"
#include "telegrasp/error.hpp"
#include "telegrasp/json_io.hpp"
#include "telegrasp/model_io.hpp"
#include "telegrasp/replay.hpp"
#include "telegrasp/server.hpp"
#include "telegrasp/service.hpp"

namespace telegrasp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kModes = {"mimic", "intent_only", "knitro"};

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;

  // fit
  std::string dataset;
  std::string embodiment;
  std::vector<std::string> tasks;

  // kl, solve, replay
  std::vector<std::string> models;
  std::string alignment;
  std::vector<std::string> modes;
  std::string bounds;
  std::string bounds_id;
  std::string weights_override;
  std::string human_model;
  std::string frame;
  std::vector<double> intent;
  std::string trajectory;
  bool timing = false;

  // serve
  std::string address = "127.0.0.1";
  int port = 8080;
  std::string models_dir;
  double rate_limit = 30.0;
  std::string human_model_id = "human";
  int threads = 2;
};

void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty()) {
    out << text << "\n";
  } else {
    write_text_file(path, text + "\n");
  }
}

Config load_config(const Options& o) { return o.config_path.empty() ? Config{} : Config::load(o.config_path); }

std::shared_ptr<const GraspModel> model_at(const std::string& path) {
  return std::make_shared<const GraspModel>(load_model(path));
}

// Box used when no bounds file is given: unbounded except apertures.
WorkspaceBounds open_bounds(const FeatureLayout& layout) {
  const double inf = std::numeric_limits<double>::infinity();
  WorkspaceBounds b{Eigen::VectorXd::Constant(layout.dim(), -inf), Eigen::VectorXd::Constant(layout.dim(), inf)};
  if (layout.is_grasp()) {
    b.lower.tail(layout.aperture_count()).setZero();
    b.upper.tail(layout.aperture_count()).setOnes();
  }
  return b;
}

WorkspaceBounds bounds_for(const Options& o, const FeatureLayout& layout) {
  if (o.bounds.empty()) return open_bounds(layout);
  const auto catalog = load_bounds_catalog(o.bounds);
  if (o.bounds_id.empty()) return default_bounds(catalog);
  const auto it = catalog.find(o.bounds_id);
  if (it == catalog.end()) throw NotFound("bounds id '" + o.bounds_id + "' not in " + o.bounds);
  return it->second;
}

std::optional<ArbitrationWeights> override_for(const Options& o, int dim) {
  if (o.weights_override.empty()) return std::nullopt;
  return weights_override_from_json(read_json_file(o.weights_override), dim);
}

FrameContext context_for(const Options& o, std::shared_ptr<const GraspModel> robot) {
  FrameContext ctx;
  ctx.bounds = bounds_for(o, robot->layout());
  ctx.weights_override = override_for(o, robot->dim());
  if (!o.human_model.empty()) ctx.human_model = model_at(o.human_model);
  ctx.seed = o.seed;
  ctx.robot_model = std::move(robot);
  return ctx;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const auto config = load_config(o);
  std::optional<TaskSet> tasks;
  if (!o.tasks.empty()) tasks = TaskSet(o.tasks);
  auto data = load_dataset(o.dataset, tasks);
  if (!o.embodiment.empty()) {
    std::erase_if(data.demonstrations, [&](const Demonstration& d) { return d.embodiment != o.embodiment; });
    if (data.demonstrations.empty()) throw InvalidArgument("no demonstrations for embodiment '" + o.embodiment + "'");
  }
  const auto model = fit_em(data.demonstrations, data.tasks, data.layout, fit_config_from(config));
  save_model(model, o.out);
  const auto& m = model.fit_meta();
  json priors = json::object();
  for (const auto& c : model.classes()) priors[model.tasks().label(c.combination())] = c.prior();
  out << json{{"model", o.out},
              {"embodiment", model.embodiment()},
              {"classes", model.classes().size()},
              {"priors", priors},
              {"iterations", m.iterations},
              {"converged", m.converged},
              {"final_log_likelihood", m.final_log_likelihood},
              {"label_agreement", m.label_agreement},
              {"seed", o.seed}}
             .dump()
      << "\n";
  return 0;
}

int cmd_kl(const Options& o, std::ostream& out) {
  if (o.models.size() < 2) throw InvalidArgument("kl needs at least two --model files");
  std::vector<std::shared_ptr<const GraspModel>> owned;
  std::vector<const GraspModel*> models;
  std::vector<std::string> ids;
  for (const auto& path : o.models) {
    owned.push_back(model_at(path));
    models.push_back(owned.back().get());
    ids.push_back(owned.back()->embodiment());
  }
  AlignmentTable alignment;
  if (!o.alignment.empty()) {
    alignment = AlignmentTable::from_json(read_json_file(o.alignment));
  } else {
    alignment = controller_config_from(load_config(o)).alignment;
  }
  std::optional<TaskMask> combination;
  std::string label = "pooled";
  if (!o.tasks.empty()) {
    combination = models.front()->tasks().mask_of(o.tasks);
    label = models.front()->tasks().label(*combination);
  }
  const auto table = kl_table(models, combination, alignment);
  const auto doc = kl_table_json(ids, table, label);
  if (o.out.empty()) {
    out << doc.dump() << "\n";
  } else {
    write_text_file(o.out + ".csv", kl_table_csv(ids, table));
    write_text_file(o.out + ".json", doc.dump(2) + "\n");
  }
  return 0;
}

FeatureVector parse_frame(const std::string& arg, std::optional<IntentVector>& intent) {
  json doc;
  if (fs::is_regular_file(arg)) {
    doc = read_json_file(arg);
  } else {
    doc = json::parse(arg, nullptr, false);
    if (doc.is_discarded()) throw ParseError("--frame is neither a file nor valid JSON");
  }
  if (doc.is_object() && doc.contains("features")) {
    if (doc.contains("intent") && !doc["intent"].is_null()) intent = intent_from_json(doc["intent"]);
    return features_from_json(doc["features"]);
  }
  return features_from_json(doc);
}

int cmd_solve(const Options& o, std::ostream& out) {
  if (o.models.size() != 1) throw InvalidArgument("solve takes exactly one --model");
  const auto controller = controller_config_from(load_config(o));
  std::optional<IntentVector> intent;
  const auto features = parse_frame(o.frame, intent);
  if (!o.intent.empty()) intent = IntentVector{o.intent};
  const auto ctx = context_for(o, model_at(o.models.front()));
  const auto mode = parse_mode(o.modes.front());
  const auto sol = solve(frame_request(mode, features, intent, ctx), controller);
  emit(out, o.out, solution_to_json(sol, ctx.robot_model->tasks(), true).dump());
  return 0;
}

int cmd_replay(const Options& o, std::ostream& out) {
  if (o.models.size() != 1) throw InvalidArgument("replay takes exactly one --model");
  const auto controller = controller_config_from(load_config(o));
  const auto trajectory = load_trajectory(o.trajectory);
  const auto ctx = context_for(o, model_at(o.models.front()));
  WeightsCache cache;
  auto cached = ctx;
  cached.weights_cache = &cache;
  std::vector<ReplayReport> reports;
  for (const auto& m : o.modes.empty() ? kModes : o.modes) {
    reports.push_back(replay(trajectory, parse_mode(m), cached, controller));
  }
  emit(out, o.out, replay_reports_to_json(reports, ctx.robot_model->tasks(), trajectory, o.seed, o.timing).dump(2));
  return 0;
}

int cmd_serve(Options o, const CLI::App& serve, std::ostream& out) {
  const auto config = load_config(o);
  // Flags win over the config file.
  if (!serve.count("--port")) o.port = config.get_int("service.port", o.port);
  if (!serve.count("--models-dir")) o.models_dir = config.get_string("service.models_dir", o.models_dir);
  if (!serve.count("--bounds")) o.bounds = config.get_string("service.bounds", o.bounds);
  if (!serve.count("--rate-limit")) o.rate_limit = config.get_double("service.rate_limit", o.rate_limit);
  if (!serve.count("--human-model-id")) o.human_model_id = config.get_string("service.human_model", o.human_model_id);
  if (!serve.count("--address")) o.address = config.get_string("service.address", o.address);
  if (o.port < 0 || o.port > 65535) throw InvalidArgument("port must be in [0, 65535]");

  ServiceOptions opts;
  opts.address = o.address;
  opts.port = static_cast<unsigned short>(o.port);
  opts.models_dir = o.models_dir;
  if (!o.bounds.empty()) opts.bounds_path = o.bounds;
  opts.human_model_id = o.human_model_id;
  opts.rate_limit = o.rate_limit;
  opts.threads = o.threads;
  opts.controller = controller_config_from(config);
  ServiceCore core(opts);
  Server server(core);
  const auto port = server.start();
  out << json{{"listening", port}, {"address", opts.address}, {"models", core.registry()->models.size()}}.dump()
      << std::endl;
  server.run_until_signal();
  return 0;
}

void error_line(std::ostream& err, const std::string& message, const std::string& kind) {
  err << json{{"error", message}, {"kind", kind}}.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shared-control grasp planning engine"};
  app.name("telegrasp");
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path, "Settings file (flags win)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Seed echoed in outputs");
    cmd->add_option("--out", o.out, "Output path");
  };
  auto add_solver = [&o](CLI::App* cmd) {
    cmd->add_option("--model", o.models, "Robot model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--bounds", o.bounds, "Bounds file")->check(CLI::ExistingFile);
    cmd->add_option("--bounds-id", o.bounds_id, "Entry of a bounds catalog");
    cmd->add_option("--weights-override", o.weights_override, "Fixed lambda/gamma file")->check(CLI::ExistingFile);
    cmd->add_option("--human-model", o.human_model, "Model for intent estimation and weights")
        ->check(CLI::ExistingFile);
  };

  auto* fit = app.add_subcommand("fit", "Fit a grasp model to a demonstration file");
  fit->add_option("dataset", o.dataset, "JSON-Lines demonstrations")->required()->check(CLI::ExistingFile);
  fit->add_option("--task", o.tasks, "Task names in order")->expected(1, -1);
  fit->add_option("--embodiment", o.embodiment, "Only use demonstrations of this embodiment");
  add_common(fit);
  fit->get_option("--out")->required();

  auto* kl = app.add_subcommand("kl", "Divergence table between embodiments");
  kl->add_option("--model", o.models, "Model file (two or more)")->required()->check(CLI::ExistingFile);
  kl->add_option("--task", o.tasks, "Task combination; pooled when omitted")->expected(1, -1);
  kl->add_option("--alignment", o.alignment, "Aperture correspondence file")->check(CLI::ExistingFile);
  add_common(kl);

  auto* solve_cmd = app.add_subcommand("solve", "Solve one frame");
  add_solver(solve_cmd);
  solve_cmd->add_option("--mode", o.modes, "Controller")->required()->expected(1)->check(CLI::IsMember(kModes));
  solve_cmd->add_option("--frame", o.frame, "Hand features: file or inline JSON")->required();
  solve_cmd->add_option("--intent", o.intent, "Per-task probabilities, comma separated")->delimiter(',');
  add_common(solve_cmd);

  auto* replay_cmd = app.add_subcommand("replay", "Run a recorded trajectory through the controllers");
  replay_cmd->add_option("trajectory", o.trajectory, "JSON-Lines frames")->required()->check(CLI::ExistingFile);
  add_solver(replay_cmd);
  replay_cmd->add_option("--mode", o.modes, "Controllers to run (default: all)")->check(CLI::IsMember(kModes));
  replay_cmd->add_flag("--timing", o.timing, "Include wall-clock fields");
  add_common(replay_cmd);

  auto* serve = app.add_subcommand("serve", "Run the HTTP and WebSocket service");
  serve->add_option("--address", o.address, "Listen address");
  serve->add_option("--port", o.port, "Listen port (0 picks one)");
  serve->add_option("--models-dir", o.models_dir, "Directory of *.json models");
  serve->add_option("--bounds", o.bounds, "Bounds catalog")->check(CLI::ExistingFile);
  serve->add_option("--rate-limit", o.rate_limit, "Solves per second per session (0 = unlimited)")
      ->check(CLI::NonNegativeNumber);
  serve->add_option("--human-model-id", o.human_model_id, "Registry id of the human model");
  serve->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  serve->add_option("--config", o.config_path, "Settings file (flags win)")->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_line(err, e.what(), "usage");
    return 2;
  }

  try {
    if (*fit) return cmd_fit(o, out);
    if (*kl) return cmd_kl(o, out);
    if (*solve_cmd) return cmd_solve(o, out);
    if (*replay_cmd) return cmd_replay(o, out);
    if (*serve) return cmd_serve(o, *serve, out);
  } catch (const Error& e) {
    error_line(err, e.what(), e.kind());
    return 1;
  } catch (const json::exception& e) {
    error_line(err, e.what(), "parse_error");
    return 1;
  } catch (const std::exception& e) {
    error_line(err, e.what(), "internal");
    return 1;
  }
  return 2;
}

}  // namespace telegrasp
