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

// Acceptance report: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "client.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "telegrasp/divergence.hpp"
#include "telegrasp/em.hpp"
#include "telegrasp/intent.hpp"
#include "telegrasp/server.hpp"
#include "telegrasp/service.hpp"
#include "world.hpp"

namespace telegrasp {
namespace {

using namespace testing;
using nlohmann::json;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome powerset_worked_example() {
  Outcome o;
  const auto q = powerset_target(IntentVector{{0.8, 0.3, 0.78}});
  double sum = 0.0;
  for (double v : q.q) sum += v;
  o.check(std::abs(q[0b001] - 0.1232) <= 1e-9, "use-only = " + std::to_string(q[0b001]));
  o.check(std::abs(q[0b111] - 0.1872) <= 1e-9, "all-three = " + std::to_string(q[0b111]));
  o.check(std::abs(sum - 1.0) <= 1e-12, "sum deviates by " + std::to_string(sum - 1.0));
  if (o.pass) o.detail << "use-only 0.1232, all-three 0.1872, sum-1 = " << sum - 1.0;
  return o;
}

Outcome posterior_two_class() {
  Outcome o;
  const auto m = two_class_1d(0.0, 2.0, 1.0);
  const auto mid = posterior(*m, Eigen::VectorXd::Constant(1, 1.0));
  const auto zero = posterior(*m, Eigen::VectorXd::Constant(1, 0.0));
  const double hand = 1.0 / (1.0 + std::exp(-2.0));
  o.check(std::abs(mid[0] - 0.5) <= 1e-12 && std::abs(mid[1] - 0.5) <= 1e-12, "midpoint not [0.5, 0.5]");
  o.check(std::abs(zero[0] - hand) <= 1e-6 && std::abs(zero[1] - (1.0 - hand)) <= 1e-6, "x=0 off hand value");
  o.check(std::abs(zero[0] - 0.8808) <= 5e-5 && std::abs(zero[1] - 0.1192) <= 5e-5, "x=0 off [0.8808, 0.1192]");
  if (o.pass) o.detail << "x=0 -> [" << zero[0] << ", " << zero[1] << "]";
  return o;
}

Outcome kl_formulas() {
  Outcome o;
  o.check(std::abs(kl_feature({0, 1}, {1, 1}) - 0.5) <= 1e-6, "mean shift");
  const double a = kl_feature({0, 1}, {0, 2}), b = kl_feature({0, 2}, {0, 1});
  o.check(std::abs(a - 0.8069) <= 1e-4 && std::abs(a - (1.5 - std::log(2.0))) <= 1e-6, "pair (0,1),(0,2)");
  o.check(std::abs(b - 0.3181) <= 1e-4 && std::abs(b - (std::log(2.0) - 0.375)) <= 1e-6, "pair (0,2),(0,1)");
  const MultivariateNormal h{Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()};
  const MultivariateNormal r{Eigen::Vector2d(1, 0), Eigen::Matrix2d::Identity()};
  o.check(std::abs(kl_hand(h, r) - 0.5) <= 1e-9, "2-D mean shift");
  std::mt19937_64 rng(91);
  const MultivariateNormal s{Eigen::Vector3d(0.3, -1, 2), random_spd(3, rng)};
  o.check(std::abs(kl_hand(s, s)) < 1e-12 && std::abs(kl_feature({0.4, 0.7}, {0.4, 0.7})) < 1e-12, "identity");
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.05, 4.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const UnivariateNormal x{n(rng), u(rng)}, y{n(rng), u(rng)};
    const MultivariateNormal xx{Eigen::VectorXd::Constant(1, x.mean), Eigen::MatrixXd::Constant(1, 1, x.sigma * x.sigma)};
    const MultivariateNormal yy{Eigen::VectorXd::Constant(1, y.mean), Eigen::MatrixXd::Constant(1, 1, y.sigma * y.sigma)};
    const double f = kl_feature(x, y);
    worst = std::max(worst, std::abs(kl_hand(xx, yy) - f) / std::max(1.0, std::abs(f)));
  }
  o.check(worst <= 1e-12, "1-D kl_hand vs kl_feature " + std::to_string(worst));
  if (o.pass) o.detail << "pair " << a << " / " << b << ", 1-D gap " << worst;
  return o;
}

Outcome em_properties() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(31);
  double worst_drop = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 4;
    const auto data = random_dataset(rng, d, 2 + trial % 3, 60, 0.8);
    const auto trace = fit_em(data, three_tasks(), FeatureLayout::generic(d)).fit_meta().log_likelihood_trace;
    for (std::size_t i = 1; i < trace.size(); ++i) worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
  }
  o.check(worst_drop <= 1e-9, "log-likelihood drop " + std::to_string(worst_drop));

  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<Demonstration> data;
  for (int i = 0; i < 30; ++i) data.push_back({"r", 1, Eigen::Vector2d(n(rng), n(rng)), "a", 1.0});
  for (int i = 0; i < 90; ++i) data.push_back({"r", 2, Eigen::Vector2d(100 + n(rng), n(rng)), "b", 1.0});
  const auto sep = fit_em(data, three_tasks(), FeatureLayout::generic(2));
  o.check(std::abs(sep.classes()[0].prior() - 0.25) <= 1e-6 && std::abs(sep.classes()[1].prior() - 0.75) <= 1e-6,
          "priors off count ratio");

  const auto det = random_dataset(rng, 3, 3, 50, 0.7);
  const auto a = fit_em(det, three_tasks(), FeatureLayout::generic(3));
  const auto b = fit_em(det, three_tasks(), FeatureLayout::generic(3));
  bool same = a.fit_meta() == b.fit_meta();
  for (std::size_t k = 0; k < a.classes().size(); ++k) {
    same = same && a.classes()[k].mean() == b.classes()[k].mean() &&
           a.classes()[k].covariance() == b.classes()[k].covariance();
  }
  o.check(same, "refit differs");
  const double elapsed = seconds_since(t0);
  o.check(elapsed < 10.0, "runtime " + std::to_string(elapsed) + " s");
  if (o.pass) o.detail << "worst LL drop " << worst_drop << ", " << elapsed << " s";
  return o;
}

Outcome gradient_check() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(52);
  double worst = 0.0;
  for (const auto& f : solver_fixtures()) {
    const int d = f.model->dim();
    const auto w = fixed_weights(d, 0.7, 1.3);
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd r(d);
      for (int j = 0; j < d; ++j) r[j] = std::uniform_real_distribution<double>(f.bounds.lower[j], f.bounds.upper[j])(rng);
      const auto g = gradient_knitro(*f.model, f.p_h, r, f.h, w);
      Eigen::VectorXd fd(d);
      const double step = 1e-5;
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd up = r, down = r;
        up[j] += step;
        down[j] -= step;
        fd[j] = (objective_knitro(*f.model, f.p_h, up, f.h, w) - objective_knitro(*f.model, f.p_h, down, f.h, w)) /
                (2 * step);
      }
      worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-4));
    }
  }
  const double elapsed = seconds_since(t0);
  o.check(worst < 1e-5, "relative error " + std::to_string(worst));
  o.check(elapsed < 5.0, "runtime " + std::to_string(elapsed) + " s");
  if (o.pass) o.detail << "worst relative error " << worst << ", " << elapsed << " s";
  return o;
}

Outcome grid_equivalence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& f : solver_fixtures()) {
    if (f.model->dim() > 3) continue;
    const ObjectiveOracle oracle(*f.model, f.p_h);
    const auto intent = solve(fixture_request(f, ControlMode::kIntentOnly));
    const auto gi = grid_search([&](const Eigen::VectorXd& x) { return oracle.intent(x); }, f.bounds.lower,
                                f.bounds.upper, 1e-3);
    auto req = fixture_request(f, ControlMode::kKnitro);
    req.weights_override = fixed_weights(f.model->dim(), 2.0, 5.0);
    const auto knitro = solve(req);
    const auto gk = grid_search(
        [&](const Eigen::VectorXd& x) { return oracle.intent(x) + 0.1 * (x - f.h).squaredNorm(); }, f.bounds.lower,
        f.bounds.upper, 1e-3);
    worst = std::max({worst, std::abs(intent.objective - gi.value), std::abs(knitro.objective - gk.value)});
  }
  const double elapsed = seconds_since(t0);
  o.check(worst <= 1e-2, "objective gap " + std::to_string(worst));
  o.check(elapsed < 60.0, "runtime " + std::to_string(elapsed) + " s");
  if (o.pass) o.detail << "worst objective gap " << worst << ", " << elapsed << " s";
  return o;
}

Outcome arbitration_limits() {
  Outcome o;
  double follow = 0.0, intent_gap = 0.0;
  bool monotone = true;
  for (const auto& f : solver_fixtures()) {
    const int d = f.model->dim();
    auto req = fixture_request(f, ControlMode::kKnitro);
    req.weights_override = penalty_scale_weights(d, 1e6);
    follow = std::max(follow, (solve(req).robot.values() - f.bounds.clamp(f.h)).norm());
    double prev_dev = INFINITY, prev_dist = INFINITY;
    for (int e = -6; e <= 6; ++e) {
      req.weights_override = penalty_scale_weights(d, std::pow(10.0, e));
      const auto sol = solve(req);
      const double dist = (sol.robot.values() - f.bounds.clamp(f.h)).norm();
      monotone = monotone && sol.mimic_deviation <= prev_dev + 1e-9 && dist <= prev_dist + 1e-9;
      prev_dev = sol.mimic_deviation;
      prev_dist = dist;
    }
  }
  const auto f = solver_fixtures()[1];
  auto req = fixture_request(f, ControlMode::kKnitro);
  req.weights_override = penalty_scale_weights(1, 1e-6);
  intent_gap = (solve(req).robot.values() - solve(fixture_request(f, ControlMode::kIntentOnly)).robot.values()).norm();
  o.check(follow < 1e-3, "penalty 1e6 distance " + std::to_string(follow));
  o.check(intent_gap < 1e-3, "penalty 1e-6 gap " + std::to_string(intent_gap));
  o.check(monotone, "sweep not monotone");
  if (o.pass) o.detail << "|R*-clamp(H)| " << follow << " at 1e6, gap to intent_only " << intent_gap << " at 1e-6";
  return o;
}

Outcome nested_kl_table() {
  Outcome o;
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  int ok = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const int d = 1 + trial % 9;
    const double narrow = u(rng), wide = narrow * (1.5 + 3.0 * u(rng));
    auto model = [&](const std::string& name, double scale, double offset) {
      return GraspModel(name, three_tasks(), FeatureLayout::generic(d),
                        {GaussianClass(1, 1.0, Eigen::VectorXd::Constant(d, offset),
                                       Eigen::MatrixXd::Identity(d, d) * scale * scale)});
    };
    const auto a = model("narrow", narrow, 0.0), b = model("wide", wide, 0.1);
    const auto t = kl_table({&a, &b}, TaskMask{1});
    if (t(0, 0) == 0.0 && t(1, 1) == 0.0 && t(0, 1) < t(1, 0) && t(0, 1) != t(1, 0)) ++ok;
  }
  o.check(ok == trials, std::to_string(trials - ok) + " of " + std::to_string(trials) + " nested pairs violate");
  if (o.pass) o.detail << trials << " nested pairs, d = 1..9";
  return o;
}

Outcome service_equivalence() {
  Outcome o;
  const auto w = make_world("acceptance");
  ServiceOptions opts;
  opts.port = 0;
  opts.models_dir = w.models_dir;
  opts.bounds_path = w.bounds_path;
  opts.rate_limit = 0.0;
  ServiceCore core(opts);
  Server server(core);
  const auto port = server.start();
  const auto ctx = world_context(w, w.gripper);
  const auto& frames = w.trajectory.frames;

  int http_mismatch = 0;
  {
    HttpClient client(port);
    for (auto mode : {ControlMode::kMimic, ControlMode::kIntentOnly, ControlMode::kKnitro}) {
      for (const auto& f : frames) {
        json body = {{"model", "gripper"}, {"mode", to_string(mode)}, {"features", features_to_json(f.features)}};
        if (f.intent) body["intent"] = f.intent->p;
        const auto res = client.request("POST", "/solve", body.dump());
        auto expect = solution_to_json(solve(frame_request(mode, f.features, f.intent, ctx)), three_tasks());
        expect["model"] = "gripper";
        if (res.status != 200 || without_timing(res.body) != without_timing(expect)) ++http_mismatch;
      }
    }
  }
  o.check(http_mismatch == 0, std::to_string(http_mismatch) + " POST /solve mismatches");

  std::vector<json> session;
  {
    WsClient ws(port);
    ws.send(json{{"type", "hello"}, {"model", "gripper"}, {"mode", "knitro"}, {"bounds", "default"}});
    for (std::size_t i = 0; i < frames.size(); ++i) {
      json msg = {{"type", "hand_update"}, {"seq", i + 1}, {"features", features_to_json(frames[i].features)}};
      if (frames[i].intent) msg["intent"] = frames[i].intent->p;
      ws.send(msg);
    }
    for (std::size_t i = 0; i < frames.size(); ++i) session.push_back(ws.recv());
  }
  int ws_mismatch = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto lib = solve(frame_request(ControlMode::kKnitro, frames[i].features, frames[i].intent, ctx));
    if (session[i] != session_solution_message(static_cast<std::int64_t>(i + 1), lib, 0)) ++ws_mismatch;
  }
  o.check(ws_mismatch == 0, std::to_string(ws_mismatch) + " session mismatches");

  std::ostringstream out, err;
  const int code = run_cli({"replay", w.trajectory_path.string(), "--model", (w.models_dir / "gripper.json").string(),
                            "--human-model", (w.models_dir / "human.json").string(), "--bounds",
                            w.bounds_path.string(), "--bounds-id", "default", "--mode", "knitro"},
                           out, err);
  o.check(code == 0, "replay failed: " + err.str());
  if (code == 0) {
    const auto report = json::parse(out.str())["reports"][0]["frames"];
    int replay_mismatch = report.size() == session.size() ? 0 : 1;
    for (std::size_t i = 0; i < std::min(report.size(), session.size()); ++i) {
      const auto& s = report[i]["solution"];
      const auto& m = session[i];
      const bool same = m["robot_features"] == s["robot"] && m["objective"] == s["objective"] &&
                        m["intent_term"] == s["intent_term"] && m["mimic_term"] == s["mimic_term"] &&
                        m["p_h"] == s["p_h"] && m["p_r"] == s["p_r"] && m["mode"] == s["mode"] &&
                        m["lambda"] == s["weights"]["lambda"] && m["gamma"] == s["weights"]["gamma"];
      if (!same) ++replay_mismatch;
    }
    o.check(replay_mismatch == 0, std::to_string(replay_mismatch) + " replay/session mismatches");
  }
  if (o.pass) o.detail << frames.size() << " frames: POST /solve x3 modes, session and replay all identical";
  return o;
}

}  // namespace
}  // namespace telegrasp

int main() {
  using namespace telegrasp;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"powerset target worked example", powerset_worked_example},
      {"posterior on two-class 1-D fixture", posterior_two_class},
      {"divergence formulas", kl_formulas},
      {"EM properties", em_properties},
      {"gradient check", gradient_check},
      {"grid oracle equivalence", grid_equivalence},
      {"arbitration limits", arbitration_limits},
      {"embodiment divergence table trend", nested_kl_table},
      {"service equivalence", service_equivalence},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
    if (!o.pass) ++failed;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
