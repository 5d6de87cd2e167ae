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

#include "telegrasp/divergence.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "telegrasp/error.hpp"

namespace telegrasp {

double kl_feature(const UnivariateNormal& h, const UnivariateNormal& r) {
  if (!(h.sigma > 0.0) || !(r.sigma > 0.0)) {
    throw InvalidArgument("kl_feature needs positive standard deviations");
  }
  const double diff = r.mean - h.mean;
  return std::log(h.sigma / r.sigma) + (r.sigma * r.sigma + diff * diff) / (2.0 * h.sigma * h.sigma) -
         0.5;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& m, const char* which) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument(std::string(which) + " covariance is not positive definite");
  }
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double kl_hand(const MultivariateNormal& h, const MultivariateNormal& r) {
  const auto d = h.mean.size();
  if (r.mean.size() != d || h.covariance.rows() != d || h.covariance.cols() != d ||
      r.covariance.rows() != d || r.covariance.cols() != d) {
    throw DimensionMismatch("kl_hand operands disagree in dimension");
  }
  if (d == 0) throw DimensionMismatch("kl_hand needs at least one feature");
  if (h.mean == r.mean && h.covariance == r.covariance) {
    spd_factor(h.covariance, "human");
    return 0.0;
  }
  const auto llt_h = spd_factor(h.covariance, "human");
  const auto llt_r = spd_factor(r.covariance, "robot");
  const double trace = llt_h.solve(r.covariance).trace();
  const Eigen::VectorXd diff = h.mean - r.mean;
  const double maha = diff.dot(llt_h.solve(diff));
  return 0.5 * (trace + maha - static_cast<double>(d) + log_det(llt_h) - log_det(llt_r));
}

MultivariateNormal marginal_stats(const GraspModel& model, TaskMask combination) {
  const auto k = model.class_index(combination);
  if (!k) {
    throw NotFound("model '" + model.embodiment() + "' has no class for combination " +
                   model.tasks().label(combination));
  }
  const auto& c = model.classes()[*k];
  return {c.mean(), c.covariance()};
}

MultivariateNormal pooled_stats(const GraspModel& model) {
  const auto d = model.dim();
  MultivariateNormal out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (const auto& c : model.classes()) out.mean += c.prior() * c.mean();
  for (const auto& c : model.classes()) {
    const Eigen::VectorXd dev = c.mean() - out.mean;
    out.covariance += c.prior() * (c.covariance() + dev * dev.transpose());
  }
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

FeatureAlignment FeatureAlignment::identity(int dim) {
  FeatureAlignment out;
  for (int i = 0; i < dim; ++i) out.pairs.emplace_back(i, i);
  return out;
}

AlignmentTable AlignmentTable::from_json(const nlohmann::json& j) {
  AlignmentTable table;
  try {
    for (const auto& e : j.at("pairs")) {
      Entry entry{e.at("a").get<std::string>(), e.at("b").get<std::string>(), {}};
      for (const auto& p : e.at("apertures")) {
        entry.apertures.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
      }
      table.entries_.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed alignment table: ") + e.what());
  }
  return table;
}

FeatureAlignment AlignmentTable::resolve(const GraspModel& a, const GraspModel& b) const {
  if (a.layout() == b.layout()) return FeatureAlignment::identity(a.dim());
  if (!a.layout().is_grasp() || !b.layout().is_grasp()) {
    throw InvalidArgument("incompatible feature layouts for '" + a.embodiment() + "' and '" +
                          b.embodiment() + "' (only grasp layouts can be aligned)");
  }
  for (const auto& entry : entries_) {
    const bool forward = entry.a == a.embodiment() && entry.b == b.embodiment();
    const bool backward = entry.a == b.embodiment() && entry.b == a.embodiment();
    if (!forward && !backward) continue;
    FeatureAlignment out = FeatureAlignment::identity(FeatureLayout::kPoseDims);
    std::set<int> seen_a;
    std::set<int> seen_b;
    for (auto [ia, ib] : entry.apertures) {
      if (backward) std::swap(ia, ib);
      if (ia < 0 || ia >= a.layout().aperture_count() || ib < 0 ||
          ib >= b.layout().aperture_count()) {
        throw InvalidArgument("aperture mapping index out of range for '" + a.embodiment() +
                              "' / '" + b.embodiment() + "'");
      }
      if (!seen_a.insert(ia).second || !seen_b.insert(ib).second) {
        throw InvalidArgument("aperture mapping must be one-to-one");
      }
      out.pairs.emplace_back(FeatureLayout::kPoseDims + ia, FeatureLayout::kPoseDims + ib);
    }
    return out;
  }
  throw InvalidArgument("incompatible feature layouts for '" + a.embodiment() + "' and '" +
                        b.embodiment() + "' with no declared alignment map");
}

MultivariateNormal select_features(const MultivariateNormal& n, const FeatureAlignment& alignment,
                                   bool use_first) {
  const auto m = static_cast<Eigen::Index>(alignment.pairs.size());
  MultivariateNormal out{Eigen::VectorXd(m), Eigen::MatrixXd(m, m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& pi = alignment.pairs[static_cast<std::size_t>(i)];
    const int src_i = use_first ? pi.first : pi.second;
    out.mean[i] = n.mean[src_i];
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& pj = alignment.pairs[static_cast<std::size_t>(j)];
      out.covariance(i, j) = n.covariance(src_i, use_first ? pj.first : pj.second);
    }
  }
  return out;
}

Eigen::MatrixXd kl_table(const std::vector<const GraspModel*>& models,
                         std::optional<TaskMask> combination, const AlignmentTable& alignment) {
  if (models.size() < 2) throw InvalidArgument("kl_table needs at least two models");
  auto stats = [&](const GraspModel& m) {
    return combination ? marginal_stats(m, *combination) : pooled_stats(m);
  };
  const auto n = static_cast<Eigen::Index>(models.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index q = 0; q < n; ++q) {
      if (p == q) continue;
      const auto& performer = *models[static_cast<std::size_t>(p)];
      const auto& provider = *models[static_cast<std::size_t>(q)];
      const auto align = alignment.resolve(performer, provider);
      const auto r = select_features(stats(performer), align, true);
      const auto h = select_features(stats(provider), align, false);
      out(p, q) = kl_hand(h, r);
    }
  }
  return out;
}

std::string kl_table_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& table) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "P\\Q";
  for (const auto& id : ids) os << ',' << id;
  os << '\n';
  for (Eigen::Index p = 0; p < table.rows(); ++p) {
    os << ids[static_cast<std::size_t>(p)];
    for (Eigen::Index q = 0; q < table.cols(); ++q) os << ',' << table(p, q);
    os << '\n';
  }
  return os.str();
}

nlohmann::json kl_table_json(const std::vector<std::string>& ids, const Eigen::MatrixXd& table,
                             const std::string& combination_label) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index p = 0; p < table.rows(); ++p) {
    std::vector<double> row(static_cast<std::size_t>(table.cols()));
    for (Eigen::Index q = 0; q < table.cols(); ++q) row[static_cast<std::size_t>(q)] = table(p, q);
    rows.push_back(row);
  }
  return {{"schema_version", 1},
          {"rows", ids},
          {"columns", ids},
          {"combination", combination_label},
          {"convention", "entry[P][Q] = KL(P || Q); P performs, Q provides input"},
          {"values", rows}};
}

}  // namespace telegrasp

namespace telegrasp {

ArbitrationWeights clamp_weights(std::vector<double> lambda, double gamma,
                                 const WeightConfig& config, std::string source) {
  if (!(config.w_min > 0.0) || !(config.w_max >= config.w_min)) {
    throw InvalidArgument("weight clamp range must satisfy 0 < w_min <= w_max");
  }
  ArbitrationWeights out;
  out.lambda = std::move(lambda);
  out.gamma = gamma;
  out.source = std::move(source);
  for (double l : out.lambda) {
    if (std::isnan(l)) throw InvalidArgument("lambda is NaN");
    out.clamped_lambda.push_back(std::clamp(l, config.w_min, config.w_max));
  }
  if (std::isnan(gamma)) throw InvalidArgument("gamma is NaN");
  out.clamped_gamma = std::clamp(gamma, config.w_min, config.w_max);
  return out;
}

ArbitrationWeights arbitration_weights(const GraspModel& human, const GraspModel& robot,
                                       TaskMask combination, const WeightConfig& config,
                                       const AlignmentTable& alignment) {
  if (!(human.tasks() == robot.tasks())) {
    throw InvalidArgument("human and robot models use different task sets");
  }
  bool per_task = config.source == WeightSource::kPerTask;
  if (per_task && !(human.has_combination(combination) && robot.has_combination(combination))) {
    if (!config.fallback_pooled) {
      throw NotFound("combination " + robot.tasks().label(combination) +
                     " missing from a model and pooled fallback is disabled");
    }
    per_task = false;
  }
  const auto h_stats = per_task ? marginal_stats(human, combination) : pooled_stats(human);
  const auto r_stats = per_task ? marginal_stats(robot, combination) : pooled_stats(robot);
  const auto align = alignment.resolve(robot, human);

  std::vector<double> lambda(static_cast<std::size_t>(robot.dim()), config.w_max);
  for (const auto& [ri, hi] : align.pairs) {
    lambda[static_cast<std::size_t>(ri)] =
        kl_feature({h_stats.mean[hi], std::sqrt(h_stats.covariance(hi, hi))},
                   {r_stats.mean[ri], std::sqrt(r_stats.covariance(ri, ri))});
  }
  if (config.normalize_lambda) {
    double sum = 0.0;
    for (const auto& [ri, hi] : align.pairs) sum += lambda[static_cast<std::size_t>(ri)];
    const double mean = align.pairs.empty() ? 0.0 : sum / static_cast<double>(align.pairs.size());
    if (mean > 0.0) {
      for (const auto& [ri, hi] : align.pairs) lambda[static_cast<std::size_t>(ri)] /= mean;
    }
  }
  const double gamma = kl_hand(select_features(h_stats, align, false),
                               select_features(r_stats, align, true));
  return clamp_weights(std::move(lambda), gamma, config, per_task ? "per_task" : "pooled");
}

}  // namespace telegrasp
