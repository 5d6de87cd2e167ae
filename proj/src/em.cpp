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

#include "telegrasp/em.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "telegrasp/error.hpp"

namespace telegrasp {

namespace {

struct ClassParams {
  double prior = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  bool valid = false;
};

// Responsibilities are stored sample-major: resp(n, k).
class EmFitter {
 public:
  EmFitter(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights, std::vector<TaskMask> masks,
           std::vector<bool> diagonal_only, const FitConfig& config)
      : x_(x),
        w_(weights),
        masks_(std::move(masks)),
        diagonal_only_(std::move(diagonal_only)),
        config_(config),
        params_(masks_.size()) {}

  void maximize(const Eigen::MatrixXd& resp) {
    const auto d = x_.rows();
    const auto n = x_.cols();
    const auto num_classes = static_cast<Eigen::Index>(masks_.size());
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(num_classes);
    for (Eigen::Index k = 0; k < num_classes; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) mass[k] += w_[i] * resp(i, k);
    }
    const double total = mass.sum();
    for (Eigen::Index k = 0; k < num_classes; ++k) {
      auto& p = params_[static_cast<std::size_t>(k)];
      p.prior = mass[k] / total;
      if (!(mass[k] > 0.0)) {
        // Class lost all responsibility; keep its last shape with zero prior.
        if (!p.valid) throw InvalidArgument("combination class has zero total weight");
        continue;
      }
      // Incremental weighted mean: exact for repeated points.
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
      double seen = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double c = w_[i] * resp(i, k);
        if (c <= 0.0) continue;
        seen += c;
        mean += (c / seen) * (x_.col(i) - mean);
      }
      Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double c = w_[i] * resp(i, k);
        if (c <= 0.0) continue;
        const Eigen::VectorXd dev = x_.col(i) - mean;
        scatter.noalias() += c * dev * dev.transpose();
      }
      scatter /= seen;
      if (diagonal_only_[static_cast<std::size_t>(k)]) {
        scatter = Eigen::MatrixXd(scatter.diagonal().asDiagonal());
      }
      scatter = 0.5 * (scatter + scatter.transpose()).eval();
      scatter.diagonal().array() += config_.eps_cov;
      p.mean = std::move(mean);
      p.covariance = std::move(scatter);
      p.valid = true;
    }
    classes_.clear();
    for (std::size_t k = 0; k < masks_.size(); ++k) {
      classes_.emplace_back(masks_[k], params_[k].prior, params_[k].mean, params_[k].covariance);
    }
  }

  // Returns the weighted dataset log-likelihood and fills `resp`.
  double expect(Eigen::MatrixXd& resp) const {
    const auto n = x_.cols();
    const auto num_classes = static_cast<Eigen::Index>(classes_.size());
    std::vector<double> log_joint(static_cast<std::size_t>(num_classes));
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < num_classes; ++k) {
        const auto& c = classes_[static_cast<std::size_t>(k)];
        const double lp = c.prior() > 0.0 ? std::log(c.prior())
                                           : -std::numeric_limits<double>::infinity();
        log_joint[static_cast<std::size_t>(k)] = lp + c.log_density(x_.col(i));
      }
      const double norm = log_sum_exp(log_joint);
      for (Eigen::Index k = 0; k < num_classes; ++k) {
        resp(i, k) = std::exp(log_joint[static_cast<std::size_t>(k)] - norm);
      }
      ll += w_[i] * norm;
    }
    return ll;
  }

  const std::vector<GaussianClass>& classes() const { return classes_; }

 private:
  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& w_;
  std::vector<TaskMask> masks_;
  std::vector<bool> diagonal_only_;
  FitConfig config_;
  std::vector<ClassParams> params_;
  std::vector<GaussianClass> classes_;
};

}  // namespace

GraspModel fit_em(std::span<const Demonstration> data, const TaskSet& tasks,
                  const FeatureLayout& layout, const FitConfig& config) {
  if (data.empty()) throw InvalidArgument("no demonstrations");
  if (!(config.eps_cov > 0.0)) throw InvalidArgument("eps_cov must be positive");
  if (config.max_iters < 0) throw InvalidArgument("max_iters must be non-negative");
  const auto d = static_cast<Eigen::Index>(layout.dim());
  const std::string& embodiment = data.front().embodiment;

  std::map<TaskMask, std::size_t> label_counts;
  std::map<TaskMask, Eigen::Vector3d> orientation_refs;
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(data.size()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& demo = data[i];
    if (demo.embodiment != embodiment) {
      throw InvalidArgument("demonstration " + std::to_string(i) + " has embodiment '" +
                            demo.embodiment + "', expected '" + embodiment + "'");
    }
    if (demo.features.size() != d) {
      throw DimensionMismatch("demonstration " + std::to_string(i) + " has " +
                              std::to_string(demo.features.size()) + " features, expected " +
                              std::to_string(d));
    }
    if (!demo.features.allFinite()) {
      throw InvalidArgument("demonstration " + std::to_string(i) + " has non-finite features");
    }
    if (!(demo.weight >= 0.0) || !std::isfinite(demo.weight)) {
      throw InvalidArgument("demonstration " + std::to_string(i) + " has invalid weight");
    }
    if (demo.combination >= tasks.combination_count()) {
      throw InvalidArgument("demonstration " + std::to_string(i) +
                            " has a combination outside the task set");
    }
    const auto col = static_cast<Eigen::Index>(i);
    x.col(col) = demo.features;
    if (layout.is_grasp() && config.unwrap_orientation) {
      const Eigen::Vector3d rot = canonicalize_rotation(demo.features.segment<3>(3));
      auto [it, inserted] = orientation_refs.try_emplace(demo.combination, rot);
      x.col(col).segment<3>(3) = inserted ? rot : unwrap_rotation(rot, it->second);
    }
    w[col] = demo.weight;
    ++label_counts[demo.combination];
  }
  if (!(w.sum() > 0.0)) throw InvalidArgument("demonstrations have zero total weight");

  std::vector<TaskMask> masks;
  std::vector<bool> diagonal_only;
  std::map<TaskMask, Eigen::Index> class_of;
  for (const auto& [mask, count] : label_counts) {
    class_of[mask] = static_cast<Eigen::Index>(masks.size());
    masks.push_back(mask);
    diagonal_only.push_back(count < static_cast<std::size_t>(d) + 1);
  }

  const auto num_classes = static_cast<Eigen::Index>(masks.size());
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(x.cols(), num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    resp(static_cast<Eigen::Index>(i), class_of[data[i].combination]) = 1.0;
  }
  Eigen::VectorXd label_mass = Eigen::VectorXd::Zero(num_classes);
  for (Eigen::Index i = 0; i < x.cols(); ++i) label_mass += w[i] * resp.row(i).transpose();
  for (Eigen::Index k = 0; k < num_classes; ++k) {
    if (!(label_mass[k] > 0.0)) {
      throw InvalidArgument("combination " + tasks.label(masks[static_cast<std::size_t>(k)]) +
                            " has zero total weight");
    }
  }
  const Eigen::MatrixXd labels = resp;

  EmFitter fitter(x, w, masks, diagonal_only, config);
  FitMeta meta;
  meta.eps_cov = config.eps_cov;
  fitter.maximize(resp);
  double ll_prev = fitter.expect(resp);
  meta.log_likelihood_trace.push_back(ll_prev);
  for (int it = 0; it < config.max_iters; ++it) {
    fitter.maximize(resp);
    const double ll = fitter.expect(resp);
    meta.log_likelihood_trace.push_back(ll);
    ++meta.iterations;
    const bool done = std::abs(ll - ll_prev) < config.rel_tol * std::abs(ll_prev);
    ll_prev = ll;
    if (done) {
      meta.converged = true;
      break;
    }
  }
  // Class parameters come from the second-to-last responsibilities; the
  // recorded mass below is from the final E-step.
  meta.final_log_likelihood = ll_prev;
  meta.responsibility_mass.assign(masks.size(), 0.0);
  double agree = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    Eigen::Index best = 0;
    resp.row(i).maxCoeff(&best);
    if (labels(i, best) == 1.0) agree += w[i];
    for (Eigen::Index k = 0; k < num_classes; ++k) {
      meta.responsibility_mass[static_cast<std::size_t>(k)] += w[i] * resp(i, k);
    }
  }
  meta.label_agreement = agree / w.sum();

  return GraspModel(embodiment, tasks, layout, fitter.classes(), std::move(meta));
}

}  // namespace telegrasp
