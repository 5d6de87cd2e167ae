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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "fixtures.hpp"
#include "telegrasp/em.hpp"
#include "telegrasp/error.hpp"

namespace telegrasp {
namespace {

using testing::random_dataset;
using testing::three_tasks;

TEST(FitEm, LogLikelihoodMonotoneOnRandomDatasets) {
  std::mt19937_64 rng(31);
  double worst_drop = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 4;
    const int k = 2 + trial % 3;
    // Heavy overlap so labels and responsibilities disagree and EM actually iterates.
    const auto data = random_dataset(rng, d, k, 60, 0.8);
    const auto model = fit_em(data, three_tasks(), FeatureLayout::generic(d));
    const auto& trace = model.fit_meta().log_likelihood_trace;
    ASSERT_GE(trace.size(), 2u);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
      EXPECT_GE(trace[i], trace[i - 1] - 1e-9) << "trial " << trial << " iteration " << i;
    }
  }
  RecordProperty("worst_drop", std::to_string(worst_drop));
}

TEST(FitEm, ModelInvariants) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 3;
    const auto data = random_dataset(rng, d, 3, 40, 1.0);
    FitConfig cfg;
    cfg.eps_cov = 1e-4;
    const auto model = fit_em(data, three_tasks(), FeatureLayout::generic(d), cfg);
    double prior_sum = 0.0;
    for (const auto& c : model.classes()) {
      prior_sum += c.prior();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.covariance());
      EXPECT_GE(es.eigenvalues().minCoeff(), cfg.eps_cov * (1.0 - 1e-9));
    }
    EXPECT_NEAR(prior_sum, 1.0, 1e-10);
    double mass = 0.0;
    for (double m : model.fit_meta().responsibility_mass) mass += m;
    EXPECT_NEAR(mass, static_cast<double>(data.size()), 1e-9 * static_cast<double>(data.size()));
  }
}

TEST(FitEm, RepeatedPointGivesFloorCovariance) {
  const Eigen::Vector3d v(0.25, -1.5, 3.0);
  std::vector<Demonstration> data(50, Demonstration{"human", 0b010, v, "t", 1.0});
  const auto model = fit_em(data, three_tasks(), FeatureLayout::generic(3));
  ASSERT_EQ(model.classes().size(), 1u);
  const auto& c = model.classes()[0];
  EXPECT_EQ(c.mean(), Eigen::VectorXd(v));
  EXPECT_EQ(c.covariance(), Eigen::MatrixXd(Eigen::Matrix3d::Identity() * 1e-6));
  EXPECT_EQ(c.prior(), 1.0);
  EXPECT_EQ(c.combination(), 0b010u);
}

TEST(FitEm, SeparatedClustersMatchCountRatio) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<Demonstration> data;
  for (int i = 0; i < 30; ++i) data.push_back({"r", 1, Eigen::Vector2d(n(rng), n(rng)), "a", 1.0});
  for (int i = 0; i < 90; ++i) data.push_back({"r", 2, Eigen::Vector2d(100 + n(rng), n(rng)), "b", 1.0});
  const auto model = fit_em(data, three_tasks(), FeatureLayout::generic(2));
  EXPECT_NEAR(model.classes()[0].prior(), 30.0 / 120.0, 1e-6);
  EXPECT_NEAR(model.classes()[1].prior(), 90.0 / 120.0, 1e-6);
  EXPECT_EQ(model.fit_meta().label_agreement, 1.0);
}

TEST(FitEm, WeightsActLikeCounts) {
  std::vector<Demonstration> weighted{{"r", 1, Eigen::VectorXd::Constant(1, 0.0), "a", 3.0},
                                      {"r", 1, Eigen::VectorXd::Constant(1, 1.0), "a", 1.0},
                                      {"r", 2, Eigen::VectorXd::Constant(1, 50.0), "b", 1.0},
                                      {"r", 2, Eigen::VectorXd::Constant(1, 52.0), "b", 1.0}};
  const auto model = fit_em(weighted, three_tasks(), FeatureLayout::generic(1));
  EXPECT_NEAR(model.classes()[0].prior(), 4.0 / 6.0, 1e-12);
  EXPECT_NEAR(model.classes()[0].mean()[0], 0.25, 1e-12);
}

TEST(FitEm, MonteCarloMeanRecovery) {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> n(0.0, 1.0);
  const int count = 2000;
  const double sigma = 0.5;
  const std::vector<Eigen::Vector2d> means{{0.0, 0.0}, {6.0, 1.0}};
  std::vector<Demonstration> data;
  for (std::size_t k = 0; k < means.size(); ++k) {
    for (int i = 0; i < count; ++i) {
      const Eigen::Vector2d x = means[k] + sigma * Eigen::Vector2d(n(rng), n(rng));
      data.push_back({"r", static_cast<TaskMask>(k + 1), x, "t", 1.0});
    }
  }
  const auto model = fit_em(data, three_tasks(), FeatureLayout::generic(2));
  const double tol = 3.0 * sigma / std::sqrt(static_cast<double>(count));
  for (std::size_t k = 0; k < means.size(); ++k) {
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(model.classes()[k].mean()[i], means[k][i], tol);
  }
}

TEST(FitEm, SmallClassGetsDiagonalCovariance) {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Demonstration> data;
  for (int i = 0; i < 40; ++i) data.push_back({"r", 1, Eigen::Vector3d(n(rng), n(rng), n(rng)), "a", 1.0});
  // Three samples in 3-D: fewer than d + 1.
  data.push_back({"r", 4, Eigen::Vector3d(20, 20, 20), "b", 1.0});
  data.push_back({"r", 4, Eigen::Vector3d(21, 22, 20), "b", 1.0});
  data.push_back({"r", 4, Eigen::Vector3d(22, 21, 23), "b", 1.0});
  const auto model = fit_em(data, three_tasks(), FeatureLayout::generic(3));
  const auto& small = model.classes()[*model.class_index(4)];
  const Eigen::MatrixXd off = small.covariance() - Eigen::MatrixXd(small.covariance().diagonal().asDiagonal());
  EXPECT_TRUE(off.isZero(0.0));
  EXPECT_GT(small.covariance()(0, 0), 0.1);
}

TEST(FitEm, Deterministic) {
  std::mt19937_64 rng(36);
  const auto data = random_dataset(rng, 3, 3, 50, 0.7);
  const auto a = fit_em(data, three_tasks(), FeatureLayout::generic(3));
  const auto b = fit_em(data, three_tasks(), FeatureLayout::generic(3));
  ASSERT_EQ(a.classes().size(), b.classes().size());
  for (std::size_t k = 0; k < a.classes().size(); ++k) {
    EXPECT_EQ(a.classes()[k].prior(), b.classes()[k].prior());
    EXPECT_EQ(a.classes()[k].mean(), b.classes()[k].mean());
    EXPECT_EQ(a.classes()[k].covariance(), b.classes()[k].covariance());
  }
  EXPECT_EQ(a.fit_meta(), b.fit_meta());
}

TEST(FitEm, ResponsibilityRowsSumToOne) {
  // Checked through the posterior of the fitted model, which is what the E-step evaluates.
  std::mt19937_64 rng(37);
  const auto data = random_dataset(rng, 2, 4, 40, 0.5);
  const auto model = fit_em(data, three_tasks(), FeatureLayout::generic(2));
  for (const auto& demo : data) {
    double s = 0.0;
    for (double p : posterior(model, demo.features)) s += p;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(FitEm, UnwrapsOrientation) {
  // Same physical rotation about z written as +0.99 pi and -0.99 pi.
  std::vector<Demonstration> data;
  for (int i = 0; i < 20; ++i) {
    const double angle = (i % 2 ? 1.0 : -1.0) * 0.99 * M_PI;
    Eigen::VectorXd f(8);
    f << 0.1, 0.2, 0.3, 0.0, 0.0, angle, 0.5, 0.5;
    f[6] += 0.01 * i;
    data.push_back({"gripper", 1, f, "t", 1.0});
  }
  const auto model = fit_em(data, three_tasks(), FeatureLayout::grasp(2));
  const auto& c = model.classes()[0];
  // Unwrapped samples lie within 0.02 pi of each other in rz.
  EXPECT_LT(c.covariance()(5, 5), std::pow(0.05 * M_PI, 2));
  EXPECT_GT(std::abs(c.mean()[5]), 0.9 * M_PI);
}

TEST(FitEm, Errors) {
  const auto layout = FeatureLayout::generic(2);
  EXPECT_THROW(fit_em({}, three_tasks(), layout), InvalidArgument);
  std::vector<Demonstration> mixed{{"a", 1, Eigen::Vector2d(0, 0), "t", 1.0},
                                   {"a", 1, Eigen::Vector3d(0, 0, 0), "t", 1.0}};
  EXPECT_THROW(fit_em(mixed, three_tasks(), layout), DimensionMismatch);
  std::vector<Demonstration> two_embodiments{{"a", 1, Eigen::Vector2d(0, 0), "t", 1.0},
                                             {"b", 1, Eigen::Vector2d(0, 0), "t", 1.0}};
  EXPECT_THROW(fit_em(two_embodiments, three_tasks(), layout), InvalidArgument);
  std::vector<Demonstration> weightless{{"a", 1, Eigen::Vector2d(0, 0), "t", 0.0}};
  EXPECT_THROW(fit_em(weightless, three_tasks(), layout), InvalidArgument);
}

}  // namespace
}  // namespace telegrasp
