// Copyright 2026 The pdsgdm Authors. All Rights Reserved.
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
// =============================================================================
#include <gtest/gtest.h>

#include <charconv>
#include <random>
#include <sstream>

#include "pdsgdm/diagnostics.hpp"
#include "pdsgdm/topology.hpp"

namespace pdsgdm::diagnostics {
namespace {

TEST(ConsensusDistance, EqualModelsGiveZero) {
  const std::vector<Vector> x(4, Vector::Constant(3, 0.25));
  EXPECT_EQ(consensus_distance(x), 0.0);
}

TEST(ConsensusDistance, TwoScalars) {
  const std::vector<Vector> x = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  EXPECT_DOUBLE_EQ(consensus_distance(x), 2.0);
}

TEST(ConsensusDistance, MatchesFrobeniusOracle) {
  Rng rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 7;
    const int d = 1 + trial % 5;
    Matrix stacked(k, d);
    std::vector<Vector> x(k, Vector(d));
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < d; ++j) x[i](j) = stacked(i, j) = normal(rng);
    }
    const Eigen::RowVectorXd mean = stacked.colwise().mean();
    const double oracle = (stacked.rowwise() - mean).squaredNorm();
    EXPECT_NEAR(consensus_distance(x), oracle, 1e-12);
  }
}

TEST(ConsensusBound, RingExample) {
  const double rho = topology::build_topology(topology::Kind::kRing, 8).rho();
  const double value =
      consensus_bound(optim::Method::kPdSgdm, 0.01, 1, 1.0, 8, 0.9, rho, 1.0);
  const double oracle = 2.0 * 1e-4 * 8.0 / (0.1 * 0.1) * (1.0 + 4.0 / (rho * rho));
  EXPECT_NEAR(value, oracle, 1e-12 * oracle);
  EXPECT_NEAR(value, 16.96, 0.02);
}

TEST(ConsensusBound, CompressedIsLooser) {
  const double rho = 0.3;
  const double delta = 0.5;
  const double pd =
      consensus_bound(optim::Method::kPdSgdm, 0.02, 4, 2.0, 8, 0.9, rho, delta);
  const double cpd =
      consensus_bound(optim::Method::kCpdSgdm, 0.02, 4, 2.0, 8, 0.9, rho, delta);
  const double alpha = rho * rho * delta / 82.0;
  ASSERT_LT(alpha, rho);
  EXPECT_GE(cpd, 2.0 * pd);
  EXPECT_NEAR(cpd, 4.0 * 0.0004 * 16 * 4 * 8 / 0.01 * (1 + 4 / (alpha * alpha)),
              1e-9 * cpd);
}

TEST(ConsensusBound, ZeroStepAndCentralized) {
  EXPECT_EQ(consensus_bound(optim::Method::kPdSgdm, 0.0, 4, 3.0, 8, 0.9, 0.2, 1.0), 0.0);
  EXPECT_EQ(consensus_bound(optim::Method::kCSgdm, 0.1, 4, 3.0, 8, 0.9, 0.2, 1.0), 0.0);
}

// Builds a consistent heavy-ball trajectory for the mean model.
struct Trajectory {
  std::vector<Vector> xbar;
  std::vector<Vector> gbar;
  std::vector<Vector> mbar;
};

Trajectory heavy_ball(double eta, double mu, int steps, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Trajectory t;
  Vector x = Vector::Zero(3);
  Vector m = Vector::Zero(3);
  t.xbar.push_back(x);
  for (int s = 0; s < steps; ++s) {
    Vector g(3);
    for (int i = 0; i < 3; ++i) g(i) = normal(rng);
    m = mu * m + g;
    x = x - eta * m;
    t.gbar.push_back(g);
    t.mbar.push_back(m);
    t.xbar.push_back(x);
  }
  return t;
}

TEST(AuxZ, SingleStepExample) {
  // eta = 0.1, mu = 0.9, gbar_0 = 1: z_1 - z_0 = -1.
  const std::vector<Vector> xbar = {Vector::Zero(1), Vector::Constant(1, -0.1)};
  const std::vector<Vector> gbar = {Vector::Constant(1, 1.0)};
  const std::vector<Vector> mbar = {Vector::Constant(1, 1.0)};
  const double z1 = (-0.1 - 0.9 * 0.0) / (1 - 0.9);
  EXPECT_NEAR(z1 - 0.0, -1.0, 1e-15);
  EXPECT_LE(check_aux_z(xbar, gbar, mbar, 0.1, 0.9).max_residual(), 1e-15);
}

TEST(AuxZ, ExactOnHeavyBallTrajectories) {
  for (double mu : {0.0, 0.5, 0.9, 0.99}) {
    const Trajectory t = heavy_ball(0.05, mu, 300, 7);
    const AuxZReport r = check_aux_z(t.xbar, t.gbar, t.mbar, 0.05, mu);
    EXPECT_LE(r.max_increment_residual, 1e-8) << mu;
    EXPECT_LE(r.max_offset_residual, 1e-8) << mu;
  }
}

TEST(AuxZ, DetectsBrokenRecursion) {
  Trajectory t = heavy_ball(0.05, 0.9, 50, 8);
  t.xbar[20](1) += 1e-3;
  EXPECT_GT(check_aux_z(t.xbar, t.gbar, t.mbar, 0.05, 0.9).max_residual(), 1e-4);
}

TEST(AuxZ, MomentumFreeReducesToSgd) {
  const Trajectory t = heavy_ball(0.2, 0.0, 20, 9);
  for (std::size_t s = 0; s < t.gbar.size(); ++s) {
    EXPECT_LE((t.xbar[s + 1] - (t.xbar[s] - 0.2 * t.gbar[s])).norm(), 1e-15);
  }
  EXPECT_LE(check_aux_z(t.xbar, t.gbar, t.mbar, 0.2, 0.0).max_residual(), 1e-12);
}

TEST(TimeToThreshold, ConstructedCrossing) {
  std::vector<std::pair<long long, double>> series;
  for (long long t = 0; t < 400; ++t) series.emplace_back(t, 1.0 / (1.0 + t));
  auto window_mean = [&series](long long end) {
    double sum = 0.0;
    for (long long i = end - 19; i <= end; ++i) sum += series[i].second;
    return sum / 20.0;
  };
  const double threshold = 0.5 * (window_mean(136) + window_mean(137));
  EXPECT_EQ(time_to_threshold(series, threshold), 137);
}

TEST(TimeToThreshold, NeverCrossed) {
  std::vector<std::pair<long long, double>> series;
  for (long long t = 0; t < 100; ++t) series.emplace_back(t, 2.0 + 1.0 / (1 + t));
  EXPECT_FALSE(time_to_threshold(series, 1.0).has_value());
}

TEST(TimeToThreshold, ConstantAtThresholdCrossesImmediately) {
  const std::vector<std::pair<long long, double>> series(30, {0, 0.125});
  std::vector<std::pair<long long, double>> indexed;
  for (long long t = 0; t < 30; ++t) indexed.emplace_back(t, 0.125);
  EXPECT_EQ(time_to_threshold(indexed, 0.125), 0);
}

TEST(TimeToThreshold, ReportsRecordedIterationIndex) {
  // Strided rows: the answer is the row's t, not its position.
  std::vector<std::pair<long long, double>> series;
  for (long long r = 0; r < 10; ++r) series.emplace_back(50 * r, r < 5 ? 1.0 : 0.0);
  EXPECT_EQ(time_to_threshold(series, 0.5, 2), 250);
  EXPECT_THROW(time_to_threshold({}, 1.0), ParameterError);
}

TEST(Csv, HeaderAndEmptyFields) {
  std::ostringstream out;
  MetricsCsvWriter writer(out);
  writer.write_header();
  MetricsRecord r;
  r.t = 3;
  r.f_bar = 0.1;
  r.grad_norm_sq = 2.5;
  r.consensus = 0.0;
  r.comm_bits_cum = 1024;
  r.invariant_residuals[kResAuxZ] = 1e-17;
  writer.write(r);
  EXPECT_EQ(out.str(),
            "t,f_bar,grad_norm_sq,consensus,comm_bits_cum,suboptimality,"
            "res_mean_preserve,res_aux_z,consensus_bound_rhs\n"
            "3,0.1,2.5,0,1024,,,1e-17,\n");
}

TEST(Csv, HoldoutColumn) {
  std::ostringstream out;
  MetricsCsvWriter writer(out, true);
  writer.write_header();
  MetricsRecord r;
  r.holdout_loss = 0.5;
  r.suboptimality = 0.25;
  r.consensus_bound_rhs = 4.0;
  writer.write(r);
  EXPECT_NE(out.str().find(",holdout_loss\n"), std::string::npos);
  EXPECT_NE(out.str().find("0,0,0,0,0,0.25,,,4,0.5\n"), std::string::npos);
}

TEST(Csv, DoublesRoundTrip) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    const std::string text = format_double(v);
    double back = 0.0;
    std::from_chars(text.data(), text.data() + text.size(), back);
    ASSERT_EQ(back, v) << text;
  }
  EXPECT_EQ(format_optional(std::nullopt), "");
}

TEST(MetricsRecord, ResidualLookup) {
  MetricsRecord r;
  r.invariant_residuals[kResMeanPreserve] = 3e-16;
  EXPECT_EQ(r.residual(kResMeanPreserve), 3e-16);
  EXPECT_FALSE(r.residual(kResAuxZ).has_value());
}

}  // namespace
}  // namespace pdsgdm::diagnostics
