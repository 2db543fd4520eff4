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

#include <cmath>
#include <random>

#include "pdsgdm/optim.hpp"

namespace pdsgdm::optim {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<Vector> random_vectors(int count, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> out(count, Vector(dim));
  for (Vector& v : out) {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  }
  return out;
}

Vector column_sum(const std::vector<Vector>& v) {
  Vector s = Vector::Zero(v.front().size());
  for (const Vector& x : v) s += x;
  return s;
}

topology::MixingMatrix pair_average() {
  Matrix w(2, 2);
  w << 0.5, 0.5, 0.5, 0.5;
  return topology::MixingMatrix(w, topology::Kind::kCustom);
}

TEST(LocalStep, FirstStepIsPlainSgd) {
  WorkerState s{vec({0, 0}), vec({0, 0}), std::nullopt, {}};
  const Vector half = local_step(s, vec({1, 0}), 0.1, 0.9);
  EXPECT_EQ(s.m, vec({1, 0}));
  EXPECT_EQ(half, vec({-0.1, 0}));
}

TEST(LocalStep, SecondStepAccumulatesMomentum) {
  WorkerState s{vec({-0.1, 0}), vec({1, 0}), std::nullopt, {}};
  const Vector half = local_step(s, vec({1, 0}), 0.1, 0.9);
  EXPECT_DOUBLE_EQ(s.m(0), 1.9);
  EXPECT_DOUBLE_EQ(half(0), -0.29);
  EXPECT_EQ(half(1), 0.0);
}

// Scalar reference implementation of the heavy-ball recursion.
TEST(LocalStep, MatchesScalarReference) {
  WorkerState s{vec({1.5}), vec({0})};
  double x = 1.5;
  double m = 0.0;
  Rng rng(3);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 50; ++t) {
    const double g = normal(rng);
    m = 0.7 * m + g;
    x = x - 0.05 * m;
    s.x = local_step(s, vec({g}), 0.05, 0.7);
    ASSERT_DOUBLE_EQ(s.x(0), x);
    ASSERT_DOUBLE_EQ(s.m(0), m);
  }
}

TEST(LocalStep, ZeroMomentumIsSgd) {
  WorkerState s{vec({2.0}), vec({0})};
  double x = 2.0;
  for (int t = 0; t < 20; ++t) {
    const double g = 0.3 * x + 0.1 * t;
    x -= 0.2 * g;
    s.x = local_step(s, vec({g}), 0.2, 0.0);
    ASSERT_EQ(s.x(0), x);
  }
}

TEST(LocalStep, NonFiniteResultThrows) {
  WorkerState s{vec({1e308}), vec({0})};
  EXPECT_THROW(local_step(s, vec({-1e308}), 10.0, 0.0), NumericError);
}

TEST(GossipExact, SingleWorkerIdentity) {
  const auto w = topology::build_topology(topology::Kind::kComplete, 1);
  const std::vector<Vector> half = {vec({3, -1})};
  EXPECT_EQ(gossip_exact(half, w)[0], half[0]);
}

TEST(GossipExact, PairAverages) {
  const std::vector<Vector> half = {vec({2}), vec({0})};
  const auto next = gossip_exact(half, pair_average());
  EXPECT_EQ(next[0], vec({1}));
  EXPECT_EQ(next[1], vec({1}));
}

TEST(GossipExact, CompleteGraphReachesMean) {
  const auto w = topology::build_topology(topology::Kind::kComplete, 7);
  const auto half = random_vectors(7, 5, 1);
  const Vector mean = column_sum(half) / 7.0;
  for (const Vector& x : gossip_exact(half, w)) {
    EXPECT_LE((x - mean).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(GossipExact, ConservesTheSum) {
  for (auto kind : {topology::Kind::kRing, topology::Kind::kPath,
                    topology::Kind::kGrid2d}) {
    const auto w = topology::build_topology(kind, 16);
    const auto half = random_vectors(16, 6, 2);
    EXPECT_LE((column_sum(gossip_exact(half, w)) - column_sum(half))
                  .lpNorm<Eigen::Infinity>(),
              1e-10);
  }
}

TEST(GossipCompressed, IdentityMakesCopiesExact) {
  const auto w = topology::build_topology(topology::Kind::kRing, 5);
  const auto x0 = random_vectors(1, 4, 3).front();
  auto states = initial_states(x0, w, true);
  const compression::CompressorSpec id(compression::Kind::kIdentity, 4);
  for (int round = 0; round < 3; ++round) {
    const auto half = random_vectors(5, 4, 10 + round);
    gossip_compressed(states, half, w, 0.37, id);
    for (const WorkerState& s : states) EXPECT_EQ(*s.x_hat_self, s.x);
    EXPECT_TRUE(shared_knowledge_consistent(states));
  }
}

TEST(GossipCompressed, EqualCopiesMakeCorrectionVanish) {
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  auto states = initial_states(Vector::Ones(3), w, true);
  const auto half = random_vectors(4, 3, 4);
  const compression::CompressorSpec sign(compression::Kind::kScaledSign, 3);
  gossip_compressed(states, half, w, 0.9, sign);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(states[k].x, half[k]);
}

TEST(GossipCompressed, PairExample) {
  const auto w = pair_average();
  auto states = initial_states(vec({0}), w, true);
  states[0].x_hat_self = vec({2});
  states[1].x_hat_neighbors[0] = vec({2});
  const std::vector<Vector> half = {vec({2}), vec({0})};
  const compression::CompressorSpec id(compression::Kind::kIdentity, 1);
  const std::uint64_t bits = gossip_compressed(states, half, w, 1.0, id);
  EXPECT_DOUBLE_EQ(states[0].x(0), 1.0);
  EXPECT_DOUBLE_EQ(states[1].x(0), 1.0);
  // Cross-check against exact averaging of the same snapshot.
  EXPECT_EQ(gossip_exact(half, w)[0], states[0].x);
  EXPECT_EQ(bits, 2u * 64u);
}

TEST(GossipCompressed, ConservesSumAndCountsDirectedEdges) {
  const auto w = topology::build_topology(topology::Kind::kGrid2d, 9);
  auto states = initial_states(Vector::Zero(8), w, true);
  const compression::CompressorSpec rk(compression::Kind::kRandomK, 8, 3);
  std::vector<Rng> rngs;
  for (int k = 0; k < 9; ++k) rngs.emplace_back(100 + k);
  for (int round = 0; round < 5; ++round) {
    auto half = random_vectors(9, 8, 20 + round);
    std::vector<Vector> before;
    for (int k = 0; k < 9; ++k) before.push_back(half[k]);
    const std::uint64_t bits = gossip_compressed(states, half, w, 0.5, rk, rngs);
    EXPECT_EQ(bits, static_cast<std::uint64_t>(w.directed_edges()) * rk.message_bits());
    std::vector<Vector> after;
    for (const WorkerState& s : states) after.push_back(s.x);
    EXPECT_LE((column_sum(after) - column_sum(before)).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_TRUE(shared_knowledge_consistent(states));
  }
}

TEST(SharedKnowledge, DetectsDivergentReplica) {
  const auto w = topology::build_topology(topology::Kind::kRing, 3);
  auto states = initial_states(Vector::Ones(2), w, true);
  EXPECT_TRUE(shared_knowledge_consistent(states));
  double& entry = states[1].x_hat_neighbors[0](1);
  entry = std::nextafter(entry, 2.0);
  EXPECT_FALSE(shared_knowledge_consistent(states));
}

TEST(InitialStates, ZeroMomentumAndCopies) {
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  const Vector x0 = vec({1, 2});
  for (const WorkerState& s : initial_states(x0, w, false)) {
    EXPECT_EQ(s.x, x0);
    EXPECT_EQ(s.m, Vector::Zero(2));
    EXPECT_FALSE(s.x_hat_self.has_value());
  }
  for (const WorkerState& s : initial_states(x0, w, true)) {
    EXPECT_EQ(*s.x_hat_self, x0);
    EXPECT_EQ(s.x_hat_neighbors.size(), 2u);
  }
}

TEST(DefaultGamma, UnitInputs) {
  const GammaChoice g = default_gamma(1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(g.gamma, 1.0 / 15.0);
  EXPECT_DOUBLE_EQ(g.alpha, 1.0 / 82.0);
}

TEST(DefaultGamma, ShrinksWithDelta) {
  double previous = default_gamma(0.2, 1.0, 4.0 / 3.0).gamma;
  for (double delta = 0.5; delta > 1e-6; delta /= 2) {
    const double g = default_gamma(0.2, delta, 4.0 / 3.0).gamma;
    EXPECT_LT(g, previous);
    EXPECT_GT(g, 0.0);
    previous = g;
  }
  EXPECT_LT(previous, 1e-6);
}

TEST(DefaultGamma, RejectsOutOfRange) {
  EXPECT_THROW(default_gamma(0.0, 0.5, 1.0), ParameterError);
  EXPECT_THROW(default_gamma(0.5, 0.0, 1.0), ParameterError);
  EXPECT_THROW(default_gamma(0.5, 0.5, 2.5), ParameterError);
}

TEST(OptimizerConfig, Validation) {
  OptimizerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.mu = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c.mu = 0.9;
  c.period = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c.period = 4;
  c.eta = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c.eta = 0.1;
  c.method = Method::kPdSgd;
  EXPECT_THROW(c.validate(), ParameterError);
  c.mu = 0.0;
  EXPECT_NO_THROW(c.validate());
  c.method = Method::kDSgd;
  EXPECT_THROW(c.validate(), ParameterError);
  c.period = 1;
  EXPECT_NO_THROW(c.validate());
  c.lr_decay.milestones = {10, 5};
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(OptimizerConfig, ScheduleAndPeriod) {
  OptimizerConfig c;
  c.eta = 1.0;
  c.lr_decay.factor = 0.1;
  c.lr_decay.milestones = {10, 20};
  EXPECT_DOUBLE_EQ(c.step_size(9), 1.0);
  EXPECT_DOUBLE_EQ(c.step_size(10), 0.1);
  EXPECT_NEAR(c.step_size(25), 0.01, 1e-15);
  c.period = 4;
  int rounds = 0;
  for (long long t = 0; t < 10; ++t) rounds += c.communicates_at(t);
  EXPECT_EQ(rounds, 2);
  c.method = Method::kCSgdm;
  EXPECT_EQ(c.effective_period(), 1);
}

TEST(Methods, RoundTripNames) {
  for (Method m : {Method::kPdSgdm, Method::kCpdSgdm, Method::kCSgdm,
                   Method::kDSgd, Method::kPdSgd}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("adam"), Error);
}

}  // namespace
}  // namespace pdsgdm::optim
