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

#include "pdsgdm/diagnostics.hpp"
#include "pdsgdm/engine.hpp"

namespace pdsgdm::optim {
namespace {

std::shared_ptr<const problems::Problem> problem(problems::Kind kind, int workers,
                                                 double het = 0.5) {
  problems::ProblemConfig c;
  c.kind = kind;
  c.dim = 6;
  c.samples_per_worker = 32;
  c.workers = workers;
  c.heterogeneity = het;
  c.seed = 4;
  return problems::make_problem(c);
}

OptimizerConfig optimizer(Method method, int period, long long iterations,
                          double eta = 0.05, double mu = 0.9) {
  OptimizerConfig c;
  c.method = method;
  c.period = period;
  c.iterations = iterations;
  c.eta = eta;
  c.mu = mu;
  return c;
}

EngineOptions sign_options(int dim) {
  EngineOptions o;
  o.batch_size = 4;
  o.compressor = compression::CompressorSpec(compression::Kind::kScaledSign, dim);
  return o;
}

TEST(Engine, GossipCountFollowsPeriod) {
  auto p = problem(problems::Kind::kQuadratic, 4);
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  for (int period : {1, 3, 4, 7}) {
    Engine e(p, w, optimizer(Method::kPdSgdm, period, 50));
    while (!e.finished()) e.advance();
    EXPECT_EQ(e.gossip_rounds(), 50 / period);
    EXPECT_EQ(e.comm_bits(), static_cast<std::uint64_t>(50 / period) * 8 * 6 * 64);
  }
}

TEST(Engine, DecentralizedSgdIsPdSgdmWithoutMomentumEveryStep) {
  auto p = problem(problems::Kind::kLogistic, 4);
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  Engine d(p, w, optimizer(Method::kDSgd, 1, 40, 0.1, 0.0));
  Engine pd(p, w, optimizer(Method::kPdSgdm, 1, 40, 0.1, 0.0));
  while (!d.finished()) {
    d.advance();
    pd.advance();
    for (int k = 0; k < 4; ++k) ASSERT_EQ(d.workers()[k].x, pd.workers()[k].x);
  }
}

TEST(Engine, CentralizedBaselineKeepsOneModel) {
  auto p = problem(problems::Kind::kQuadratic, 3);
  const auto w = topology::build_topology(topology::Kind::kRing, 3);
  Engine c(p, w, optimizer(Method::kCSgdm, 4, 10));
  for (int t = 0; t < 10; ++t) {
    const diagnostics::MetricsRecord r = c.run_iteration();
    EXPECT_LE(r.consensus, 1e-24);  // mean of identical copies rounds
  }
  EXPECT_EQ(c.comm_bits(), 10u * 3 * 6 * 64);
}

TEST(Engine, CompressedRunKeepsSharedKnowledge) {
  auto p = problem(problems::Kind::kLogistic, 5);
  const auto w = topology::build_topology(topology::Kind::kRing, 5);
  OptimizerConfig config = optimizer(Method::kCpdSgdm, 2, 30);
  config.gamma = 0.4;
  Engine e(p, w, config, sign_options(6));
  EXPECT_DOUBLE_EQ(e.gamma(), 0.4);
  EXPECT_FALSE(e.gamma_from_default());
  while (!e.finished()) {
    e.advance();
    ASSERT_TRUE(shared_knowledge_consistent(e.workers()));
  }
  EXPECT_EQ(e.violations().total(), 0);
  EXPECT_EQ(e.comm_bits(), 15u * 10 * (6 + 64));
}

TEST(Engine, DefaultGammaComesFromTheSpectrum) {
  auto p = problem(problems::Kind::kQuadratic, 8);
  const auto w = topology::build_topology(topology::Kind::kRing, 8);
  Engine e(p, w, optimizer(Method::kCpdSgdm, 4, 1), sign_options(6));
  EXPECT_TRUE(e.gamma_from_default());
  EXPECT_DOUBLE_EQ(e.gamma(), default_gamma(w.rho(), 1.0 / 6, w.beta()).gamma);
}

TEST(Engine, RejectsInconsistentSetups) {
  auto p = problem(problems::Kind::kQuadratic, 4);
  EXPECT_THROW(Engine(p, topology::build_topology(topology::Kind::kRing, 5),
                      optimizer(Method::kPdSgdm, 4, 1)),
               ParameterError);
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  EXPECT_THROW(Engine(p, w, optimizer(Method::kCpdSgdm, 4, 1)), ParameterError);
  EXPECT_THROW(Engine(p, w, optimizer(Method::kCpdSgdm, 4, 1), sign_options(5)),
               ParameterError);
  EXPECT_THROW(Engine(p, w, optimizer(Method::kPdSgdm, 4, 1, 0.1, 1.0)),
               ParameterError);
}

TEST(Engine, ZeroStepMeansNoMovement) {
  auto p = problem(problems::Kind::kLogistic, 4);
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  OptimizerConfig config = optimizer(Method::kPdSgdm, 2, 20);
  config.lr_decay.factor = 1e-300;  // eta collapses to ~0 after t = 0
  config.lr_decay.milestones = {0};
  EngineOptions options;
  options.check_consensus_bound = true;
  Engine e(p, w, config, options);
  while (!e.finished()) {
    const auto r = e.run_iteration();
    EXPECT_LE(r.consensus, 1e-300);
  }
  EXPECT_EQ(diagnostics::consensus_bound(Method::kPdSgdm, 0.0, 4, 1.0, 8, 0.9, 0.2, 1.0),
            0.0);
}

TEST(Engine, ResidualsStayAtRoundoff) {
  auto p = problem(problems::Kind::kQuadratic, 6);
  const auto w = topology::build_topology(topology::Kind::kRing, 6);
  for (Method method : {Method::kPdSgdm, Method::kCpdSgdm}) {
    Engine e(p, w, optimizer(method, 3, 60), sign_options(6));
    while (!e.finished()) {
      const auto r = e.run_iteration();
      ASSERT_LE(*r.residual(diagnostics::kResMeanPreserve), 1e-10);
      ASSERT_LE(*r.residual(diagnostics::kResAuxZ), 1e-8);
    }
    EXPECT_EQ(e.violations().total(), 0);
  }
}

TEST(Engine, StepDecaySkipsOnlyTheIncrementIdentity) {
  auto p = problem(problems::Kind::kQuadratic, 4);
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  OptimizerConfig config = optimizer(Method::kPdSgdm, 2, 40);
  config.lr_decay.milestones = {10, 25};
  Engine e(p, w, config);
  while (!e.finished()) e.advance();
  EXPECT_EQ(e.violations().aux_z, 0);
  EXPECT_EQ(e.violations().mean_preserve, 0);
}

TEST(Engine, NonFiniteStateAborts) {
  auto p = problem(problems::Kind::kQuadratic, 2);
  const auto w = topology::build_topology(topology::Kind::kComplete, 2);
  Engine e(p, w, optimizer(Method::kPdSgdm, 1, 5000, 50.0, 0.9));
  long long aborted = -1;
  try {
    while (!e.finished()) e.advance();
  } catch (const NumericAbort& a) {
    aborted = a.iteration();
  }
  EXPECT_GE(aborted, 0);
  EXPECT_LT(aborted, 5000);
}

TEST(Engine, StrictModeThrowsOnViolation) {
  auto p = problem(problems::Kind::kLogistic, 4);
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  EngineOptions tight;
  tight.bound_slack = -0.5;  // momentum bound below the observed gradients
  OptimizerConfig config = optimizer(Method::kPdSgd, 2, 10, 0.05, 0.0);
  Engine lenient(p, w, config, tight);
  while (!lenient.finished()) lenient.advance();
  EXPECT_GT(lenient.violations().momentum_bound, 0);

  config.strict = true;
  Engine strict(p, w, config, tight);
  EXPECT_THROW(strict.advance(), InvariantViolation);
}

TEST(Engine, IdenticalSeedsReproduceBitwise) {
  auto p = problem(problems::Kind::kMlp, 4);
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  EngineOptions options;
  options.seed = 42;
  Engine a(p, w, optimizer(Method::kPdSgdm, 2, 30), options);
  Engine b(p, w, optimizer(Method::kPdSgdm, 2, 30), options);
  options.seed = 43;
  Engine c(p, w, optimizer(Method::kPdSgdm, 2, 30), options);
  while (!a.finished()) {
    a.advance();
    b.advance();
    c.advance();
  }
  for (int k = 0; k < 4; ++k) EXPECT_EQ(a.workers()[k].x, b.workers()[k].x);
  EXPECT_NE(a.workers()[0].x, c.workers()[0].x);
}

TEST(Engine, HistoryFeedsPostHocAuxZ) {
  auto p = problem(problems::Kind::kLogistic, 4);
  const auto w = topology::build_topology(topology::Kind::kRing, 4);
  EngineOptions options;
  options.keep_history = true;
  const OptimizerConfig config = optimizer(Method::kPdSgdm, 4, 50);
  Engine e(p, w, config, options);
  while (!e.finished()) e.advance();
  ASSERT_EQ(e.mean_history().size(), 51u);
  ASSERT_EQ(e.gradient_history().size(), 50u);
  const auto report = diagnostics::check_aux_z(
      e.mean_history(), e.gradient_history(), e.momentum_history(), config.eta,
      config.mu);
  EXPECT_LE(report.max_residual(), 1e-8);
  EXPECT_LE((e.mean_history().back() - e.mean_model()).norm(), 0.0);
}

}  // namespace
}  // namespace pdsgdm::optim
