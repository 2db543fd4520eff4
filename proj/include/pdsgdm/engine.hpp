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
#ifndef PDSGDM_ENGINE_HPP_
#define PDSGDM_ENGINE_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdsgdm/compression.hpp"
#include "pdsgdm/diagnostics.hpp"
#include "pdsgdm/optim.hpp"
#include "pdsgdm/problems.hpp"
#include "pdsgdm/topology.hpp"

namespace pdsgdm::optim {

struct EngineOptions {
  int batch_size = 8;
  std::uint64_t seed = 0;
  std::optional<compression::CompressorSpec> compressor;  // cpd_sgdm only
  // Check the consensus-distance bound every iteration (meaningful only when
  // gradients are bounded, e.g. logistic problems).
  bool check_consensus_bound = false;
  // Multiplicative slack on the running G_hat; negative values tighten the
  // momentum and consensus monitors.
  double bound_slack = 0.05;
  // Keep xbar / gbar / mbar per iteration for post-hoc analysis.
  bool keep_history = false;
};

// Raised in strict mode when a monitor exceeds its tolerance.
class InvariantViolation : public Error {
 public:
  InvariantViolation(const std::string& what, long long iteration)
      : Error(what), iteration_(iteration) {}
  long long iteration() const { return iteration_; }

 private:
  long long iteration_;
};

// Raised when a worker buffer becomes NaN/Inf. iteration() is the step that
// produced it; the engine should not be advanced afterwards.
class NumericAbort : public NumericError {
 public:
  NumericAbort(const std::string& what, long long iteration)
      : NumericError(what), iteration_(iteration) {}
  long long iteration() const { return iteration_; }

 private:
  long long iteration_;
};

struct ViolationCounts {
  long long mean_preserve = 0;
  long long aux_z = 0;
  long long consensus_bound = 0;
  long long momentum_bound = 0;
  long long shared_knowledge = 0;

  long long total() const {
    return mean_preserve + aux_z + consensus_bound + momentum_bound +
           shared_knowledge;
  }
};

// Synchronous simulation of K workers. Each iteration maps gradient + local
// step over workers (each touching only its own buffers and random stream),
// then gossips from an immutable snapshot. Reductions over workers run in
// index order, so results do not depend on scheduling.
class Engine {
 public:
  Engine(std::shared_ptr<const problems::Problem> problem,
         topology::MixingMatrix mixing, OptimizerConfig config,
         EngineOptions options = {});

  long long iteration() const { return t_; }
  bool finished() const { return t_ >= config_.iterations; }

  // Advances one iteration and updates the invariant monitors.
  void advance();
  // advance() followed by record().
  diagnostics::MetricsRecord run_iteration();
  // Metrics of the current state. Residual fields hold the worst values since
  // the previous call.
  diagnostics::MetricsRecord record();

  std::span<const WorkerState> workers() const { return states_; }
  std::vector<Vector> models() const;
  const Vector& mean_model() const { return xbar_; }

  const OptimizerConfig& config() const { return config_; }
  const topology::MixingMatrix& mixing() const { return mixing_; }
  const problems::Problem& problem() const { return *problem_; }
  // Consensus step size in use (cpd_sgdm), 0 otherwise.
  double gamma() const { return gamma_; }
  bool gamma_from_default() const { return gamma_default_; }
  double delta() const { return delta_; }

  std::uint64_t comm_bits() const { return comm_bits_; }
  long long gossip_rounds() const { return gossip_rounds_; }
  double g_hat() const { return g_hat_; }
  const ViolationCounts& violations() const { return violations_; }
  const std::map<std::string, double>& worst_residuals() const {
    return worst_;
  }

  const std::vector<Vector>& mean_history() const { return xbar_hist_; }
  const std::vector<Vector>& gradient_history() const { return gbar_hist_; }
  const std::vector<Vector>& momentum_history() const { return mbar_hist_; }

 private:
  void note_residual(const char* name, double value, double tolerance,
                     long long& counter);
  Vector mean_of(const std::vector<Vector>& v) const;

  std::shared_ptr<const problems::Problem> problem_;
  topology::MixingMatrix mixing_;
  OptimizerConfig config_;
  EngineOptions options_;

  std::vector<WorkerState> states_;
  std::vector<Rng> sampling_rngs_;
  std::vector<Rng> compression_rngs_;

  double gamma_ = 0.0;
  bool gamma_default_ = false;
  double delta_ = 1.0;

  long long t_ = 0;
  Vector xbar_;
  Vector z_;
  double prev_eta_ = 0.0;
  double max_eta_ = 0.0;
  double g_hat_ = 0.0;
  double last_rhs_ = 0.0;
  std::uint64_t comm_bits_ = 0;
  long long gossip_rounds_ = 0;

  ViolationCounts violations_;
  std::map<std::string, double> pending_;
  std::map<std::string, double> worst_;

  std::vector<Vector> xbar_hist_;
  std::vector<Vector> gbar_hist_;
  std::vector<Vector> mbar_hist_;
};

}  // namespace pdsgdm::optim

#endif  // PDSGDM_ENGINE_HPP_
