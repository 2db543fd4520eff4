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
#ifndef PDSGDM_OPTIM_HPP_
#define PDSGDM_OPTIM_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pdsgdm/common.hpp"
#include "pdsgdm/compression.hpp"
#include "pdsgdm/topology.hpp"

namespace pdsgdm::optim {

enum class Method {
  kPdSgdm,   // periodic decentralized momentum SGD
  kCpdSgdm,  // the same with compressed gossip over auxiliary copies
  kCSgdm,    // centralized momentum SGD on the averaged gradient
  kDSgd,     // decentralized SGD: no momentum, gossip every step
  kPdSgd,    // periodic decentralized SGD: no momentum
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct LrDecay {
  double factor = 0.1;
  std::vector<long long> milestones;  // iterations at which eta *= factor
};

struct OptimizerConfig {
  Method method = Method::kPdSgdm;
  double eta = 0.01;
  double mu = 0.9;
  int period = 4;
  std::optional<double> gamma;  // cpd_sgdm only; absent -> default_gamma
  long long iterations = 1000;
  bool strict = false;
  LrDecay lr_decay;

  // Throws ParameterError naming the violated constraint.
  void validate() const;
  // mu and p actually used: d_sgd and pd_sgd force mu = 0; d_sgd and c_sgdm
  // communicate every step (p = 1).
  double effective_mu() const;
  int effective_period() const;
  double step_size(long long t) const;
  bool communicates_at(long long t) const {
    return (t + 1) % effective_period() == 0;
  }
};

// Per-worker buffers. The auxiliary copies are only populated for cpd_sgdm:
// x_hat_self is this worker's public copy, x_hat_neighbors[j] the local
// replica of neighbour j's public copy.
struct WorkerState {
  Vector x;
  Vector m;
  std::optional<Vector> x_hat_self;
  std::map<int, Vector> x_hat_neighbors;
};

// Identical x0 everywhere, m = 0; for cpd_sgdm every auxiliary copy starts at
// x0 as well.
std::vector<WorkerState> initial_states(const Vector& x0,
                                        const topology::MixingMatrix& w,
                                        bool with_auxiliary);

// m <- mu m + g; returns x - eta m. Throws NumericError on non-finite output.
Vector local_step(WorkerState& state, const Vector& grad, double eta,
                  double mu);

// x^(k) <- sum_j w_kj x_half^(j), read from the immutable snapshot `half`.
std::vector<Vector> gossip_exact(std::span<const Vector> half,
                                 const topology::MixingMatrix& w);

// One compressed round; updates x and all auxiliary copies in place and
// returns the bits put on the wire (one message per directed edge).
// compression_rngs must hold one stream per worker for random_k.
std::uint64_t gossip_compressed(std::span<WorkerState> states,
                                std::span<const Vector> half,
                                const topology::MixingMatrix& w, double gamma,
                                const compression::CompressorSpec& compressor,
                                std::span<Rng> compression_rngs = {});

// True iff every replica x_hat_neighbors[j] is bitwise equal to worker j's
// x_hat_self.
bool shared_knowledge_consistent(std::span<const WorkerState> states);

struct GammaChoice {
  double gamma = 0.0;
  double alpha = 0.0;  // rho^2 delta / 82
};

// gamma = rho delta / (16 rho + rho^2 + 4 beta^2 + 2 rho beta^2 - 8 rho delta)
GammaChoice default_gamma(double rho, double delta, double beta);

}  // namespace pdsgdm::optim

#endif  // PDSGDM_OPTIM_HPP_
