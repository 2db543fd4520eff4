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
#include "pdsgdm/optim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace pdsgdm::optim {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kPdSgdm:
      return "pd_sgdm";
    case Method::kCpdSgdm:
      return "cpd_sgdm";
    case Method::kCSgdm:
      return "c_sgdm";
    case Method::kDSgd:
      return "d_sgd";
    case Method::kPdSgd:
      return "pd_sgd";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "pd_sgdm") return Method::kPdSgdm;
  if (name == "cpd_sgdm") return Method::kCpdSgdm;
  if (name == "c_sgdm") return Method::kCSgdm;
  if (name == "d_sgd") return Method::kDSgd;
  if (name == "pd_sgd") return Method::kPdSgd;
  throw ParameterError("unknown method '" + std::string(name) +
                       "' (expected pd_sgdm, cpd_sgdm, c_sgdm, d_sgd, pd_sgd)");
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ParameterError("eta must be > 0");
  }
  if (!(mu >= 0.0)) throw ParameterError("mu must be >= 0");
  if (!(mu < 1.0)) throw ParameterError("mu must be < 1");
  if (period < 1) throw ParameterError("period must be >= 1");
  if (iterations < 0) throw ParameterError("iterations must be >= 0");
  if (gamma && !(*gamma > 0.0)) throw ParameterError("gamma must be > 0");
  if ((method == Method::kDSgd || method == Method::kPdSgd) && mu != 0.0) {
    throw ParameterError("mu must be 0 for " + std::string(to_string(method)));
  }
  if (method == Method::kDSgd && period != 1) {
    throw ParameterError("period must be 1 for d_sgd");
  }
  if (!(lr_decay.factor > 0.0)) {
    throw ParameterError("lr_decay.factor must be > 0");
  }
  for (std::size_t i = 0; i < lr_decay.milestones.size(); ++i) {
    if (lr_decay.milestones[i] < 0 ||
        (i > 0 && lr_decay.milestones[i] <= lr_decay.milestones[i - 1])) {
      throw ParameterError(
          "lr_decay.milestones must be non-negative and increasing");
    }
  }
}

double OptimizerConfig::effective_mu() const {
  return (method == Method::kDSgd || method == Method::kPdSgd) ? 0.0 : mu;
}

int OptimizerConfig::effective_period() const {
  return (method == Method::kDSgd || method == Method::kCSgdm) ? 1 : period;
}

double OptimizerConfig::step_size(long long t) const {
  double value = eta;
  for (long long milestone : lr_decay.milestones) {
    if (t >= milestone) value *= lr_decay.factor;
  }
  return value;
}

std::vector<WorkerState> initial_states(const Vector& x0,
                                        const topology::MixingMatrix& w,
                                        bool with_auxiliary) {
  std::vector<WorkerState> states(w.workers());
  for (int k = 0; k < w.workers(); ++k) {
    WorkerState& s = states[k];
    s.x = x0;
    s.m = Vector::Zero(x0.size());
    if (with_auxiliary) {
      s.x_hat_self = x0;
      for (int j : w.neighbors(k)) s.x_hat_neighbors.emplace(j, x0);
    }
  }
  return states;
}

Vector local_step(WorkerState& state, const Vector& grad, double eta,
                  double mu) {
  if (grad.size() != state.x.size() || state.m.size() != state.x.size()) {
    throw ShapeError("local_step: gradient and state dimensions differ");
  }
  state.m = mu * state.m + grad;
  Vector half = state.x - eta * state.m;
  if (!state.m.allFinite() || !half.allFinite()) {
    throw NumericError("local_step produced a non-finite value");
  }
  return half;
}

std::vector<Vector> gossip_exact(std::span<const Vector> half,
                                 const topology::MixingMatrix& w) {
  const int k_total = w.workers();
  if (static_cast<int>(half.size()) != k_total) {
    throw ShapeError("gossip_exact: one intermediate model per worker needed");
  }
  std::vector<Vector> next(k_total);
  for (int k = 0; k < k_total; ++k) {
    Vector acc = Vector::Zero(half[k].size());
    for (int j : w.closed_neighborhood(k)) acc += w.weight(k, j) * half[j];
    next[k] = std::move(acc);
  }
  return next;
}

std::uint64_t gossip_compressed(std::span<WorkerState> states,
                                std::span<const Vector> half,
                                const topology::MixingMatrix& w, double gamma,
                                const compression::CompressorSpec& compressor,
                                std::span<Rng> compression_rngs) {
  const int k_total = w.workers();
  if (static_cast<int>(states.size()) != k_total ||
      static_cast<int>(half.size()) != k_total) {
    throw ShapeError("gossip_compressed: one state per worker needed");
  }
  if (compressor.needs_rng() &&
      static_cast<int>(compression_rngs.size()) != k_total) {
    throw ParameterError("gossip_compressed: random compressor needs one "
                         "stream per worker");
  }

  // (1) consensus step from the worker's own view of the auxiliary copies.
  for (int k = 0; k < k_total; ++k) {
    WorkerState& s = states[k];
    if (!s.x_hat_self) {
      throw ParameterError("gossip_compressed: auxiliary copies missing");
    }
    const Vector& own = *s.x_hat_self;
    Vector correction = Vector::Zero(own.size());
    for (int j : w.closed_neighborhood(k)) {
      if (j == k) continue;  // w_kk (x_hat_k - x_hat_k) vanishes
      correction += w.weight(k, j) * (s.x_hat_neighbors.at(j) - own);
    }
    s.x = half[k] + gamma * correction;
  }

  // (2) compressed deltas against the public copy.
  std::vector<Vector> q(k_total);
  std::uint64_t bits = 0;
  for (int k = 0; k < k_total; ++k) {
    Rng* rng = compressor.needs_rng() ? &compression_rngs[k] : nullptr;
    compression::Compressed c =
        compress(compressor, states[k].x - *states[k].x_hat_self, rng);
    bits += c.bits * static_cast<std::uint64_t>(w.neighbors(k).size());
    q[k] = std::move(c.q);
  }

  // (3) every holder of a copy applies the same delta. An uncompressed delta
  // lands exactly on x; assign it so rounding cannot leave x_hat an ulp off.
  if (compressor.kind() == compression::Kind::kIdentity) {
    for (int k = 0; k < k_total; ++k) {
      WorkerState& s = states[k];
      *s.x_hat_self = s.x;
      for (auto& [j, copy] : s.x_hat_neighbors) copy = states[j].x;
    }
    return bits;
  }
  for (int k = 0; k < k_total; ++k) {
    WorkerState& s = states[k];
    *s.x_hat_self += q[k];
    for (auto& [j, copy] : s.x_hat_neighbors) copy += q[j];
  }
  return bits;
}

bool shared_knowledge_consistent(std::span<const WorkerState> states) {
  for (const WorkerState& s : states) {
    for (const auto& [j, copy] : s.x_hat_neighbors) {
      const auto& source = states[j].x_hat_self;
      if (!source || source->size() != copy.size()) return false;
      for (Eigen::Index i = 0; i < copy.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(copy[i]) !=
            std::bit_cast<std::uint64_t>((*source)[i])) {
          return false;
        }
      }
    }
  }
  return true;
}

GammaChoice default_gamma(double rho, double delta, double beta) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ParameterError("rho must be in (0, 1]");
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw ParameterError("delta must be in (0, 1]");
  }
  if (!(beta >= 0.0 && beta <= 2.0)) throw ParameterError("beta must be in [0, 2]");
  const double denominator = 16.0 * rho + rho * rho + 4.0 * beta * beta +
                             2.0 * rho * beta * beta - 8.0 * rho * delta;
  if (!(denominator > 0.0)) {
    throw ParameterError("default_gamma: non-positive denominator");
  }
  return {rho * delta / denominator, rho * rho * delta / 82.0};
}

}  // namespace pdsgdm::optim
