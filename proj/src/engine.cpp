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
#include "pdsgdm/engine.hpp"

#include <algorithm>
#include <cmath>

namespace pdsgdm::optim {

Engine::Engine(std::shared_ptr<const problems::Problem> problem,
               topology::MixingMatrix mixing, OptimizerConfig config,
               EngineOptions options)
    : problem_(std::move(problem)),
      mixing_(std::move(mixing)),
      config_(std::move(config)),
      options_(std::move(options)) {
  config_.validate();
  if (!problem_) throw ParameterError("engine needs a problem");
  if (problem_->workers() != mixing_.workers()) {
    throw ParameterError("problem has " + std::to_string(problem_->workers()) +
                         " workers but the topology has " +
                         std::to_string(mixing_.workers()));
  }
  if (options_.batch_size < 1) throw ParameterError("batch size must be >= 1");

  const bool compressed = config_.method == Method::kCpdSgdm;
  if (compressed) {
    if (!options_.compressor) {
      throw ParameterError("cpd_sgdm requires a compression section");
    }
    if (options_.compressor->dim() != problem_->dim()) {
      throw ParameterError("compressor dimension does not match the model");
    }
    delta_ = options_.compressor->delta_bound();
    if (config_.gamma) {
      gamma_ = *config_.gamma;
    } else {
      gamma_ = default_gamma(mixing_.rho(), delta_, mixing_.beta()).gamma;
      gamma_default_ = true;
    }
  }

  const Vector x0 = problem_->initial_point();
  states_ = initial_states(x0, mixing_, compressed);
  const int k_total = mixing_.workers();
  for (int k = 0; k < k_total; ++k) {
    sampling_rngs_.push_back(make_rng(options_.seed, Stream::kSampling, k));
    compression_rngs_.push_back(
        make_rng(options_.seed, Stream::kCompression, k));
  }
  xbar_ = x0;
  z_ = x0;
  if (options_.keep_history) xbar_hist_.push_back(xbar_);
}

std::vector<Vector> Engine::models() const {
  std::vector<Vector> out;
  out.reserve(states_.size());
  for (const WorkerState& s : states_) out.push_back(s.x);
  return out;
}

Vector Engine::mean_of(const std::vector<Vector>& v) const {
  Vector sum = Vector::Zero(problem_->dim());
  for (const Vector& x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

void Engine::note_residual(const char* name, double value, double tolerance,
                           long long& counter) {
  double& pending = pending_[name];
  pending = std::max(pending, value);
  double& worst = worst_[name];
  worst = std::max(worst, value);
  if (value > tolerance) {
    ++counter;
    if (config_.strict) {
      throw InvariantViolation(std::string("invariant '") + name +
                                   "' violated: residual " +
                                   diagnostics::format_double(value) +
                                   " > " + diagnostics::format_double(tolerance),
                               t_);
    }
  }
}

void Engine::advance() {
  if (finished()) return;
  const int k_total = mixing_.workers();
  const double eta = config_.step_size(t_);
  const double mu = config_.effective_mu();
  max_eta_ = std::max(max_eta_, eta);

  std::vector<Vector> grads(k_total);
  std::vector<Vector> half(k_total);
  try {
    if (config_.method == Method::kCSgdm) {
      // One model, one momentum buffer, gradient averaged over workers.
      const Vector& x = states_[0].x;
      for (int k = 0; k < k_total; ++k) {
        grads[k] = problem_->stochastic_gradient(k, x, options_.batch_size,
                                                 sampling_rngs_[k])
                       .grad;
      }
      const Vector g = mean_of(grads);
      WorkerState central = states_[0];
      const Vector next = local_step(central, g, eta, mu);
      for (WorkerState& s : states_) {
        s.x = next;
        s.m = central.m;
      }
      comm_bits_ += static_cast<std::uint64_t>(k_total) *
                    static_cast<std::uint64_t>(problem_->dim()) * 64;
    } else {
      for (int k = 0; k < k_total; ++k) {
        grads[k] = problem_->stochastic_gradient(
                               k, states_[k].x, options_.batch_size,
                               sampling_rngs_[k])
                       .grad;
        half[k] = local_step(states_[k], grads[k], eta, mu);
      }
      if (config_.communicates_at(t_)) {
        ++gossip_rounds_;
        if (config_.method == Method::kCpdSgdm) {
          comm_bits_ += gossip_compressed(states_, half, mixing_, gamma_,
                                          *options_.compressor,
                                          compression_rngs_);
        } else {
          std::vector<Vector> next = gossip_exact(half, mixing_);
          for (int k = 0; k < k_total; ++k) states_[k].x = std::move(next[k]);
          comm_bits_ += static_cast<std::uint64_t>(mixing_.directed_edges()) *
                        static_cast<std::uint64_t>(problem_->dim()) * 64;
        }
      } else {
        for (int k = 0; k < k_total; ++k) states_[k].x = std::move(half[k]);
      }
    }
  } catch (const NumericError& e) {
    throw NumericAbort(e.what(), t_);
  }

  for (const WorkerState& s : states_) {
    if (!s.x.allFinite() || !s.m.allFinite()) {
      throw NumericAbort("non-finite worker state", t_);
    }
  }
  for (const Vector& g : grads) g_hat_ = std::max(g_hat_, g.norm());

  std::vector<Vector> momenta(k_total);
  for (int k = 0; k < k_total; ++k) momenta[k] = states_[k].m;
  const Vector gbar = mean_of(grads);
  const Vector mbar = mean_of(momenta);
  const Vector xbar_prev = xbar_;
  xbar_ = mean_of(models());

  // Mean recursion: xbar_{t+1} = xbar_t - eta mbar_t.
  note_residual(diagnostics::kResMeanPreserve,
                (xbar_ - (xbar_prev - eta * mbar)).lpNorm<Eigen::Infinity>(),
                diagnostics::kMeanPreserveTolerance,
                violations_.mean_preserve);

  // Auxiliary sequence z. The increment identity needs a constant step
  // between t-1 and t, so it is skipped across a decay milestone.
  const Vector z_next = (xbar_ - mu * xbar_prev) / (1.0 - mu);
  double aux = (z_next - xbar_ + (eta * mu / (1.0 - mu)) * mbar)
                   .lpNorm<Eigen::Infinity>();
  if (t_ == 0 || eta == prev_eta_) {
    aux = std::max(aux, (z_next - z_ + (eta / (1.0 - mu)) * gbar)
                            .lpNorm<Eigen::Infinity>());
  }
  note_residual(diagnostics::kResAuxZ, aux, diagnostics::kAuxZTolerance,
                violations_.aux_z);
  z_ = z_next;
  prev_eta_ = eta;

  const double g_bound = g_hat_ * (1.0 + options_.bound_slack);
  double m_excess = 0.0;
  for (const Vector& m : momenta) {
    m_excess = std::max(m_excess, m.norm() - g_bound / (1.0 - mu));
  }
  note_residual(diagnostics::kResMomentumBound, std::max(0.0, m_excess), 0.0,
                violations_.momentum_bound);

  if (options_.check_consensus_bound) {
    const double consensus = diagnostics::consensus_distance(models());
    last_rhs_ = diagnostics::consensus_bound(
        config_.method, max_eta_, config_.effective_period(), g_bound, k_total,
        mu, mixing_.rho(), delta_);
    note_residual(diagnostics::kResConsensusBound,
                  std::max(0.0, consensus - last_rhs_), 0.0,
                  violations_.consensus_bound);
  }

  if (config_.method == Method::kCpdSgdm && config_.communicates_at(t_)) {
    note_residual(diagnostics::kResSharedKnowledge,
                  shared_knowledge_consistent(states_) ? 0.0 : 1.0, 0.0,
                  violations_.shared_knowledge);
  }

  if (options_.keep_history) {
    xbar_hist_.push_back(xbar_);
    gbar_hist_.push_back(gbar);
    mbar_hist_.push_back(mbar);
  }
  ++t_;
}

diagnostics::MetricsRecord Engine::run_iteration() {
  advance();
  return record();
}

diagnostics::MetricsRecord Engine::record() {
  diagnostics::MetricsRecord r;
  r.t = t_;
  r.f_bar = problem_->loss(xbar_);
  r.grad_norm_sq = problem_->global_gradient(xbar_).squaredNorm();
  r.consensus = diagnostics::consensus_distance(models());
  r.comm_bits_cum = comm_bits_;
  r.suboptimality = problem_->suboptimality(xbar_);
  r.holdout_loss = problem_->holdout_loss(xbar_);
  if (options_.check_consensus_bound) r.consensus_bound_rhs = last_rhs_;
  r.invariant_residuals = std::move(pending_);
  pending_.clear();
  return r;
}

}  // namespace pdsgdm::optim
