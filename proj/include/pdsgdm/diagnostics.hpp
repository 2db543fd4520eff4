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
#ifndef PDSGDM_DIAGNOSTICS_HPP_
#define PDSGDM_DIAGNOSTICS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdsgdm/common.hpp"
#include "pdsgdm/optim.hpp"

namespace pdsgdm::diagnostics {

// Floating-point-only identities are held to these absolute tolerances.
inline constexpr double kMeanPreserveTolerance = 1e-10;
inline constexpr double kAuxZTolerance = 1e-8;

// Residual names used in MetricsRecord::invariant_residuals.
inline constexpr const char* kResMeanPreserve = "mean_preserve";
inline constexpr const char* kResAuxZ = "aux_z";
inline constexpr const char* kResConsensusBound = "consensus_bound";
inline constexpr const char* kResMomentumBound = "momentum_bound";
inline constexpr const char* kResSharedKnowledge = "shared_knowledge";

struct MetricsRecord {
  long long t = 0;
  double f_bar = 0.0;
  double grad_norm_sq = 0.0;
  double consensus = 0.0;
  std::uint64_t comm_bits_cum = 0;
  std::optional<double> suboptimality;
  std::optional<double> consensus_bound_rhs;
  std::optional<double> holdout_loss;
  // Worst residual per monitor since the previous recorded row.
  std::map<std::string, double> invariant_residuals;

  std::optional<double> residual(const std::string& name) const;
};

// sum_k ||x_k - xbar||^2 with xbar the exact mean.
double consensus_distance(std::span<const Vector> models);

// Right-hand side of the consensus-distance bound for the method:
//   2 eta^2 p^2 G^2 K / (1-mu)^2 (1 + 4/rho^2)      exact gossip
//   4 eta^2 p^2 G^2 K / (1-mu)^2 (1 + 4/alpha^2)    compressed, alpha = rho^2 delta / 82
// c_sgdm keeps a single model, so its bound is 0. g_bound bounds gradient
// norms (not squared norms).
double consensus_bound(optim::Method method, double eta, int period,
                       double g_bound, int workers, double mu, double rho,
                       double delta);

struct AuxZReport {
  double max_increment_residual = 0.0;  // z_{t+1} - z_t + eta/(1-mu) gbar_t
  double max_offset_residual = 0.0;     // z_t - xbar_t + eta mu/(1-mu) mbar
  double max_residual() const {
    return std::max(max_increment_residual, max_offset_residual);
  }
};

// Post-hoc check over a recorded trajectory. xbar holds T+1 means, gbar and
// mbar the T averaged stochastic gradients and post-update momenta. The
// offset identity pairs z_t with the momentum buffer held when iteration t
// starts (mbar_{t-1}, zero at t = 0). Infinity-norm residuals.
AuxZReport check_aux_z(std::span<const Vector> xbar, std::span<const Vector> gbar,
                       std::span<const Vector> mbar, double eta, double mu);

// Smallest t whose trailing window mean (partial at the start) is <=
// threshold; nullopt if never.
std::optional<long long> time_to_threshold(
    std::span<const std::pair<long long, double>> series, double threshold,
    int window = 20);

// Writes the metrics CSV schema
//   t,f_bar,grad_norm_sq,consensus,comm_bits_cum,suboptimality,
//   res_mean_preserve,res_aux_z,consensus_bound_rhs[,holdout_loss]
// Missing values are empty fields; doubles use the shortest round-trip form.
class MetricsCsvWriter {
 public:
  MetricsCsvWriter(std::ostream& out, bool with_holdout = false);
  void write_header();
  void write(const MetricsRecord& record);

 private:
  std::ostream& out_;
  bool with_holdout_;
};

std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

}  // namespace pdsgdm::diagnostics

#endif  // PDSGDM_DIAGNOSTICS_HPP_
