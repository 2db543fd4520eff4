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
#include "pdsgdm/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace pdsgdm::diagnostics {

std::optional<double> MetricsRecord::residual(const std::string& name) const {
  const auto it = invariant_residuals.find(name);
  if (it == invariant_residuals.end()) return std::nullopt;
  return it->second;
}

double consensus_distance(std::span<const Vector> models) {
  if (models.empty()) throw ParameterError("consensus_distance: no workers");
  Vector mean = Vector::Zero(models.front().size());
  for (const Vector& x : models) mean += x;
  mean /= static_cast<double>(models.size());
  double total = 0.0;
  for (const Vector& x : models) total += (x - mean).squaredNorm();
  return total;
}

double consensus_bound(optim::Method method, double eta, int period,
                       double g_bound, int workers, double mu, double rho,
                       double delta) {
  if (method == optim::Method::kCSgdm) return 0.0;
  const double base = eta * eta * period * period * g_bound * g_bound *
                      workers / ((1.0 - mu) * (1.0 - mu));
  if (method == optim::Method::kCpdSgdm) {
    const double alpha = rho * rho * delta / 82.0;
    return 4.0 * base * (1.0 + 4.0 / (alpha * alpha));
  }
  return 2.0 * base * (1.0 + 4.0 / (rho * rho));
}

AuxZReport check_aux_z(std::span<const Vector> xbar,
                       std::span<const Vector> gbar,
                       std::span<const Vector> mbar, double eta, double mu) {
  if (xbar.size() < 2) throw ParameterError("check_aux_z: need >= 2 means");
  if (!(mu < 1.0)) throw ParameterError("check_aux_z: mu must be < 1");
  const std::size_t steps = xbar.size() - 1;
  if (gbar.size() < steps || mbar.size() < steps) {
    throw ParameterError("check_aux_z: gradient/momentum history too short");
  }
  auto z = [&](std::size_t t) -> Vector {
    if (t == 0) return xbar[0];
    return (xbar[t] - mu * xbar[t - 1]) / (1.0 - mu);
  };
  AuxZReport report;
  const double c = eta / (1.0 - mu);
  for (std::size_t t = 0; t < steps; ++t) {
    const Vector inc = z(t + 1) - z(t) + c * gbar[t];
    report.max_increment_residual =
        std::max(report.max_increment_residual, inc.lpNorm<Eigen::Infinity>());
  }
  for (std::size_t t = 1; t <= steps; ++t) {
    const Vector off = z(t) - xbar[t] + (c * mu) * mbar[t - 1];
    report.max_offset_residual =
        std::max(report.max_offset_residual, off.lpNorm<Eigen::Infinity>());
  }
  return report;
}

std::optional<long long> time_to_threshold(
    std::span<const std::pair<long long, double>> series, double threshold,
    int window) {
  if (series.empty()) throw ParameterError("time_to_threshold: empty series");
  if (window < 1) throw ParameterError("time_to_threshold: window must be >= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i].second;
    if (i >= static_cast<std::size_t>(window)) sum -= series[i - window].second;
    const double count =
        static_cast<double>(std::min<std::size_t>(i + 1, window));
    if (sum / count <= threshold) return series[i].first;
  }
  return std::nullopt;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

MetricsCsvWriter::MetricsCsvWriter(std::ostream& out, bool with_holdout)
    : out_(out), with_holdout_(with_holdout) {}

void MetricsCsvWriter::write_header() {
  out_ << "t,f_bar,grad_norm_sq,consensus,comm_bits_cum,suboptimality,"
          "res_mean_preserve,res_aux_z,consensus_bound_rhs";
  if (with_holdout_) out_ << ",holdout_loss";
  out_ << '\n';
}

void MetricsCsvWriter::write(const MetricsRecord& r) {
  out_ << r.t << ',' << format_double(r.f_bar) << ','
       << format_double(r.grad_norm_sq) << ',' << format_double(r.consensus)
       << ',' << r.comm_bits_cum << ',' << format_optional(r.suboptimality)
       << ',' << format_optional(r.residual(kResMeanPreserve)) << ','
       << format_optional(r.residual(kResAuxZ)) << ','
       << format_optional(r.consensus_bound_rhs);
  if (with_holdout_) out_ << ',' << format_optional(r.holdout_loss);
  out_ << '\n';
}

}  // namespace pdsgdm::diagnostics
