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
#include "pdsgdm/compression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace pdsgdm::compression {
namespace {

int ceil_log2(int d) {
  int bits = 0;
  while ((1LL << bits) < d) ++bits;
  return bits;
}

Vector scaled_sign(const Vector& x) {
  const double scale = x.lpNorm<1>() / static_cast<double>(x.size());
  Vector q(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // sign(0) := +1
    q[i] = x[i] < 0.0 ? -scale : scale;
  }
  return q;
}

Vector top_k(const Vector& x, int k) {
  std::vector<int> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&x](int a, int b) {
                      const double fa = std::abs(x[a]);
                      const double fb = std::abs(x[b]);
                      return fa > fb || (fa == fb && a < b);
                    });
  Vector q = Vector::Zero(x.size());
  for (int i = 0; i < k; ++i) q[order[i]] = x[order[i]];
  return q;
}

Vector random_k(const Vector& x, int k, Rng& rng) {
  // Partial Fisher-Yates over the index set.
  const int d = static_cast<int>(x.size());
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  Vector q = Vector::Zero(d);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, d - 1);
    std::swap(idx[i], idx[pick(rng)]);
    q[idx[i]] = x[idx[i]];
  }
  return q;
}

double contraction_ratio(const Vector& x, const Vector& q) {
  const double norm_sq = x.squaredNorm();
  return norm_sq == 0.0 ? 0.0 : (x - q).squaredNorm() / norm_sq;
}

}  // namespace

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::kIdentity:
      return "identity";
    case Kind::kScaledSign:
      return "scaled_sign";
    case Kind::kTopK:
      return "top_k";
    case Kind::kRandomK:
      return "random_k";
  }
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  if (name == "identity") return Kind::kIdentity;
  if (name == "scaled_sign" || name == "sign") return Kind::kScaledSign;
  if (name == "top_k") return Kind::kTopK;
  if (name == "random_k") return Kind::kRandomK;
  throw ParameterError("unknown compression kind '" + std::string(name) +
                       "' (expected identity, scaled_sign, top_k, random_k)");
}

CompressorSpec::CompressorSpec(Kind kind, int dim, int k)
    : kind_(kind), dim_(dim), k_(k) {
  if (dim < 1) {
    throw ParameterError("compressor dimension must be >= 1, got " +
                         std::to_string(dim));
  }
  switch (kind) {
    case Kind::kIdentity:
      k_ = dim;
      delta_ = 1.0;
      break;
    case Kind::kScaledSign:
      k_ = dim;
      // ||x - Q(x)||^2 = ||x||^2 - ||x||_1^2 / d and ||x||_1 >= ||x||_2.
      delta_ = 1.0 / dim;
      break;
    case Kind::kTopK:
    case Kind::kRandomK:
      if (k < 1 || k > dim) {
        throw ParameterError("compression.k must satisfy 1 <= k <= " +
                             std::to_string(dim) + ", got " +
                             std::to_string(k));
      }
      delta_ = static_cast<double>(k) / dim;
      break;
  }
}

std::uint64_t CompressorSpec::message_bits() const {
  const auto d = static_cast<std::uint64_t>(dim_);
  const auto k = static_cast<std::uint64_t>(k_);
  switch (kind_) {
    case Kind::kIdentity:
      return 64 * d;
    case Kind::kScaledSign:
      return d + 64;
    case Kind::kTopK:
      return k * (64 + static_cast<std::uint64_t>(ceil_log2(dim_)));
    case Kind::kRandomK:
      return k * 64 + 64;
  }
  return 0;
}

std::string CompressorSpec::describe() const {
  std::ostringstream out;
  out << to_string(kind_) << "(d=" << dim_;
  if (kind_ == Kind::kTopK || kind_ == Kind::kRandomK) out << ", k=" << k_;
  out << ", delta=" << delta_ << (expectation_only() ? ", in expectation" : "")
      << ")";
  return out.str();
}

Compressed compress(const CompressorSpec& spec, const Vector& x, Rng* rng) {
  if (x.size() != spec.dim()) {
    throw ShapeError("compress: vector has " + std::to_string(x.size()) +
                     " coordinates, compressor expects " +
                     std::to_string(spec.dim()));
  }
  if (!x.allFinite()) {
    throw NumericError("compress: non-finite input coordinate");
  }
  Compressed out;
  out.bits = spec.message_bits();
  switch (spec.kind()) {
    case Kind::kIdentity:
      out.q = x;
      break;
    case Kind::kScaledSign:
      out.q = scaled_sign(x);
      break;
    case Kind::kTopK:
      out.q = top_k(x, spec.k());
      break;
    case Kind::kRandomK:
      if (rng == nullptr) {
        throw ParameterError("random_k compression needs a random stream");
      }
      out.q = random_k(x, spec.k(), *rng);
      break;
  }
  return out;
}

std::string ContractionReport::describe() const {
  std::ostringstream out;
  out << compressor << ": trials=" << trials << " max_ratio=" << max_ratio
      << " mean_ratio=" << mean_ratio << " bound=" << bound
      << " violations=" << violations
      << (expectation_only ? " [expectation-only]" : "")
      << (passed ? " pass" : " FAIL");
  if (!passed) out << " worst=" << worst_input;
  return out.str();
}

ContractionReport verify_contraction(const CompressorSpec& spec, int trials,
                                     std::uint64_t seed) {
  if (trials < 1) throw ParameterError("verify_contraction: trials must be >= 1");
  const int d = spec.dim();
  Rng data_rng = make_rng(seed, Stream::kDiagnostics, 0);
  Rng comp_rng = make_rng(seed, Stream::kCompression, 0);
  std::normal_distribution<double> normal(0.0, 1.0);

  ContractionReport report;
  report.compressor = spec.describe();
  report.bound = 1.0 - spec.delta_bound();
  report.expectation_only = spec.expectation_only();

  double sum = 0.0;
  double sum_sq = 0.0;
  auto evaluate = [&](const Vector& x, const std::string& label) {
    const Compressed c = compress(spec, x, &comp_rng);
    const double ratio = contraction_ratio(x, c.q);
    if (ratio > report.max_ratio || report.trials == 0) {
      report.max_ratio = ratio;
      report.worst_input = label;
    }
    if (ratio > report.bound + 1e-12) ++report.violations;
    sum += ratio;
    sum_sq += ratio * ratio;
    ++report.trials;
  };

  Vector one_hot = Vector::Zero(d);
  one_hot[d - 1] = 1.0;
  evaluate(one_hot, "one-hot e_" + std::to_string(d - 1));
  evaluate(Vector::Constant(d, 1.0), "constant ones");
  Vector alternating(d);
  for (int i = 0; i < d; ++i) alternating[i] = (i % 2 == 0) ? 1.0 : -1.0;
  evaluate(alternating, "alternating signs");

  Vector x(d);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < d; ++i) x[i] = normal(data_rng);
    evaluate(x, "gaussian sample #" + std::to_string(t));
  }

  const double n = report.trials;
  report.mean_ratio = sum / n;
  const double var = std::max(0.0, sum_sq / n - report.mean_ratio * report.mean_ratio);
  report.stddev_ratio = std::sqrt(var * n / std::max(1.0, n - 1.0));
  if (spec.expectation_only()) {
    const double stderr_mean = report.stddev_ratio / std::sqrt(n);
    report.passed =
        std::abs(report.mean_ratio - report.bound) <= 3.0 * stderr_mean + 1e-12;
    if (!report.passed) {
      report.worst_input = "empirical mean outside 3 standard errors";
    }
  } else {
    report.passed = report.violations == 0;
  }
  return report;
}

}  // namespace pdsgdm::compression
