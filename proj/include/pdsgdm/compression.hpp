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
#ifndef PDSGDM_COMPRESSION_HPP_
#define PDSGDM_COMPRESSION_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include "pdsgdm/common.hpp"

namespace pdsgdm::compression {

enum class Kind { kIdentity, kScaledSign, kTopK, kRandomK };

std::string_view to_string(Kind kind);
Kind parse_kind(std::string_view name);

// A delta-contraction operator bound to a dimension. Immutable.
class CompressorSpec {
 public:
  // k is required for top_k / random_k (1 <= k <= dim) and ignored otherwise.
  CompressorSpec(Kind kind, int dim, int k = 0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  int k() const { return k_; }
  // Guaranteed delta: 1 for identity, 1/d for scaled_sign, k/d for top_k and
  // random_k. For random_k the bound holds only in expectation.
  double delta_bound() const { return delta_; }
  bool expectation_only() const { return kind_ == Kind::kRandomK; }
  bool needs_rng() const { return kind_ == Kind::kRandomK; }
  // Wire size of one compressed message; depends only on (kind, dim, k).
  std::uint64_t message_bits() const;

  std::string describe() const;

 private:
  Kind kind_;
  int dim_;
  int k_;
  double delta_;
};

struct Compressed {
  Vector q;
  std::uint64_t bits = 0;
};

// Q(x) expanded back to a dense vector. rng is only touched by random_k and
// must be non-null for it. Throws NumericError on non-finite input and
// ShapeError on a dimension mismatch.
Compressed compress(const CompressorSpec& spec, const Vector& x,
                    Rng* rng = nullptr);

struct ContractionReport {
  std::string compressor;
  int trials = 0;  // samples evaluated, adversarial ones included
  double bound = 0.0;  // 1 - delta_bound
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  double stddev_ratio = 0.0;
  long long violations = 0;
  bool expectation_only = false;
  bool passed = false;
  std::string worst_input;  // description of the arg-max sample

  std::string describe() const;
};

// Samples standard-normal vectors plus one-hot, constant and alternating-sign
// inputs and measures ||x - Q(x)||^2 / ||x||^2. Deterministic operators pass
// iff every ratio is <= 1 - delta + 1e-12; random_k passes iff the empirical
// mean is within three standard errors of 1 - k/d.
ContractionReport verify_contraction(const CompressorSpec& spec, int trials,
                                     std::uint64_t seed);

}  // namespace pdsgdm::compression

#endif  // PDSGDM_COMPRESSION_HPP_
