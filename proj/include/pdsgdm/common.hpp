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
#ifndef PDSGDM_COMMON_HPP_
#define PDSGDM_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pdsgdm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameter (dimension, k, worker count, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Matrix or vector of the wrong shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered in a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Graph construction or spectral failure.
class TopologyError : public Error {
 public:
  using Error::Error;
};

// Independent random streams used by the simulation.
enum class Stream : std::uint64_t {
  kProblemData = 1,
  kSampling = 2,
  kCompression = 3,
  kDiagnostics = 4,
};

// Mixes (base seed, stream, index) into a seed with splitmix64 so that
// nearby inputs give uncorrelated generator states.
std::uint64_t derive_seed(std::uint64_t base, Stream stream,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t base, Stream stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(base, stream, index));
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace pdsgdm

#endif  // PDSGDM_COMMON_HPP_
