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
#ifndef PDSGDM_TOPOLOGY_HPP_
#define PDSGDM_TOPOLOGY_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "pdsgdm/common.hpp"

namespace pdsgdm::topology {

enum class Kind { kRing, kComplete, kGrid2d, kPath, kCustom };

std::string_view to_string(Kind kind);
// Throws ParameterError for unknown names.
Kind parse_kind(std::string_view name);

struct ValidationReport {
  double max_row_deviation = 0.0;
  double max_col_deviation = 0.0;
  double max_asymmetry = 0.0;
  double min_entry = 0.0;
  double max_entry = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  std::string describe() const;
};

// Checks symmetry, unit row/column sums and entries in [0,1]. Throws
// ShapeError for a non-square input.
ValidationReport validate_doubly_stochastic(const Matrix& w, double tol);

struct SpectralInfo {
  double rho = 1.0;   // 1 - |lambda_2|
  double beta = 0.0;  // max_i (1 - lambda_i)
  Vector eigenvalues;  // ascending
};

// Spectral gap of a symmetric doubly-stochastic matrix. Throws TopologyError
// ("zero spectral gap") when |lambda_2| == 1, i.e. the graph is disconnected
// or periodic. A 1x1 matrix has rho = 1 by convention.
SpectralInfo spectral_gap(const Matrix& w);

// Immutable K x K mixing matrix with cached spectral quantities. Safe to share
// across workers.
class MixingMatrix {
 public:
  // Validates at kConstructionTolerance and computes the spectrum.
  MixingMatrix(Matrix weights, Kind kind);

  static constexpr double kConstructionTolerance = 1e-12;

  int workers() const { return static_cast<int>(weights_.rows()); }
  Kind kind() const { return kind_; }
  const Matrix& weights() const { return weights_; }
  double weight(int i, int j) const { return weights_(i, j); }
  double rho() const { return spectral_.rho; }
  double beta() const { return spectral_.beta; }
  const Vector& eigenvalues() const { return spectral_.eigenvalues; }

  // Indices j != k with w_kj > 0, ascending.
  const std::vector<int>& neighbors(int k) const { return neighbors_[k]; }
  // Neighbors plus k itself, ascending. Gossip sums run in this order.
  const std::vector<int>& closed_neighborhood(int k) const {
    return closed_[k];
  }
  // Number of directed messages in one gossip round (sum of degrees).
  long long directed_edges() const { return directed_edges_; }

 private:
  Matrix weights_;
  Kind kind_;
  SpectralInfo spectral_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> closed_;
  long long directed_edges_ = 0;
};

// Metropolis-Hastings weights over the named graph (uniform 1/K for complete).
// grid2d requires K to be a perfect square and uses a non-periodic lattice.
MixingMatrix build_topology(Kind kind, int workers);

// Reads a whitespace-delimited K x K matrix. Entries may be decimals or
// rationals such as "1/3". The result is validated like any built topology.
MixingMatrix load_mixing_matrix(const std::string& path);
MixingMatrix parse_mixing_matrix(std::string_view text);

// ||W - (1/K) 1 1^T||_2 computed from singular values, independent of the
// eigen-decomposition used for rho.
double consensus_operator_norm(const Matrix& w);

}  // namespace pdsgdm::topology

#endif  // PDSGDM_TOPOLOGY_HPP_
