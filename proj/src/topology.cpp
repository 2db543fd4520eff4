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
#include "pdsgdm/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pdsgdm::topology {
namespace {

using Edges = std::vector<std::pair<int, int>>;

Matrix metropolis_weights(int k, const Edges& edges) {
  std::vector<int> degree(k, 0);
  for (const auto& [a, b] : edges) {
    ++degree[a];
    ++degree[b];
  }
  Matrix w = Matrix::Zero(k, k);
  for (const auto& [a, b] : edges) {
    const double value = 1.0 / (1.0 + std::max(degree[a], degree[b]));
    w(a, b) = value;
    w(b, a) = value;
  }
  for (int i = 0; i < k; ++i) {
    double off = 0.0;
    for (int j = 0; j < k; ++j) {
      if (j != i) off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return w;
}

Edges ring_edges(int k) {
  Edges edges;
  if (k == 2) {
    edges.emplace_back(0, 1);
  } else if (k >= 3) {
    for (int i = 0; i < k; ++i) edges.emplace_back(i, (i + 1) % k);
  }
  return edges;
}

Edges path_edges(int k) {
  Edges edges;
  for (int i = 0; i + 1 < k; ++i) edges.emplace_back(i, i + 1);
  return edges;
}

Edges grid_edges(int side) {
  Edges edges;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const int id = r * side + c;
      if (c + 1 < side) edges.emplace_back(id, id + 1);
      if (r + 1 < side) edges.emplace_back(id, id + side);
    }
  }
  return edges;
}

double parse_entry(const std::string& token) {
  const auto slash = token.find('/');
  std::size_t used = 0;
  try {
    if (slash == std::string::npos) {
      const double v = std::stod(token, &used);
      if (used == token.size()) return v;
    } else {
      const std::string num = token.substr(0, slash);
      const std::string den = token.substr(slash + 1);
      std::size_t used_den = 0;
      const double n = std::stod(num, &used);
      const double d = std::stod(den, &used_den);
      if (used == num.size() && used_den == den.size() && d != 0.0) {
        return n / d;
      }
    }
  } catch (const std::exception&) {
  }
  throw ParameterError("mixing matrix: cannot parse entry '" + token + "'");
}

}  // namespace

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::kRing:
      return "ring";
    case Kind::kComplete:
      return "complete";
    case Kind::kGrid2d:
      return "grid2d";
    case Kind::kPath:
      return "path";
    case Kind::kCustom:
      return "custom";
  }
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  if (name == "ring") return Kind::kRing;
  if (name == "complete") return Kind::kComplete;
  if (name == "grid2d") return Kind::kGrid2d;
  if (name == "path") return Kind::kPath;
  if (name == "custom") return Kind::kCustom;
  throw ParameterError("unknown topology kind '" + std::string(name) +
                       "' (expected ring, complete, grid2d, path, custom)");
}

std::string ValidationReport::describe() const {
  std::ostringstream out;
  out << (passed ? "pass" : "fail") << ": row_dev=" << max_row_deviation
      << " col_dev=" << max_col_deviation << " asym=" << max_asymmetry
      << " min=" << min_entry << " max=" << max_entry
      << " tol=" << tolerance;
  return out.str();
}

ValidationReport validate_doubly_stochastic(const Matrix& w, double tol) {
  if (w.rows() != w.cols() || w.rows() == 0) {
    throw ShapeError("mixing matrix must be square and non-empty, got " +
                     std::to_string(w.rows()) + "x" +
                     std::to_string(w.cols()));
  }
  ValidationReport r;
  r.tolerance = tol;
  r.min_entry = w.minCoeff();
  r.max_entry = w.maxCoeff();
  r.max_row_deviation = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  r.max_col_deviation = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  r.max_asymmetry = (w - w.transpose()).cwiseAbs().maxCoeff();
  r.passed = w.allFinite() && r.max_row_deviation <= tol &&
             r.max_col_deviation <= tol && r.max_asymmetry <= tol &&
             r.min_entry >= -tol && r.max_entry <= 1.0 + tol;
  return r;
}

SpectralInfo spectral_gap(const Matrix& w) {
  if (w.rows() != w.cols() || w.rows() == 0) {
    throw ShapeError("spectral_gap: matrix must be square and non-empty");
  }
  SpectralInfo info;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(w, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw TopologyError("spectral_gap: eigensolver did not converge");
  }
  info.eigenvalues = solver.eigenvalues();
  const Vector& lambda = info.eigenvalues;
  const Eigen::Index k = lambda.size();
  info.beta = (1.0 - lambda.array()).maxCoeff();
  if (k == 1) {
    info.rho = 1.0;
    return info;
  }
  // The leading eigenvalue 1 belongs to the consensus vector; remove it by
  // picking the eigenvector most aligned with 1/sqrt(K).
  const Vector ones = Vector::Constant(k, 1.0 / std::sqrt(double(k)));
  Eigen::Index lead = 0;
  (solver.eigenvectors().transpose() * ones).cwiseAbs().maxCoeff(&lead);
  double second = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (i != lead) second = std::max(second, std::abs(lambda[i]));
  }
  if (second >= 1.0 - 1e-12) {
    throw TopologyError(
        "zero spectral gap: |lambda_2| = 1 (graph disconnected or periodic)");
  }
  info.rho = 1.0 - second;
  return info;
}

double consensus_operator_norm(const Matrix& w) {
  const Eigen::Index k = w.rows();
  const Matrix centered = w - Matrix::Constant(k, k, 1.0 / double(k));
  Eigen::JacobiSVD<Matrix> svd(centered);
  return svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
}

MixingMatrix::MixingMatrix(Matrix weights, Kind kind)
    : weights_(std::move(weights)), kind_(kind) {
  const ValidationReport report =
      validate_doubly_stochastic(weights_, kConstructionTolerance);
  if (!report.passed) {
    throw TopologyError("mixing matrix is not symmetric doubly stochastic (" +
                        report.describe() + ")");
  }
  spectral_ = spectral_gap(weights_);
  const int k = workers();
  neighbors_.resize(k);
  closed_.resize(k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (weights_(i, j) > 0.0 || i == j) closed_[i].push_back(j);
      if (j != i && weights_(i, j) > 0.0) neighbors_[i].push_back(j);
    }
    directed_edges_ += static_cast<long long>(neighbors_[i].size());
  }
}

MixingMatrix build_topology(Kind kind, int workers) {
  if (workers < 1) {
    throw ParameterError("topology.workers must be >= 1, got " +
                         std::to_string(workers));
  }
  switch (kind) {
    case Kind::kComplete:
      return MixingMatrix(
          Matrix::Constant(workers, workers, 1.0 / double(workers)), kind);
    case Kind::kRing:
      if (workers >= 3) {
        // 2-regular: Metropolis reduces to uniform thirds.
        Matrix w = Matrix::Zero(workers, workers);
        for (int i = 0; i < workers; ++i) {
          w(i, i) = 1.0 / 3.0;
          w(i, (i + 1) % workers) = 1.0 / 3.0;
          w(i, (i + workers - 1) % workers) = 1.0 / 3.0;
        }
        return MixingMatrix(std::move(w), kind);
      }
      return MixingMatrix(metropolis_weights(workers, ring_edges(workers)),
                          kind);
    case Kind::kPath:
      return MixingMatrix(metropolis_weights(workers, path_edges(workers)),
                          kind);
    case Kind::kGrid2d: {
      const int side = static_cast<int>(std::lround(std::sqrt(workers)));
      if (side * side != workers) {
        throw ParameterError("grid2d requires a perfect-square worker count, "
                             "got " + std::to_string(workers));
      }
      return MixingMatrix(metropolis_weights(workers, grid_edges(side)), kind);
    }
    case Kind::kCustom:
      throw ParameterError(
          "custom topologies are loaded from topology.custom_path");
  }
  throw ParameterError("unknown topology kind");
}

MixingMatrix parse_mixing_matrix(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) row.push_back(parse_entry(token));
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto k = static_cast<Eigen::Index>(rows.size());
  Matrix w(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != k) {
      throw ShapeError("mixing matrix row " + std::to_string(i + 1) +
                       " has " + std::to_string(rows[i].size()) +
                       " entries, expected " + std::to_string(k));
    }
    for (Eigen::Index j = 0; j < k; ++j) w(i, j) = rows[i][j];
  }
  if (k == 0) throw ShapeError("mixing matrix file is empty");
  return MixingMatrix(std::move(w), Kind::kCustom);
}

MixingMatrix load_mixing_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open mixing matrix file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_mixing_matrix(buffer.str());
}

}  // namespace pdsgdm::topology
