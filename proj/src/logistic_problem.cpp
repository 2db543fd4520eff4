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
#include <algorithm>
#include <cmath>

#include "pdsgdm/problems.hpp"

namespace pdsgdm::problems {
namespace {

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) {
  return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

// 1 / (1 + exp(z))
double sigmoid_neg(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

LogisticProblem::LogisticProblem(std::vector<Dataset> data,
                                 double regularization, Dataset holdout)
    : Problem(std::move(data), std::move(holdout)),
      lambda_(regularization) {
  if (lambda_ < 0.0) throw ParameterError("regularization must be >= 0");
  for (int k = 0; k < workers(); ++k) {
    const Dataset& d = this->data(k);
    if (d.features.cols() != dim()) {
      throw ShapeError("all workers must share the feature dimension");
    }
    for (int i = 0; i < d.size(); ++i) {
      if (d.targets[i] != 1.0 && d.targets[i] != -1.0) {
        throw ParameterError("logistic labels must be -1 or +1");
      }
    }
    max_row_norm_sq_ =
        std::max(max_row_norm_sq_, d.features.rowwise().squaredNorm().maxCoeff());
  }
  if (lambda_ > 0.0) solve_reference();
}

double LogisticProblem::smoothness() const {
  return 0.25 * max_row_norm_sq_ + lambda_;
}

std::optional<double> LogisticProblem::gradient_norm_bound(
    const Vector& center, double radius) const {
  return std::sqrt(max_row_norm_sq_) + lambda_ * (center.norm() + radius);
}

double LogisticProblem::sample_loss(const Dataset& d, int i,
                                    const Vector& x) const {
  const double margin = d.targets[i] * d.features.row(i).dot(x);
  return softplus_neg(margin) + 0.5 * lambda_ * x.squaredNorm();
}

void LogisticProblem::add_sample_gradient(const Dataset& d, int i,
                                          const Vector& x, double scale,
                                          Vector& out) const {
  const double y = d.targets[i];
  const double margin = y * d.features.row(i).dot(x);
  out += (-scale * y * sigmoid_neg(margin)) * d.features.row(i).transpose();
  out += (scale * lambda_) * x;
}

// Damped Newton on the global objective to a 1e-10 gradient norm. The
// objective is strongly convex for lambda > 0.
void LogisticProblem::solve_reference() {
  const int d = dim();
  Vector x = Vector::Zero(d);
  for (int iter = 0; iter < 100; ++iter) {
    const Vector g = global_gradient(x);
    if (g.norm() <= 1e-10) break;
    Matrix h = Matrix::Identity(d, d) * lambda_;
    for (int k = 0; k < workers(); ++k) {
      const Dataset& ds = data(k);
      const double w = 1.0 / (static_cast<double>(workers()) * ds.size());
      for (int i = 0; i < ds.size(); ++i) {
        const double s = sigmoid_neg(ds.targets[i] * ds.features.row(i).dot(x));
        h.noalias() += (w * s * (1.0 - s)) *
                       (ds.features.row(i).transpose() * ds.features.row(i));
      }
    }
    const Vector step = h.ldlt().solve(g);
    const double f0 = loss(x);
    double t = 1.0;
    Vector next = x - step;
    while (loss(next) > f0 - 0.25 * t * g.dot(step) && t > 1e-8) {
      t *= 0.5;
      next = x - t * step;
    }
    x = std::move(next);
  }
  const double value = loss(x);
  set_optimum(std::move(x), value);
}

}  // namespace pdsgdm::problems
