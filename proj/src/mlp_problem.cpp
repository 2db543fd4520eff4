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

int parameter_count(int inputs, int hidden) {
  return hidden * inputs + 2 * hidden + 1;
}

}  // namespace

MlpProblem::MlpProblem(std::vector<Dataset> data, int hidden,
                       double regularization, std::uint64_t seed,
                       Dataset holdout)
    : Problem(std::move(data), std::move(holdout)),
      inputs_(Problem::dim()),
      hidden_(hidden),
      lambda_(regularization) {
  if (hidden < 1) throw ParameterError("mlp hidden width must be >= 1");
  set_model_dim(parameter_count(inputs_, hidden_));
  Rng rng = make_rng(seed, Stream::kProblemData, 99);
  std::normal_distribution<double> normal(0.0, 1.0);
  x0_ = Vector::Zero(dim());
  const double w1_scale = 1.0 / std::sqrt(static_cast<double>(inputs_));
  const double w2_scale = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (int i = 0; i < hidden_ * inputs_; ++i) x0_[i] = w1_scale * normal(rng);
  for (int i = 0; i < hidden_; ++i) {
    x0_[hidden_ * inputs_ + hidden_ + i] = w2_scale * normal(rng);
  }
}

double MlpProblem::sample_loss(const Dataset& d, int i, const Vector& x) const {
  const int h = hidden_;
  const int m = inputs_;
  Eigen::Map<const RowMatrix> w1(x.data(), h, m);
  const auto b1 = x.segment(h * m, h);
  const auto w2 = x.segment(h * m + h, h);
  const double b2 = x[h * m + 2 * h];
  const Vector act = (w1 * d.features.row(i).transpose() + b1).array().tanh();
  const double r = w2.dot(act) + b2 - d.targets[i];
  return 0.5 * r * r + 0.5 * lambda_ * x.squaredNorm();
}

void MlpProblem::add_sample_gradient(const Dataset& d, int i, const Vector& x,
                                     double scale, Vector& out) const {
  const int h = hidden_;
  const int m = inputs_;
  Eigen::Map<const RowMatrix> w1(x.data(), h, m);
  const auto b1 = x.segment(h * m, h);
  const auto w2 = x.segment(h * m + h, h);
  const double b2 = x[h * m + 2 * h];
  const auto a = d.features.row(i).transpose();
  const Vector act = (w1 * a + b1).array().tanh();
  const double r = scale * (w2.dot(act) + b2 - d.targets[i]);
  const Vector delta =
      (r * w2.array() * (1.0 - act.array().square())).matrix();

  Eigen::Map<RowMatrix> dw1(out.data(), h, m);
  dw1.noalias() += delta * a.transpose();
  out.segment(h * m, h) += delta;
  out.segment(h * m + h, h) += r * act;
  out[h * m + 2 * h] += r;
  out += (scale * lambda_) * x;
}

// Largest Hessian eigenvalue magnitude by power iteration on central
// finite-difference Hessian-vector products, maximised over a few points
// around the initial parameters.
double MlpProblem::smoothness() const {
  if (smoothness_) return *smoothness_;
  Rng rng = make_rng(0, Stream::kDiagnostics, 31);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = 0.0;
  for (int point = 0; point < 4; ++point) {
    Vector x = x0_;
    if (point > 0) {
      for (int j = 0; j < dim(); ++j) x[j] += 0.5 * normal(rng);
    }
    Vector v(dim());
    for (int j = 0; j < dim(); ++j) v[j] = normal(rng);
    v.normalize();
    double estimate = 0.0;
    const double eps = 1e-5 * (1.0 + x.norm());
    for (int iter = 0; iter < 40; ++iter) {
      const Vector hv =
          (global_gradient(x + eps * v) - global_gradient(x - eps * v)) /
          (2.0 * eps);
      estimate = hv.norm();
      if (estimate == 0.0) break;
      v = hv / estimate;
    }
    best = std::max(best, estimate);
  }
  smoothness_ = best;
  return best;
}

}  // namespace pdsgdm::problems
