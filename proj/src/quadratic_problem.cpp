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
#include <cmath>

#include "pdsgdm/problems.hpp"

namespace pdsgdm::problems {
QuadraticProblem::QuadraticProblem(std::vector<Dataset> data)
    : Problem(std::move(data)) {
  const int d = dim();
  hessian_ = Matrix::Zero(d, d);
  Vector c = Vector::Zero(d);
  double e = 0.0;
  for (int k = 0; k < workers(); ++k) {
    const Dataset& ds = this->data(k);
    if (ds.features.cols() != d) {
      throw ShapeError("all workers must share the feature dimension");
    }
    const double n = ds.size();
    Part part;
    part.h = ds.features.transpose() * ds.features / n;
    part.c = ds.features.transpose() * ds.targets / n;
    part.e = ds.targets.squaredNorm() / (2.0 * n);
    hessian_ += part.h;
    c += part.c;
    e += part.e;
    parts_.push_back(std::move(part));
  }
  hessian_ /= workers();
  c /= workers();
  e /= workers();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_, Eigen::EigenvaluesOnly);
  smoothness_ = eig.eigenvalues().maxCoeff();

  // Minimum-norm solution of H x = c; exact for singular H as long as c lies
  // in its range, which holds because c = A^T b.
  Vector x_star = hessian_.completeOrthogonalDecomposition().solve(c);
  const double value = 0.5 * x_star.dot(hessian_ * x_star) - c.dot(x_star) + e;
  set_optimum(std::move(x_star), value);
}

double QuadraticProblem::worker_loss(int worker, const Vector& x) const {
  const Part& p = parts_.at(worker);
  return 0.5 * x.dot(p.h * x) - p.c.dot(x) + p.e;
}

Vector QuadraticProblem::full_gradient(int worker, const Vector& x) const {
  const Part& p = parts_.at(worker);
  return p.h * x - p.c;
}

std::optional<double> QuadraticProblem::suboptimality(const Vector& x) const {
  // f(x) - f* = 1/2 (x - x*)^T H (x - x*) avoids cancellation near x*.
  const Vector diff = x - *minimizer();
  return 0.5 * diff.dot(hessian_ * diff);
}

double QuadraticProblem::sample_loss(const Dataset& d, int i,
                                     const Vector& x) const {
  const double r = d.features.row(i).dot(x) - d.targets[i];
  return 0.5 * r * r;
}

void QuadraticProblem::add_sample_gradient(const Dataset& d, int i,
                                           const Vector& x, double scale,
                                           Vector& out) const {
  const double r = d.features.row(i).dot(x) - d.targets[i];
  out += (scale * r) * d.features.row(i).transpose();
}

}  // namespace pdsgdm::problems
