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
#include "pdsgdm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdsgdm::problems {
namespace {

void check_config(const ProblemConfig& c) {
  if (c.dim < 1) {
    throw ParameterError("problem.dim must be >= 1, got " +
                         std::to_string(c.dim));
  }
  if (c.samples_per_worker < 1) {
    throw ParameterError("problem.samples_per_worker must be >= 1, got " +
                         std::to_string(c.samples_per_worker));
  }
  if (c.workers < 1) {
    throw ParameterError("worker count must be >= 1, got " +
                         std::to_string(c.workers));
  }
  if (!(c.heterogeneity >= 0.0 && c.heterogeneity <= 1.0)) {
    throw ParameterError("problem.heterogeneity must lie in [0, 1]");
  }
  if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0)) {
    throw ParameterError("problem.holdout_fraction must lie in [0, 1)");
  }
  if (c.kind == Kind::kMlp && c.hidden < 1) {
    throw ParameterError("problem.hidden must be >= 1");
  }
  if (c.regularization < 0.0) {
    throw ParameterError("problem.regularization must be >= 0");
  }
}

Vector gaussian_vector(int n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

std::vector<Dataset> quadratic_data(const ProblemConfig& c) {
  Rng rng = make_rng(c.seed, Stream::kProblemData, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vector x_true = gaussian_vector(c.dim, rng);
  const int generated = c.shared_dataset ? 1 : c.workers;
  std::vector<Dataset> data;
  for (int k = 0; k < generated; ++k) {
    const Vector feature_shift = c.heterogeneity * gaussian_vector(c.dim, rng);
    const Vector model_shift = c.heterogeneity * gaussian_vector(c.dim, rng);
    const Vector local_model = x_true + model_shift;
    Dataset d;
    d.features.resize(c.samples_per_worker, c.dim);
    d.targets.resize(c.samples_per_worker);
    for (int i = 0; i < c.samples_per_worker; ++i) {
      for (int j = 0; j < c.dim; ++j) {
        d.features(i, j) = feature_shift[j] + normal(rng);
      }
      d.targets[i] =
          d.features.row(i).dot(local_model) + c.noise * normal(rng);
    }
    data.push_back(std::move(d));
  }
  while (static_cast<int>(data.size()) < c.workers) data.push_back(data[0]);
  return data;
}

struct Labeled {
  Vector features;
  double label;
};

// Two Gaussian clusters at +/- a random direction, rows normalised to unit
// length. Labels are balanced; the heterogeneity knob blends a random order
// with a label sort before the pool is cut into contiguous worker shards.
std::pair<std::vector<Dataset>, Dataset> cluster_data(const ProblemConfig& c) {
  Rng rng = make_rng(c.seed, Stream::kProblemData, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const int n_holdout = static_cast<int>(
      std::floor(c.holdout_fraction * c.samples_per_worker));
  const int n_train = c.samples_per_worker - n_holdout;
  if (n_train < 1) {
    throw ParameterError("problem.holdout_fraction leaves no training samples");
  }
  const int shards = c.shared_dataset ? 1 : c.workers;
  const int total = shards * c.samples_per_worker;

  Vector direction = gaussian_vector(c.dim, rng);
  direction *= 1.5 / direction.norm();

  std::vector<Labeled> pool(total);
  for (int i = 0; i < total; ++i) {
    const double label = (i < total / 2) ? -1.0 : 1.0;
    Vector a = label * direction + gaussian_vector(c.dim, rng);
    const double norm = a.norm();
    if (norm > 0.0) a /= norm;
    pool[i] = {std::move(a), label};
  }
  std::vector<double> key(total);
  for (int i = 0; i < total; ++i) {
    const double label01 = pool[i].label > 0.0 ? 1.0 : 0.0;
    key[i] = c.heterogeneity * label01 + (1.0 - c.heterogeneity) * uniform(rng);
  }
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&key](int a, int b) { return key[a] < key[b]; });

  std::vector<Dataset> data;
  std::vector<int> holdout_rows;
  for (int k = 0; k < shards; ++k) {
    Dataset d;
    d.features.resize(n_train, c.dim);
    d.targets.resize(n_train);
    for (int i = 0; i < c.samples_per_worker; ++i) {
      const int src = order[k * c.samples_per_worker + i];
      if (i < n_train) {
        d.features.row(i) = pool[src].features.transpose();
        d.targets[i] = pool[src].label;
      } else {
        holdout_rows.push_back(src);
      }
    }
    data.push_back(std::move(d));
  }
  while (static_cast<int>(data.size()) < c.workers) data.push_back(data[0]);

  Dataset holdout;
  holdout.features.resize(static_cast<Eigen::Index>(holdout_rows.size()), c.dim);
  holdout.targets.resize(static_cast<Eigen::Index>(holdout_rows.size()));
  for (std::size_t i = 0; i < holdout_rows.size(); ++i) {
    holdout.features.row(i) = pool[holdout_rows[i]].features.transpose();
    holdout.targets[i] = pool[holdout_rows[i]].label;
  }
  return {std::move(data), std::move(holdout)};
}

}  // namespace

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::kQuadratic:
      return "quadratic";
    case Kind::kLogistic:
      return "logistic";
    case Kind::kMlp:
      return "mlp";
  }
  return "unknown";
}

Kind parse_kind(std::string_view name) {
  if (name == "quadratic") return Kind::kQuadratic;
  if (name == "logistic") return Kind::kLogistic;
  if (name == "mlp") return Kind::kMlp;
  throw ParameterError("unknown problem kind '" + std::string(name) +
                       "' (expected quadratic, logistic, mlp)");
}

Problem::Problem(std::vector<Dataset> data, Dataset holdout)
    : data_(std::move(data)), dim_(0), holdout_(std::move(holdout)) {
  if (data_.empty()) throw ParameterError("problem needs at least one worker");
  dim_ = static_cast<int>(data_.front().features.cols());
  if (dim_ < 1) throw ParameterError("problem features must be non-empty");
  for (std::size_t k = 0; k < data_.size(); ++k) {
    if (data_[k].size() < 1) {
      throw ParameterError("worker " + std::to_string(k) + " has no samples");
    }
    if (data_[k].features.rows() != data_[k].targets.size()) {
      throw ShapeError("worker " + std::to_string(k) +
                       ": feature rows and targets disagree");
    }
  }
}

double Problem::worker_loss(int worker, const Vector& x) const {
  const Dataset& d = data(worker);
  double sum = 0.0;
  for (int i = 0; i < d.size(); ++i) sum += sample_loss(d, i, x);
  return sum / d.size();
}

Vector Problem::full_gradient(int worker, const Vector& x) const {
  const Dataset& d = data(worker);
  Vector g = Vector::Zero(dim_);
  const double scale = 1.0 / d.size();
  for (int i = 0; i < d.size(); ++i) add_sample_gradient(d, i, x, scale, g);
  return g;
}

double Problem::loss(const Vector& x) const {
  double sum = 0.0;
  for (int k = 0; k < workers(); ++k) sum += worker_loss(k, x);
  return sum / workers();
}

Vector Problem::global_gradient(const Vector& x) const {
  Vector g = Vector::Zero(dim_);
  for (int k = 0; k < workers(); ++k) g += full_gradient(k, x);
  return g / workers();
}

Vector Problem::batch_gradient(int worker, const Vector& x,
                               std::span<const int> indices) const {
  const Dataset& d = data(worker);
  Vector g = Vector::Zero(dim_);
  if (indices.empty()) return g;
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (int i : indices) add_sample_gradient(d, i, x, scale, g);
  return g;
}

Vector Problem::sample_gradient(int worker, int i, const Vector& x) const {
  Vector g = Vector::Zero(dim_);
  add_sample_gradient(data(worker), i, x, 1.0, g);
  return g;
}

GradientSample Problem::stochastic_gradient(int worker, const Vector& x,
                                            int batch_size, Rng& rng) const {
  if (worker < 0 || worker >= workers()) {
    throw ParameterError("worker index out of range");
  }
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  GradientSample s;
  s.worker = worker;
  const int n = samples(worker);
  if (batch_size >= n) {
    s.batch_indices.resize(n);
    std::iota(s.batch_indices.begin(), s.batch_indices.end(), 0);
    s.grad = full_gradient(worker, x);
    return s;
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  s.batch_indices.resize(batch_size);
  for (int& i : s.batch_indices) i = pick(rng);
  s.grad = batch_gradient(worker, x, s.batch_indices);
  return s;
}

std::optional<double> Problem::suboptimality(const Vector& x) const {
  if (!f_star_) return std::nullopt;
  return loss(x) - *f_star_;
}

std::optional<double> Problem::gradient_norm_bound(const Vector&,
                                                   double) const {
  return std::nullopt;
}

std::optional<double> Problem::holdout_loss(const Vector& x) const {
  if (!has_holdout()) return std::nullopt;
  double sum = 0.0;
  for (int i = 0; i < holdout_.size(); ++i) sum += sample_loss(holdout_, i, x);
  return sum / holdout_.size();
}

std::shared_ptr<const Problem> make_problem(const ProblemConfig& config) {
  check_config(config);
  switch (config.kind) {
    case Kind::kQuadratic:
      return std::make_shared<QuadraticProblem>(quadratic_data(config));
    case Kind::kLogistic: {
      auto [data, holdout] = cluster_data(config);
      return std::make_shared<LogisticProblem>(
          std::move(data), config.regularization, std::move(holdout));
    }
    case Kind::kMlp: {
      auto [data, holdout] = cluster_data(config);
      return std::make_shared<MlpProblem>(std::move(data), config.hidden,
                                          config.regularization, config.seed,
                                          std::move(holdout));
    }
  }
  throw ParameterError("unknown problem kind");
}

std::shared_ptr<const QuadraticProblem> quadratic_from_systems(
    const std::vector<std::pair<Matrix, Vector>>& systems) {
  std::vector<Dataset> data;
  for (const auto& [a, b] : systems) {
    if (a.rows() != b.size()) {
      throw ShapeError("quadratic system: rows of A and length of b differ");
    }
    const double scale = std::sqrt(static_cast<double>(a.rows()));
    Dataset d;
    d.features = a * scale;
    d.targets = b * scale;
    data.push_back(std::move(d));
  }
  return std::make_shared<QuadraticProblem>(std::move(data));
}

Constants estimate_constants(const Problem& problem, double region_radius,
                             const ConstantsOptions& options) {
  if (!(region_radius > 0.0)) {
    throw ParameterError("region_radius must be > 0");
  }
  const int dim = problem.dim();
  const Vector center = options.center.value_or(Vector::Zero(dim));
  Rng rng = make_rng(options.seed, Stream::kDiagnostics, 7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Constants out;
  out.smoothness = problem.smoothness();
  out.g_analytic = problem.gradient_norm_bound(center, region_radius);

  for (int p = 0; p <= options.points; ++p) {
    Vector x = center;
    if (p > 0) {
      // Uniform in the ball: random direction, radius ~ R * u^(1/d).
      Vector dir(dim);
      for (int j = 0; j < dim; ++j) dir[j] = normal(rng);
      const double r = region_radius * std::pow(uniform(rng), 1.0 / dim);
      x += dir * (r / std::max(dir.norm(), 1e-300));
    }
    for (int k = 0; k < problem.workers(); ++k) {
      const int n = problem.samples(k);
      const Vector mean = problem.full_gradient(k, x);
      double spread = 0.0;
      for (int i = 0; i < n; ++i) {
        const Vector g = problem.sample_gradient(k, i, x);
        out.g_hat = std::max(out.g_hat, g.norm());
        spread += (g - mean).squaredNorm();
      }
      if (options.batch_size < n) {
        out.sigma_sq_hat =
            std::max(out.sigma_sq_hat, spread / n / options.batch_size);
      }
    }
  }
  return out;
}

}  // namespace pdsgdm::problems
