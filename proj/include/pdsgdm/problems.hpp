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
#ifndef PDSGDM_PROBLEMS_HPP_
#define PDSGDM_PROBLEMS_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pdsgdm/common.hpp"

namespace pdsgdm::problems {

enum class Kind { kQuadratic, kLogistic, kMlp };

std::string_view to_string(Kind kind);
Kind parse_kind(std::string_view name);

// One worker's local samples: a row per sample plus a scalar target.
struct Dataset {
  RowMatrix features;
  Vector targets;

  int size() const { return static_cast<int>(targets.size()); }
};

struct GradientSample {
  Vector grad;
  int worker = 0;
  std::vector<int> batch_indices;
};

struct ProblemConfig {
  Kind kind = Kind::kQuadratic;
  int dim = 10;  // feature dimension (the model dimension for mlp is larger)
  int samples_per_worker = 64;
  int workers = 8;
  // 0 = iid across workers, 1 = maximal skew.
  double heterogeneity = 0.0;
  std::uint64_t seed = 0;
  double regularization = 0.01;  // logistic / mlp l2 weight
  int hidden = 8;                // mlp width
  double noise = 0.5;            // quadratic target noise
  double holdout_fraction = 0.0;  // logistic / mlp only
  // Every worker receives a copy of worker 0's dataset.
  bool shared_dataset = false;
};

// Partitioned finite-sum objective f(x) = (1/K) sum_k f^(k)(x) with
// f^(k)(x) = (1/n_k) sum_i loss_i(x). Immutable after construction; every
// oracle is const and reentrant.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual Kind kind() const = 0;
  int dim() const { return dim_; }
  int workers() const { return static_cast<int>(data_.size()); }
  int samples(int worker) const { return data_.at(worker).size(); }
  const Dataset& data(int worker) const { return data_.at(worker); }

  virtual double worker_loss(int worker, const Vector& x) const;
  virtual Vector full_gradient(int worker, const Vector& x) const;
  double loss(const Vector& x) const;
  Vector global_gradient(const Vector& x) const;

  // Average of per-sample gradients over the given indices.
  Vector batch_gradient(int worker, const Vector& x,
                        std::span<const int> indices) const;
  // Uniform sampling with replacement. A batch covering the whole local set
  // (batch_size >= n_k) is taken without replacement and equals
  // full_gradient exactly.
  GradientSample stochastic_gradient(int worker, const Vector& x,
                                     int batch_size, Rng& rng) const;

  // Gradient of the single sample i on a worker.
  Vector sample_gradient(int worker, int i, const Vector& x) const;

  const std::optional<double>& f_star() const { return f_star_; }
  const std::optional<Vector>& minimizer() const { return minimizer_; }
  // f(x) - f*, when f* is known.
  virtual std::optional<double> suboptimality(const Vector& x) const;

  // Smoothness constant L (exact, bound or estimate depending on kind).
  virtual double smoothness() const = 0;
  // Analytic bound on per-sample gradient norms over a ball, if available.
  virtual std::optional<double> gradient_norm_bound(const Vector& center,
                                                    double radius) const;
  virtual Vector initial_point() const { return Vector::Zero(dim_); }

  bool has_holdout() const { return holdout_.size() > 0; }
  std::optional<double> holdout_loss(const Vector& x) const;

 protected:
  // The model dimension defaults to the feature dimension.
  explicit Problem(std::vector<Dataset> data, Dataset holdout = {});
  void set_model_dim(int dim) { dim_ = dim; }

  virtual double sample_loss(const Dataset& d, int i, const Vector& x) const = 0;
  // out += scale * grad loss_i(x)
  virtual void add_sample_gradient(const Dataset& d, int i, const Vector& x,
                                   double scale, Vector& out) const = 0;

  void set_optimum(Vector minimizer, double value) {
    minimizer_ = std::move(minimizer);
    f_star_ = value;
  }

 private:
  std::vector<Dataset> data_;
  int dim_;
  Dataset holdout_;
  std::optional<double> f_star_;
  std::optional<Vector> minimizer_;
};

// f^(k)(x) = (1/2n) sum_i (a_i . x - b_i)^2. f* from the stacked normal
// equations.
class QuadraticProblem final : public Problem {
 public:
  explicit QuadraticProblem(std::vector<Dataset> data);

  Kind kind() const override { return Kind::kQuadratic; }
  double worker_loss(int worker, const Vector& x) const override;
  Vector full_gradient(int worker, const Vector& x) const override;
  std::optional<double> suboptimality(const Vector& x) const override;
  double smoothness() const override { return smoothness_; }

  const Matrix& hessian() const { return hessian_; }
  const Matrix& worker_hessian(int worker) const { return parts_[worker].h; }

 protected:
  double sample_loss(const Dataset& d, int i, const Vector& x) const override;
  void add_sample_gradient(const Dataset& d, int i, const Vector& x,
                           double scale, Vector& out) const override;

 private:
  struct Part {
    Matrix h;   // A^T A / n
    Vector c;   // A^T b / n
    double e;   // b^T b / 2n
  };
  std::vector<Part> parts_;
  Matrix hessian_;
  double smoothness_ = 0.0;
};

// l2-regularised binary logistic loss, labels in {-1, +1}.
class LogisticProblem final : public Problem {
 public:
  LogisticProblem(std::vector<Dataset> data, double regularization,
                  Dataset holdout = {});

  Kind kind() const override { return Kind::kLogistic; }
  double smoothness() const override;
  std::optional<double> gradient_norm_bound(const Vector& center,
                                            double radius) const override;
  double regularization() const { return lambda_; }

 protected:
  double sample_loss(const Dataset& d, int i, const Vector& x) const override;
  void add_sample_gradient(const Dataset& d, int i, const Vector& x,
                           double scale, Vector& out) const override;

 private:
  void solve_reference();

  double lambda_;
  double max_row_norm_sq_ = 0.0;
};

// One hidden tanh layer, scalar output, squared loss. Parameters are packed
// as [W1 (hidden x inputs, row-major), b1, w2, b2].
class MlpProblem final : public Problem {
 public:
  MlpProblem(std::vector<Dataset> data, int hidden, double regularization,
             std::uint64_t seed, Dataset holdout = {});

  Kind kind() const override { return Kind::kMlp; }
  double smoothness() const override;
  Vector initial_point() const override { return x0_; }
  int hidden() const { return hidden_; }

 protected:
  double sample_loss(const Dataset& d, int i, const Vector& x) const override;
  void add_sample_gradient(const Dataset& d, int i, const Vector& x,
                           double scale, Vector& out) const override;

 private:
  int inputs_;
  int hidden_;
  double lambda_;
  Vector x0_;
  mutable std::optional<double> smoothness_;
};

// Generates a synthetic problem. Throws ParameterError on invalid sizes.
std::shared_ptr<const Problem> make_problem(const ProblemConfig& config);

// f^(k)(x) = 1/2 ||A_k x - b_k||^2 for explicitly given systems; rows are
// rescaled by sqrt(n) so the per-sample normalisation is absorbed.
std::shared_ptr<const QuadraticProblem> quadratic_from_systems(
    const std::vector<std::pair<Matrix, Vector>>& systems);

struct Constants {
  double smoothness = 0.0;
  double sigma_sq_hat = 0.0;  // max over sampled points of minibatch variance
  double g_hat = 0.0;         // max per-sample gradient norm seen
  std::optional<double> g_analytic;
};

struct ConstantsOptions {
  int batch_size = 1;
  int points = 16;
  std::uint64_t seed = 0;
  std::optional<Vector> center;  // defaults to the origin
};

// Empirical constants over the ball of the given radius. The minibatch
// variance is computed exactly by enumerating local samples.
Constants estimate_constants(const Problem& problem, double region_radius,
                             const ConstantsOptions& options = {});

}  // namespace pdsgdm::problems

#endif  // PDSGDM_PROBLEMS_HPP_
