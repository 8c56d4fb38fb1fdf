// Copyright 2026 The bidiopt Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bidiopt/common.hpp"
#include "bidiopt/parallel.hpp"

namespace bidiopt {

// ---------------------------------------------------------------------------
// Datasets

struct SparseRow {
  std::vector<std::uint32_t> index;  // 0-based, strictly ascending
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
  double squared_norm() const;
};

struct Dataset {
  std::vector<SparseRow> rows;
  std::vector<std::uint32_t> labels;  // in [0, num_classes)
  std::uint32_t num_classes = 0;
  std::uint32_t num_features = 0;

  std::size_t size() const { return rows.size(); }
  Vector dense_row(std::size_t j) const;
  // Throws Error when an index or label is out of range.
  void validate() const;
};

// LIBSVM / SVMlight text: "<label> <idx>:<val> ..." with 1-based ascending
// indices. Labels are remapped to 0..c-1 by ascending raw value. Blank lines
// and '#' comments are skipped.
Dataset parse_libsvm(std::istream& in);
Dataset parse_libsvm(std::string_view text);
Dataset load_libsvm(const std::filesystem::path& path);

// Binary cache: 16-byte little-endian header
//   u32 magic "BDS1" | u16 version | u16 num_classes | u32 samples | u32 features
// followed per sample by u32 label, u32 nnz, nnz x (u32 index, f64 value).
void write_dataset_cache(const Dataset& data, std::ostream& out);
Dataset read_dataset_cache(std::istream& in);
std::uint64_t dataset_hash(const Dataset& data);

enum class PartitionScheme { kContiguous, kRoundRobin };

std::string to_string(PartitionScheme scheme);
PartitionScheme parse_partition_scheme(std::string_view name);

// Sample indices per worker: disjoint, covering, sizes differ by at most one.
std::vector<std::vector<std::size_t>> partition_indices(std::size_t samples,
                                                        std::size_t n,
                                                        PartitionScheme scheme);
std::vector<Dataset> partition(const Dataset& data, std::size_t n,
                               PartitionScheme scheme);

// ---------------------------------------------------------------------------
// Worker objectives

class WorkerObjective {
 public:
  virtual ~WorkerObjective() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual void gradient(const Vector& x, Vector& out) const = 0;
};

// f(x) = 1/2 x^T A x - b^T x
class QuadraticObjective final : public WorkerObjective {
 public:
  QuadraticObjective(Matrix a, Vector b);

  std::size_t dim() const override { return static_cast<std::size_t>(b_.size()); }
  double value(const Vector& x) const override;
  void gradient(const Vector& x, Vector& out) const override;

  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }

 private:
  Matrix a_;
  Vector b_;
};

// Multiclass softmax cross-entropy over one shard, plus optional l2/2 |x|^2.
// The model is the stacked vector (x_0, ..., x_{c-1}); class block y
// occupies [y * d_feat, (y + 1) * d_feat).
class LogisticObjective final : public WorkerObjective {
 public:
  explicit LogisticObjective(Dataset shard, double l2 = 0.0);

  std::size_t dim() const override { return dim_; }
  double value(const Vector& x) const override;
  void gradient(const Vector& x, Vector& out) const override;

  const Dataset& shard() const { return shard_; }
  double l2() const { return l2_; }
  // (1 / (2 m)) * sum_j |a_j|^2 + l2: softmax Hessian spectral norm <= 1/2.
  double smoothness_bound() const;
  double sum_squared_norms() const;

 private:
  void check_dim(const Vector& x) const;
  // Loss of sample j; when grad is non-null, adds its gradient to grad.
  double sample_loss(const double* x, std::size_t j, double* scores, double* grad) const;

  Dataset shard_;
  double l2_;
  std::size_t dim_;
  // Shard features in compressed-row form.
  std::vector<std::size_t> row_start_;
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
};

// Value of the shard objective evaluated with a plain per-sample loop and no
// max-shift; a reference for tests.
double logistic_value_naive(const Dataset& shard, const Vector& x);

// ---------------------------------------------------------------------------
// Distributed problem

struct Constants {
  double L = 0.0;
  double L_max = 0.0;
  double Lhat_bound = 0.0;
  double mu = 0.0;
};

class DistributedProblem {
 public:
  using GapFunction = std::function<double(const Vector&)>;

  DistributedProblem(std::vector<std::shared_ptr<const WorkerObjective>> workers,
                     Constants constants, std::string kind);

  std::size_t workers() const { return workers_.size(); }
  std::size_t dim() const { return workers_.front()->dim(); }
  const WorkerObjective& worker(std::size_t i) const { return *workers_.at(i); }
  const std::string& kind() const { return kind_; }

  // Mean of the worker values / gradients, summed in ascending worker order.
  double value(const Vector& x) const;
  Vector gradient(const Vector& x, const ExecConfig& exec = {}) const;
  void worker_gradients(const Vector& x, std::vector<Vector>& out,
                        const ExecConfig& exec = {}) const;

  const Constants& constants() const { return constants_; }
  void set_constants(const Constants& c) { constants_ = c; }

  // Reference optimum. exact_gap, when given, computes f(x) - f* without
  // the cancellation of value(x) - f*.
  void set_optimum(double f_star, std::optional<Vector> x_star = std::nullopt,
                   GapFunction exact_gap = {});
  std::optional<double> f_star() const { return f_star_; }
  const std::optional<Vector>& x_star() const { return x_star_; }
  // f(x) - f*. Throws Error when no optimum has been set.
  double gap(const Vector& x) const;

 private:
  std::vector<std::shared_ptr<const WorkerObjective>> workers_;
  Constants constants_;
  std::string kind_;
  std::optional<double> f_star_;
  std::optional<Vector> x_star_;
  GapFunction exact_gap_;
};

struct QuadraticSpec {
  std::size_t dim = 2;
  std::size_t workers = 1;
  double mu = 0.1;
  double L = 1.0;
  std::uint64_t seed = 0;
};

// Random instance: the mean Hessian has spectrum exactly spanning [mu, L]
// (endpoints attained), worker Hessians are PSD congruent splits of it, and
// x*, f* are set in closed form.
DistributedProblem make_quadratic(const QuadraticSpec& spec);
// Explicit instance from per-worker (A_i, b_i).
DistributedProblem make_quadratic(std::vector<Matrix> a, std::vector<Vector> b);

DistributedProblem make_logistic(const Dataset& data, std::size_t n,
                                 PartitionScheme scheme, double l2 = 0.0);

// Quadratic: exact eigenvalues. Logistic: the trace bounds of
// LogisticObjective::smoothness_bound, mu = l2. Lhat_bound = L_max.
Constants estimate_constants(const DistributedProblem& problem);

// ---------------------------------------------------------------------------
// Reference solutions

struct ReferenceSolution {
  Vector x;
  double f_star = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Restarted AGD on the pooled objective until |grad f| <= tol.
ReferenceSolution solve_reference(const DistributedProblem& problem,
                                  double tol = 1e-12,
                                  std::size_t max_iterations = 500000,
                                  const ExecConfig& exec = {});

// On-disk cache of f* values keyed by an arbitrary fingerprint.
class FStarCache {
 public:
  explicit FStarCache(std::filesystem::path dir);
  std::optional<double> lookup(std::uint64_t key) const;
  void store(std::uint64_t key, double f_star) const;

 private:
  std::filesystem::path dir_;
};

// Deterministic synthetic classification data in the shape of the bundled
// toy set: Gaussian class clusters with decaying feature scales, a fraction
// of zeroed features, and flipped labels.
struct ToyDatasetSpec {
  std::size_t samples = 1000;
  std::uint32_t features = 16;
  std::uint32_t classes = 3;
  double sparsity = 0.25;
  double label_noise = 0.1;
  double scale_decay = 0.5;  // feature f is scaled by (1 + f)^-scale_decay
  std::uint64_t seed = 2023;
};
Dataset make_toy_dataset(const ToyDatasetSpec& spec);
void write_libsvm(const Dataset& data, std::ostream& out);

}  // namespace bidiopt
