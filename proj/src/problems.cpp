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

#include "bidiopt/problems.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bidiopt/rng.hpp"

namespace bidiopt {

// ---------------------------------------------------------------------------
// Datasets

double SparseRow::squared_norm() const {
  double s = 0.0;
  for (double v : value) s += v * v;
  return s;
}

Vector Dataset::dense_row(std::size_t j) const {
  Vector out = Vector::Zero(num_features);
  const auto& row = rows.at(j);
  for (std::size_t k = 0; k < row.nnz(); ++k) out[row.index[k]] = row.value[k];
  return out;
}

void Dataset::validate() const {
  if (rows.empty()) throw Error("dataset is empty");
  if (rows.size() != labels.size()) throw Error("dataset has mismatched label count");
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (labels[j] >= num_classes)
      throw Error("sample " + std::to_string(j) + " has label out of range");
    const auto& row = rows[j];
    if (row.index.size() != row.value.size())
      throw Error("sample " + std::to_string(j) + " is malformed");
    for (std::size_t k = 0; k < row.nnz(); ++k) {
      if (row.index[k] >= num_features)
        throw Error("sample " + std::to_string(j) + " has feature index out of range");
      if (k > 0 && row.index[k] <= row.index[k - 1])
        throw Error("sample " + std::to_string(j) + " has non-ascending indices");
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view tok, std::size_t line, const char* what) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok) + "'", line);
  return v;
}

}  // namespace

Dataset parse_libsvm(std::istream& in) {
  struct Raw {
    double label;
    SparseRow row;
  };
  std::vector<Raw> raw;
  std::uint32_t max_index = 0;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    std::string_view line = text;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    Raw r{};
    std::size_t pos = 0;
    bool first = true;
    while (pos < line.size()) {
      const auto end = std::min(line.find_first_of(" \t", pos), line.size());
      const auto tok = line.substr(pos, end - pos);
      pos = line.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = line.size();
      if (first) {
        r.label = parse_real(tok, line_no, "label");
        first = false;
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw ParseError("expected index:value, got '" + std::string(tok) + "'", line_no);
      const auto idx_tok = tok.substr(0, colon);
      unsigned long long idx = 0;
      const auto [ptr, ec] =
          std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
      if (ec != std::errc() || ptr != idx_tok.data() + idx_tok.size() || idx == 0 ||
          idx > std::numeric_limits<std::uint32_t>::max())
        throw ParseError("malformed feature index '" + std::string(idx_tok) + "'", line_no);
      const auto zero_based = static_cast<std::uint32_t>(idx - 1);
      if (!r.row.index.empty() && zero_based <= r.row.index.back())
        throw ParseError("feature indices are not strictly ascending", line_no);
      r.row.index.push_back(zero_based);
      r.row.value.push_back(parse_real(tok.substr(colon + 1), line_no, "feature value"));
      max_index = std::max(max_index, static_cast<std::uint32_t>(idx));
    }
    raw.push_back(std::move(r));
  }
  if (raw.empty()) throw Error("dataset is empty");

  std::map<double, std::uint32_t> remap;
  for (const auto& r : raw) remap.emplace(r.label, 0);
  std::uint32_t next = 0;
  for (auto& [label, id] : remap) id = next++;

  Dataset data;
  data.num_classes = next;
  data.num_features = max_index;
  data.rows.reserve(raw.size());
  data.labels.reserve(raw.size());
  for (auto& r : raw) {
    data.labels.push_back(remap.at(r.label));
    data.rows.push_back(std::move(r.row));
  }
  return data;
}

Dataset parse_libsvm(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in);
}

Dataset load_libsvm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return parse_libsvm(in);
}

namespace {

constexpr std::uint32_t kCacheMagic = 0x31534442;  // "BDS1"
constexpr std::uint16_t kCacheVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw Error("dataset cache is truncated");
  return v;
}

}  // namespace

void write_dataset_cache(const Dataset& data, std::ostream& out) {
  data.validate();
  put<std::uint32_t>(out, kCacheMagic);
  put<std::uint16_t>(out, kCacheVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(data.num_classes));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  put<std::uint32_t>(out, data.num_features);
  for (std::size_t j = 0; j < data.size(); ++j) {
    const auto& row = data.rows[j];
    put<std::uint32_t>(out, data.labels[j]);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(row.nnz()));
    for (std::size_t k = 0; k < row.nnz(); ++k) {
      put<std::uint32_t>(out, row.index[k]);
      put<double>(out, row.value[k]);
    }
  }
  if (!out) throw Error("failed to write dataset cache");
}

Dataset read_dataset_cache(std::istream& in) {
  if (take<std::uint32_t>(in) != kCacheMagic) throw Error("not a dataset cache");
  if (take<std::uint16_t>(in) != kCacheVersion)
    throw Error("unsupported dataset cache version");
  Dataset data;
  data.num_classes = take<std::uint16_t>(in);
  const auto samples = take<std::uint32_t>(in);
  data.num_features = take<std::uint32_t>(in);
  data.rows.resize(samples);
  data.labels.resize(samples);
  for (std::uint32_t j = 0; j < samples; ++j) {
    data.labels[j] = take<std::uint32_t>(in);
    const auto nnz = take<std::uint32_t>(in);
    auto& row = data.rows[j];
    row.index.resize(nnz);
    row.value.resize(nnz);
    for (std::uint32_t k = 0; k < nnz; ++k) {
      row.index[k] = take<std::uint32_t>(in);
      row.value[k] = take<double>(in);
    }
  }
  data.validate();
  return data;
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::ostringstream buf;
  write_dataset_cache(data, buf);
  Fnv1a h;
  h.update(buf.str());
  return h.digest();
}

std::string to_string(PartitionScheme scheme) {
  return scheme == PartitionScheme::kContiguous ? "contiguous" : "round_robin";
}

PartitionScheme parse_partition_scheme(std::string_view name) {
  if (name == "contiguous") return PartitionScheme::kContiguous;
  if (name == "round_robin") return PartitionScheme::kRoundRobin;
  throw Error("unknown partition scheme '" + std::string(name) + "'");
}

std::vector<std::vector<std::size_t>> partition_indices(std::size_t samples,
                                                        std::size_t n,
                                                        PartitionScheme scheme) {
  if (n == 0) throw Error("worker count must be positive");
  if (samples == 0) throw Error("cannot partition an empty dataset");
  if (n > samples)
    throw Error("cannot split " + std::to_string(samples) + " samples over " +
                std::to_string(n) + " workers");
  std::vector<std::vector<std::size_t>> shards(n);
  if (scheme == PartitionScheme::kRoundRobin) {
    for (std::size_t j = 0; j < samples; ++j) shards[j % n].push_back(j);
    return shards;
  }
  const std::size_t base = samples / n;
  const std::size_t extra = samples % n;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t size = base + (i < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) shards[i].push_back(j++);
  }
  return shards;
}

std::vector<Dataset> partition(const Dataset& data, std::size_t n,
                               PartitionScheme scheme) {
  const auto idx = partition_indices(data.size(), n, scheme);
  std::vector<Dataset> shards(n);
  for (std::size_t i = 0; i < n; ++i) {
    shards[i].num_classes = data.num_classes;
    shards[i].num_features = data.num_features;
    for (auto j : idx[i]) {
      shards[i].rows.push_back(data.rows[j]);
      shards[i].labels.push_back(data.labels[j]);
    }
  }
  return shards;
}

// ---------------------------------------------------------------------------
// Objectives

QuadraticObjective::QuadraticObjective(Matrix a, Vector b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size() || b_.size() == 0)
    throw Error("quadratic objective has inconsistent dimensions");
}

double QuadraticObjective::value(const Vector& x) const {
  if (x.size() != b_.size()) throw Error("dimension mismatch in quadratic objective");
  return 0.5 * x.dot(a_ * x) - b_.dot(x);
}

void QuadraticObjective::gradient(const Vector& x, Vector& out) const {
  if (x.size() != b_.size()) throw Error("dimension mismatch in quadratic objective");
  out.noalias() = a_ * x;
  out -= b_;
}

LogisticObjective::LogisticObjective(Dataset shard, double l2)
    : shard_(std::move(shard)), l2_(l2) {
  shard_.validate();
  if (shard_.num_classes < 2) throw Error("logistic regression needs at least 2 classes");
  if (!(l2 >= 0.0)) throw Error("l2 must be non-negative");
  dim_ = static_cast<std::size_t>(shard_.num_classes) * shard_.num_features;
  row_start_.push_back(0);
  for (const auto& row : shard_.rows) {
    col_.insert(col_.end(), row.index.begin(), row.index.end());
    val_.insert(val_.end(), row.value.begin(), row.value.end());
    row_start_.push_back(col_.size());
  }
}

void LogisticObjective::check_dim(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_)
    throw Error("weight vector has dimension " + std::to_string(x.size()) +
                ", expected " + std::to_string(dim_));
}

double LogisticObjective::sample_loss(const double* x, std::size_t j, double* scores,
                                      double* grad) const {
  const std::size_t c = shard_.num_classes;
  const std::size_t d = shard_.num_features;
  const std::size_t b = row_start_[j], e = row_start_[j + 1];
  double top = -INFINITY;
  for (std::size_t y = 0; y < c; ++y) {
    const double* w = x + y * d;
    double z = 0.0;
    for (std::size_t k = b; k < e; ++k) z += val_[k] * w[col_[k]];
    scores[y] = z;
    top = std::max(top, z);
  }
  double sum = 0.0;
  for (std::size_t y = 0; y < c; ++y) sum += std::exp(scores[y] - top);
  const std::uint32_t label = shard_.labels[j];
  const double loss = top + std::log(sum) - scores[label];
  if (grad) {
    for (std::size_t y = 0; y < c; ++y) {
      const double r = std::exp(scores[y] - top) / sum - (y == label ? 1.0 : 0.0);
      double* g = grad + y * d;
      for (std::size_t k = b; k < e; ++k) g[col_[k]] += r * val_[k];
    }
  }
  return loss;
}

double LogisticObjective::value(const Vector& x) const {
  check_dim(x);
  std::vector<double> scores(shard_.num_classes);
  double total = 0.0;
  for (std::size_t j = 0; j < shard_.size(); ++j)
    total += sample_loss(x.data(), j, scores.data(), nullptr);
  return total / static_cast<double>(shard_.size()) + 0.5 * l2_ * x.squaredNorm();
}

void LogisticObjective::gradient(const Vector& x, Vector& out) const {
  check_dim(x);
  std::vector<double> scores(shard_.num_classes);
  out.setZero(static_cast<Eigen::Index>(dim_));
  for (std::size_t j = 0; j < shard_.size(); ++j)
    sample_loss(x.data(), j, scores.data(), out.data());
  out /= static_cast<double>(shard_.size());
  if (l2_ > 0.0) out += l2_ * x;
}

double LogisticObjective::sum_squared_norms() const {
  double s = 0.0;
  for (const auto& row : shard_.rows) s += row.squared_norm();
  return s;
}

double LogisticObjective::smoothness_bound() const {
  return sum_squared_norms() / (2.0 * static_cast<double>(shard_.size())) + l2_;
}

double logistic_value_naive(const Dataset& shard, const Vector& x) {
  const std::size_t d = shard.num_features;
  if (static_cast<std::size_t>(x.size()) != d * shard.num_classes)
    throw Error("weight vector dimension mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < shard.size(); ++j) {
    const Vector a = shard.dense_row(j);
    double denom = 0.0;
    double own = 0.0;
    for (std::uint32_t y = 0; y < shard.num_classes; ++y) {
      double z = 0.0;
      for (std::size_t f = 0; f < d; ++f) z += x[static_cast<Eigen::Index>(y * d + f)] * a[static_cast<Eigen::Index>(f)];
      denom += std::exp(z);
      if (y == shard.labels[j]) own = z;
    }
    total += std::log(denom) - own;
  }
  return total / static_cast<double>(shard.size());
}

// ---------------------------------------------------------------------------
// Distributed problem

DistributedProblem::DistributedProblem(
    std::vector<std::shared_ptr<const WorkerObjective>> workers, Constants constants,
    std::string kind)
    : workers_(std::move(workers)), constants_(constants), kind_(std::move(kind)) {
  if (workers_.empty()) throw Error("a problem needs at least one worker");
  for (const auto& w : workers_) {
    if (!w) throw Error("null worker objective");
    if (w->dim() != workers_.front()->dim())
      throw Error("worker objectives have different dimensions");
  }
}

double DistributedProblem::value(const Vector& x) const {
  double s = 0.0;
  for (const auto& w : workers_) s += w->value(x);
  return s / static_cast<double>(workers_.size());
}

void DistributedProblem::worker_gradients(const Vector& x, std::vector<Vector>& out,
                                          const ExecConfig& exec) const {
  out.resize(workers_.size());
  for_each_worker(workers_.size(), exec,
                  [&](std::size_t i) { workers_[i]->gradient(x, out[i]); });
}

Vector DistributedProblem::gradient(const Vector& x, const ExecConfig& exec) const {
  std::vector<Vector> grads;
  worker_gradients(x, grads, exec);
  Vector g = grads.front();
  for (std::size_t i = 1; i < grads.size(); ++i) g += grads[i];
  return g / static_cast<double>(grads.size());
}

void DistributedProblem::set_optimum(double f_star, std::optional<Vector> x_star,
                                     GapFunction exact_gap) {
  f_star_ = f_star;
  x_star_ = std::move(x_star);
  exact_gap_ = std::move(exact_gap);
}

double DistributedProblem::gap(const Vector& x) const {
  if (!f_star_) throw Error("no reference optimum has been set");
  if (exact_gap_) return exact_gap_(x);
  return value(x) - *f_star_;
}

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Symmetric PSD square root and inverse square root.
Matrix psd_power(const Matrix& m, double power) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    ev[i] = ev[i] > 0.0 ? std::pow(ev[i], power) : 0.0;
  return symmetrized(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

Matrix random_orthogonal(std::size_t d, RngStream& rng) {
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

DistributedProblem quadratic_from(std::vector<Matrix> a, std::vector<Vector> b) {
  if (a.empty() || a.size() != b.size()) throw Error("need one (A_i, b_i) per worker");
  const auto n = static_cast<double>(a.size());
  Matrix mean_a = Matrix::Zero(a.front().rows(), a.front().cols());
  Vector mean_b = Vector::Zero(b.front().size());
  std::vector<std::shared_ptr<const WorkerObjective>> workers;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != a.front().rows() || b[i].size() != b.front().size())
      throw Error("worker matrices have different dimensions");
    if (!a[i].isApprox(a[i].transpose(), 1e-12))
      throw Error("worker matrix " + std::to_string(i) + " is not symmetric");
    mean_a += a[i];
    mean_b += b[i];
    workers.push_back(std::make_shared<QuadraticObjective>(a[i], b[i]));
  }
  mean_a /= n;
  mean_b /= n;
  DistributedProblem problem(std::move(workers), Constants{}, "quadratic");
  problem.set_constants(estimate_constants(problem));

  const Matrix m = symmetrized(mean_a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const double cutoff = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Vector inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    inv[i] = std::abs(inv[i]) > cutoff ? 1.0 / inv[i] : 0.0;
  Vector x_star = es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * mean_b));
  const double f_star = problem.value(x_star);
  problem.set_optimum(f_star, x_star, [m, x_star](const Vector& x) {
    const Vector e = x - x_star;
    return 0.5 * e.dot(m * e);
  });
  return problem;
}

}  // namespace

DistributedProblem make_quadratic(std::vector<Matrix> a, std::vector<Vector> b) {
  return quadratic_from(std::move(a), std::move(b));
}

DistributedProblem make_quadratic(const QuadraticSpec& spec) {
  if (spec.dim == 0 || spec.workers == 0)
    throw Error("quadratic needs positive dimension and worker count");
  if (!(spec.mu >= 0.0) || !(spec.L >= spec.mu) || !(spec.L > 0.0))
    throw Error("quadratic needs 0 <= mu <= L and L > 0");
  const std::size_t d = spec.dim;
  RngStream rng({spec.seed, kServerId, 0, Purpose::kProblem});

  Vector spectrum(d);
  if (d == 1) {
    spectrum[0] = spec.L;
  } else {
    std::vector<double> inner;
    for (std::size_t i = 0; i + 2 < d; ++i)
      inner.push_back(spec.mu + (spec.L - spec.mu) * rng.uniform());
    std::sort(inner.begin(), inner.end());
    spectrum[0] = spec.mu;
    for (std::size_t i = 0; i < inner.size(); ++i) spectrum[static_cast<Eigen::Index>(i + 1)] = inner[i];
    spectrum[static_cast<Eigen::Index>(d - 1)] = spec.L;
  }
  const Matrix q = random_orthogonal(d, rng);
  const Matrix m = symmetrized(q * spectrum.asDiagonal() * q.transpose());

  std::vector<Matrix> a(spec.workers);
  std::vector<Vector> b(spec.workers);
  if (spec.workers == 1) {
    a[0] = m;
  } else {
    std::vector<Matrix> raw(spec.workers);
    Matrix mean = Matrix::Zero(d, d);
    for (auto& r : raw) {
      Matrix g(d, d);
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
      r = g * g.transpose() / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d);
      mean += r;
    }
    mean /= static_cast<double>(spec.workers);
    const Matrix left = psd_power(m, 0.5) * psd_power(mean, -0.5);
    for (std::size_t i = 0; i < spec.workers; ++i)
      a[i] = symmetrized(left * raw[i] * left.transpose());
  }
  for (std::size_t i = 0; i < spec.workers; ++i) {
    Vector xi(d);
    for (auto& v : xi) v = rng.normal();
    b[i] = a[i] * xi;
  }
  return quadratic_from(std::move(a), std::move(b));
}

DistributedProblem make_logistic(const Dataset& data, std::size_t n,
                                 PartitionScheme scheme, double l2) {
  data.validate();
  std::vector<std::shared_ptr<const WorkerObjective>> workers;
  for (auto& shard : partition(data, n, scheme))
    workers.push_back(std::make_shared<LogisticObjective>(std::move(shard), l2));
  DistributedProblem problem(std::move(workers), Constants{}, "logistic");
  problem.set_constants(estimate_constants(problem));
  return problem;
}

Constants estimate_constants(const DistributedProblem& problem) {
  const std::size_t n = problem.workers();
  const auto nd = static_cast<double>(n);
  Constants c;
  if (dynamic_cast<const QuadraticObjective*>(&problem.worker(0))) {
    Matrix mean = Matrix::Zero(problem.dim(), problem.dim());
    for (std::size_t i = 0; i < n; ++i) {
      const auto* q = dynamic_cast<const QuadraticObjective*>(&problem.worker(i));
      if (!q) throw Error("mixed worker objective types");
      mean += q->a();
      Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(q->a()), Eigen::EigenvaluesOnly);
      c.L_max = std::max(c.L_max, es.eigenvalues().maxCoeff());
    }
    mean /= nd;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(mean), Eigen::EigenvaluesOnly);
    c.L = std::max(0.0, es.eigenvalues().maxCoeff());
    c.mu = std::clamp(es.eigenvalues().minCoeff(), 0.0, c.L);
    c.L_max = std::max(c.L_max, c.L);
  } else {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto* lo = dynamic_cast<const LogisticObjective*>(&problem.worker(i));
      if (!lo) throw Error("cannot estimate constants for this objective type");
      const double li = lo->smoothness_bound();
      sum += li;
      c.L_max = std::max(c.L_max, li);
      c.mu = lo->l2();
    }
    c.L = sum / nd;
  }
  c.Lhat_bound = c.L_max;
  return c;
}

// ---------------------------------------------------------------------------
// Reference solutions

ReferenceSolution solve_reference(const DistributedProblem& problem, double tol,
                                  std::size_t max_iterations, const ExecConfig& exec) {
  const double L = problem.constants().L;
  if (!(L > 0.0)) throw Error("reference solve needs L > 0");
  const double step = 1.0 / L;
  ReferenceSolution sol;
  Vector x = Vector::Zero(static_cast<Eigen::Index>(problem.dim()));
  Vector y = x;
  Vector x_prev = x;
  double t = 1.0;
  Vector g = problem.gradient(x, exec);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    if (problem.gradient(x, exec).norm() <= tol) {
      sol.converged = true;
      sol.iterations = it;
      break;
    }
    g = problem.gradient(y, exec);
    x_prev = x;
    x = y - step * g;
    // Gradient-mapping restart test.
    if (g.dot(x - x_prev) > 0.0) {
      t = 1.0;
      y = x;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    sol.iterations = it + 1;
  }
  sol.x = x;
  sol.f_star = problem.value(x);
  sol.grad_norm = problem.gradient(x, exec).norm();
  sol.converged = sol.grad_norm <= tol;
  return sol;
}

FStarCache::FStarCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

namespace {
std::string hex_key(std::uint64_t key) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(key));
  return buf;
}
}  // namespace

std::optional<double> FStarCache::lookup(std::uint64_t key) const {
  std::ifstream in(dir_ / (hex_key(key) + ".fstar"));
  if (!in) return std::nullopt;
  std::string text;
  std::getline(in, text);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || !std::isfinite(v)) return std::nullopt;
  return v;
}

void FStarCache::store(std::uint64_t key, double f_star) const {
  std::filesystem::create_directories(dir_);
  const auto final_path = dir_ / (hex_key(key) + ".fstar");
  const auto tmp = dir_ / (hex_key(key) + ".fstar.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a\n", f_star);
    out << buf;
    if (!out) throw Error("cannot write f* cache entry " + tmp.string());
  }
  std::filesystem::rename(tmp, final_path);
}

// ---------------------------------------------------------------------------
// Toy data

Dataset make_toy_dataset(const ToyDatasetSpec& spec) {
  if (spec.samples == 0 || spec.features == 0 || spec.classes < 2)
    throw Error("toy dataset needs samples, features and at least 2 classes");
  RngStream rng({spec.seed, kServerId, 0, Purpose::kData});
  const std::size_t d = spec.features;
  Matrix centers(d, spec.classes);
  for (Eigen::Index c = 0; c < centers.cols(); ++c)
    for (Eigen::Index f = 0; f < centers.rows(); ++f) centers(f, c) = rng.normal();
  Vector scale(d);
  for (std::size_t f = 0; f < d; ++f)
    scale[static_cast<Eigen::Index>(f)] = std::pow(1.0 + static_cast<double>(f), -spec.scale_decay);

  Dataset data;
  data.num_classes = spec.classes;
  data.num_features = spec.features;
  for (std::size_t j = 0; j < spec.samples; ++j) {
    auto label = static_cast<std::uint32_t>(rng.below(spec.classes));
    SparseRow row;
    for (std::size_t f = 0; f < d; ++f) {
      const auto fi = static_cast<Eigen::Index>(f);
      const double v = (centers(fi, label) + rng.normal()) * scale[fi];
      if (rng.uniform() < spec.sparsity) continue;
      const double rounded = std::round(v * 1e4) / 1e4;
      if (rounded == 0.0) continue;
      row.index.push_back(static_cast<std::uint32_t>(f));
      row.value.push_back(rounded);
    }
    if (rng.uniform() < spec.label_noise)
      label = static_cast<std::uint32_t>(
          (label + 1 + rng.below(spec.classes - 1)) % spec.classes);
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return data;
}

void write_libsvm(const Dataset& data, std::ostream& out) {
  data.validate();
  char buf[64];
  for (std::size_t j = 0; j < data.size(); ++j) {
    out << (data.labels[j] + 1);
    const auto& row = data.rows[j];
    for (std::size_t k = 0; k < row.nnz(); ++k) {
      const auto res = std::to_chars(buf, buf + sizeof buf, row.value[k]);
      out << ' ' << (row.index[k] + 1) << ':' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace bidiopt
