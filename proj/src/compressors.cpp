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

#include "bidiopt/compressors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

namespace bidiopt {

CompressorSpec CompressorSpec::identity(std::size_t dim) {
  return {CompressorKind::kIdentity, dim, dim, false};
}

CompressorSpec CompressorSpec::rand_k(std::size_t dim, std::size_t k) {
  CompressorSpec s{CompressorKind::kRandK, k, dim, false};
  s.validate();
  return s;
}

CompressorSpec CompressorSpec::top_k(std::size_t dim, std::size_t k) {
  CompressorSpec s{CompressorKind::kTopK, k, dim, false};
  s.validate();
  return s;
}

void CompressorSpec::validate() const {
  if (dim == 0) throw Error("compressor dimension must be positive");
  if (kind == CompressorKind::kIdentity) return;
  if (k < 1 || k > dim)
    throw Error("compressor k = " + std::to_string(k) + " outside [1, " +
                std::to_string(dim) + "]");
  if (kind == CompressorKind::kTopK && scaled_to_biased)
    throw Error("TopK is not an unbiased compressor and cannot be rescaled");
}

bool CompressorSpec::is_unbiased() const {
  return !scaled_to_biased && kind != CompressorKind::kTopK;
}

bool CompressorSpec::is_contractive() const {
  return kind != CompressorKind::kRandK || scaled_to_biased;
}

bool CompressorSpec::is_lossless() const {
  if (kind == CompressorKind::kIdentity) return true;
  return k == dim && !scaled_to_biased;
}

std::string CompressorSpec::describe() const {
  std::string s;
  switch (kind) {
    case CompressorKind::kIdentity: s = "identity(d=" + std::to_string(dim) + ")"; break;
    case CompressorKind::kRandK:
      s = "randk(d=" + std::to_string(dim) + ",k=" + std::to_string(k) + ")";
      break;
    case CompressorKind::kTopK:
      s = "topk(d=" + std::to_string(dim) + ",k=" + std::to_string(k) + ")";
      break;
  }
  return scaled_to_biased ? "scaled(" + s + ")" : s;
}

double omega_of(const CompressorSpec& spec) {
  spec.validate();
  if (!spec.is_unbiased())
    throw Error("omega is undefined for biased compressor " + spec.describe());
  if (spec.kind == CompressorKind::kIdentity) return 0.0;
  return static_cast<double>(spec.dim) / static_cast<double>(spec.k) - 1.0;
}

double alpha_of(const CompressorSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case CompressorKind::kIdentity: return 1.0;
    case CompressorKind::kTopK:
      return static_cast<double>(spec.k) / static_cast<double>(spec.dim);
    case CompressorKind::kRandK:
      if (!spec.scaled_to_biased)
        throw Error("alpha is undefined for unbiased compressor " + spec.describe());
      return static_cast<double>(spec.k) / static_cast<double>(spec.dim);
  }
  return 1.0;
}

std::size_t expected_density(const CompressorSpec& spec) {
  spec.validate();
  return spec.kind == CompressorKind::kIdentity ? spec.dim : spec.k;
}

CompressorSpec scale_to_biased(const CompressorSpec& spec) {
  if (!spec.is_unbiased())
    throw Error("scale_to_biased needs an unbiased compressor, got " +
                spec.describe());
  CompressorSpec out = spec;
  if (spec.kind != CompressorKind::kIdentity) out.scaled_to_biased = true;
  return out;
}

Vector Message::to_dense() const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim));
  add_to(out, 1.0);
  return out;
}

void Message::add_to(Vector& out, double scale) const {
  if (static_cast<std::size_t>(out.size()) != dim)
    throw Error("message dimension mismatch");
  if (dense) {
    for (std::size_t i = 0; i < dim; ++i) out[static_cast<Eigen::Index>(i)] += scale * value[i];
    return;
  }
  for (std::size_t j = 0; j < index.size(); ++j)
    out[index[j]] += scale * value[j];
}

std::vector<std::uint32_t> sample_subset(std::size_t dim, std::size_t k,
                                         RngStream& rng) {
  if (k < 1 || k > dim) throw Error("subset size outside [1, dim]");
  std::vector<std::uint32_t> pool(dim);
  std::iota(pool.begin(), pool.end(), 0u);
  if (k < dim) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(dim - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
  }
  return pool;
}

namespace {

void check_input(const CompressorSpec& spec, const Vector& x) {
  spec.validate();
  if (static_cast<std::size_t>(x.size()) != spec.dim)
    throw Error("compressor input has dimension " + std::to_string(x.size()) +
                ", expected " + std::to_string(spec.dim));
}

std::vector<std::uint32_t> top_indices(const Vector& x, std::size_t k) {
  std::vector<std::uint32_t> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), 0u);
  if (k < idx.size()) {
    auto before = [&x](std::uint32_t a, std::uint32_t b) {
      const double fa = std::abs(x[a]);
      const double fb = std::abs(x[b]);
      return fa > fb || (fa == fb && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                     idx.end(), before);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

}  // namespace

Message compress(const CompressorSpec& spec, const Vector& x, RngStream& rng) {
  check_input(spec, x);
  Message msg;
  msg.dim = spec.dim;
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      msg.dense = true;
      msg.value.assign(x.data(), x.data() + x.size());
      return msg;
    case CompressorKind::kRandK: {
      msg.index = sample_subset(spec.dim, spec.k, rng);
      const double scale =
          spec.scaled_to_biased
              ? 1.0
              : static_cast<double>(spec.dim) / static_cast<double>(spec.k);
      msg.value.reserve(msg.index.size());
      for (auto i : msg.index) msg.value.push_back(scale * x[i]);
      return msg;
    }
    case CompressorKind::kTopK:
      msg.index = top_indices(x, spec.k);
      msg.value.reserve(msg.index.size());
      for (auto i : msg.index) msg.value.push_back(x[i]);
      return msg;
  }
  return msg;
}

Vector rand_k(const Vector& x, std::size_t k, RngStream& rng) {
  return compress(CompressorSpec::rand_k(static_cast<std::size_t>(x.size()), k), x, rng)
      .to_dense();
}

Vector top_k(const Vector& x, std::size_t k) {
  const auto spec = CompressorSpec::top_k(static_cast<std::size_t>(x.size()), k);
  Message msg;
  msg.dim = spec.dim;
  msg.index = top_indices(x, k);
  for (auto i : msg.index) msg.value.push_back(x[i]);
  return msg.to_dense();
}

namespace {

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode(const Message& msg) {
  std::vector<std::uint8_t> out;
  out.reserve(msg.stored() * kBytesPerCoordinate);
  for (std::size_t j = 0; j < msg.stored(); ++j) {
    put<std::uint32_t>(out, msg.dense ? static_cast<std::uint32_t>(j) : msg.index[j]);
    put<double>(out, msg.value[j]);
  }
  return out;
}

Message decode(std::span<const std::uint8_t> bytes, std::size_t dim) {
  if (bytes.size() % kBytesPerCoordinate != 0)
    throw Error("encoded message length is not a multiple of 12");
  Message msg;
  msg.dim = dim;
  const std::size_t count = bytes.size() / kBytesPerCoordinate;
  for (std::size_t j = 0; j < count; ++j) {
    const auto i = get<std::uint32_t>(bytes, j * kBytesPerCoordinate);
    if (i >= dim) throw Error("encoded index out of range");
    msg.index.push_back(i);
    msg.value.push_back(get<double>(bytes, j * kBytesPerCoordinate + 4));
  }
  return msg;
}

}  // namespace bidiopt
