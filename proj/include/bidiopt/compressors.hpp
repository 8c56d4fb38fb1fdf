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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bidiopt/common.hpp"
#include "bidiopt/rng.hpp"

namespace bidiopt {

enum class CompressorKind { kIdentity, kRandK, kTopK };

// A sparsifier on R^dim. RandK is unbiased with omega = dim/k - 1; TopK is a
// contraction with alpha = k/dim; Identity is both (omega = 0, alpha = 1).
// scaled_to_biased multiplies an unbiased compressor's output by 1/(omega+1),
// which turns it into a contraction with alpha = 1/(omega+1).
struct CompressorSpec {
  CompressorKind kind = CompressorKind::kIdentity;
  std::size_t k = 0;
  std::size_t dim = 0;
  bool scaled_to_biased = false;

  static CompressorSpec identity(std::size_t dim);
  static CompressorSpec rand_k(std::size_t dim, std::size_t k);
  static CompressorSpec top_k(std::size_t dim, std::size_t k);

  void validate() const;
  bool is_unbiased() const;
  bool is_contractive() const;
  // Identity, or a sparsifier keeping every coordinate.
  bool is_lossless() const;
  std::string describe() const;
};

// omega of an unbiased spec; throws Error for contractive-only specs.
double omega_of(const CompressorSpec& spec);
// alpha of a contractive spec; throws Error for an unscaled RandK.
double alpha_of(const CompressorSpec& spec);
// K_C: coordinates charged per message.
std::size_t expected_density(const CompressorSpec& spec);
CompressorSpec scale_to_biased(const CompressorSpec& spec);

// A compressed vector as (index, value) pairs; dense messages carry all dim
// values and no indices.
struct Message {
  std::size_t dim = 0;
  bool dense = false;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  Vector to_dense() const;
  // out += scale * message
  void add_to(Vector& out, double scale = 1.0) const;
  std::size_t stored() const { return value.size(); }
};

Message compress(const CompressorSpec& spec, const Vector& x, RngStream& rng);

// Dense-output forms of the two sparsifiers.
Vector rand_k(const Vector& x, std::size_t k, RngStream& rng);
Vector top_k(const Vector& x, std::size_t k);

// Sorted k-subset of [0, dim) drawn uniformly without replacement.
std::vector<std::uint32_t> sample_subset(std::size_t dim, std::size_t k,
                                         RngStream& rng);

// Little-endian (u32 index, f64 value) pair list; dense messages list every
// coordinate.
std::vector<std::uint8_t> encode(const Message& msg);
Message decode(std::span<const std::uint8_t> bytes, std::size_t dim);
inline constexpr std::size_t kBytesPerCoordinate = 12;

}  // namespace bidiopt
