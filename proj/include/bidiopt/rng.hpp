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
#include <random>

namespace bidiopt {

// What a stream's draws are used for. Distinct purposes never share draws.
enum class Purpose : std::uint32_t {
  kDualY = 1,
  kDualZ = 2,
  kCoin = 3,
  kPrimal = 4,
  kProblem = 5,
  kData = 6,
  kTest = 7,
};

// Worker id used for server-owned streams (coin, primal compressor).
inline constexpr std::uint32_t kServerId = 0xFFFFFFFFu;

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t worker = 0;
  std::uint64_t round = 0;
  Purpose purpose = Purpose::kTest;
};

// Random stream keyed by (seed, worker, round, purpose). The same key always
// reproduces the same draws, so any single message can be regenerated in
// isolation. The engine is std::mt19937_64, whose output sequence is fixed by
// the standard; bounded and real draws are done here rather than through
// <random> distributions, whose algorithms are implementation-defined.
class RngStream {
 public:
  explicit RngStream(const StreamKey& key);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal via Box-Muller (one value per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_key(const StreamKey& key);

}  // namespace bidiopt
