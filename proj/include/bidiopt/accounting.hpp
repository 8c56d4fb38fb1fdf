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

namespace bidiopt {

enum class Algorithm { kTwoDirection, kAdiana, kEf21pDiana, kGd, kAgd };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);

// How the uplink counter is reported: the per-worker count (max over
// workers) or the sum over all workers.
enum class W2sMode { kPerWorker, kSummed };

// Exact coordinate counters for both directions.
class CommLedger {
 public:
  CommLedger() = default;
  CommLedger(std::size_t workers, double r, W2sMode mode = W2sMode::kPerWorker);

  void charge_w2s(std::size_t worker, std::uint64_t coords);
  // The same charge for every worker.
  void charge_w2s_all(std::uint64_t coords);
  void charge_s2w(std::uint64_t coords);

  std::size_t workers() const { return w2s_.size(); }
  std::uint64_t w2s(std::size_t worker) const { return w2s_.at(worker); }
  // max_i w2s_i (per-worker mode) or sum_i w2s_i (summed mode).
  std::uint64_t w2s_reported() const;
  std::uint64_t s2w() const { return s2w_; }
  double r() const { return r_; }
  W2sMode mode() const { return mode_; }

  // (1 - r) * w2s_reported + r * s2w
  double total_r() const;
  // Same totals in bytes of the (u32, f64) message encoding.
  std::uint64_t w2s_bytes(std::size_t worker) const;
  std::uint64_t s2w_bytes() const;

 private:
  std::vector<std::uint64_t> w2s_;
  std::uint64_t s2w_ = 0;
  double r_ = 0.5;
  W2sMode mode_ = W2sMode::kPerWorker;
};

// Closed-form counts for T rounds with `heads` successful coins, including
// the initialization phase. Per-worker uplink.
struct CommCounts {
  std::uint64_t w2s = 0;
  std::uint64_t s2w = 0;
};
CommCounts expected_counts(Algorithm algo, std::uint64_t rounds,
                           std::uint64_t heads, std::uint64_t k_omega,
                           std::uint64_t k_alpha, std::uint64_t dim);

// ---------------------------------------------------------------------------
// Choice of (p, tau)

enum class ParamProvenance { kRealistic, kOptimistic, kManual };
std::string to_string(ParamProvenance p);

struct ParamChoice {
  double p = 1.0;
  double tau = 1.0;
  ParamProvenance provenance = ParamProvenance::kManual;
  double mu_r = 0.0;
};

// r d / ((1 - r) K_w + r K_a); 0 when r = 0.
double mu_r(double r, double dim, double k_omega, double k_alpha);

// p = min{1/(w+1), 1/mu_r}, tau = p^{1/3} / (w+1)^{2/3}.
ParamChoice select_params_realistic(double omega, double k_omega,
                                    double k_alpha, double dim, double r);

// Choice when L_max / L is known. Requires 0 < L <= L_max <= n L.
ParamChoice select_params_optimistic(double omega, double k_omega,
                                     double k_alpha, double dim, double r,
                                     double L, double L_max, std::size_t n,
                                     double alpha);

// ---------------------------------------------------------------------------
// Complexity expressions (log factors and Theta constants dropped)

struct ComplexityInputs {
  double L = 1.0;
  double L_max = 1.0;
  double mu = 1.0;
  double omega = 0.0;
  double alpha = 1.0;
  double k_omega = 1.0;
  double k_alpha = 1.0;
  double dim = 1.0;
  double r = 0.5;
  std::size_t n = 1;
};

// Rounds of the realistic (p, tau) choice.
double realistic_rounds(const ComplexityInputs& in);
// ((1 - r) K_w + r K_a) * realistic_rounds + d
double realistic_total(const ComplexityInputs& in);
// ((1 - r) K_w + r K_a) (L/(a mu) + w Lmax/(n mu) + w) + d
double ef21p_diana_total(const ComplexityInputs& in);
// d sqrt(L / mu)
double agd_total(double dim, double L, double mu);

// Compressor densities coupled to r as in the AGD comparison:
// r <= 1/2: K_w = K, K_a = min(ceil((1-r)/r K), d); else K_w =
// min(ceil(r/(1-r) K), d), K_a = K.
struct CoupledDensities {
  std::uint64_t k_omega = 0;
  std::uint64_t k_alpha = 0;
};
CoupledDensities agd_coupled_densities(double r, std::uint64_t k,
                                       std::uint64_t dim);

}  // namespace bidiopt
