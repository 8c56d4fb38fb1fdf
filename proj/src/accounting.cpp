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

#include "bidiopt/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bidiopt/common.hpp"
#include "bidiopt/compressors.hpp"

namespace bidiopt {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kTwoDirection: return "2direction";
    case Algorithm::kAdiana: return "adiana";
    case Algorithm::kEf21pDiana: return "ef21p_diana";
    case Algorithm::kGd: return "gd";
    case Algorithm::kAgd: return "agd";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::kTwoDirection, Algorithm::kAdiana,
                 Algorithm::kEf21pDiana, Algorithm::kGd, Algorithm::kAgd})
    if (to_string(a) == name) return a;
  throw Error("unknown algorithm '" + std::string(name) +
              "' (expected 2direction, adiana, ef21p_diana, gd or agd)");
}

CommLedger::CommLedger(std::size_t workers, double r, W2sMode mode)
    : w2s_(workers, 0), r_(r), mode_(mode) {
  if (workers == 0) throw Error("ledger needs at least one worker");
  if (!(r >= 0.0 && r <= 1.0)) throw Error("r must lie in [0, 1]");
}

void CommLedger::charge_w2s(std::size_t worker, std::uint64_t coords) {
  w2s_.at(worker) += coords;
}

void CommLedger::charge_w2s_all(std::uint64_t coords) {
  for (auto& c : w2s_) c += coords;
}

void CommLedger::charge_s2w(std::uint64_t coords) { s2w_ += coords; }

std::uint64_t CommLedger::w2s_reported() const {
  if (w2s_.empty()) return 0;
  if (mode_ == W2sMode::kSummed)
    return std::accumulate(w2s_.begin(), w2s_.end(), std::uint64_t{0});
  return *std::max_element(w2s_.begin(), w2s_.end());
}

double CommLedger::total_r() const {
  return (1.0 - r_) * static_cast<double>(w2s_reported()) +
         r_ * static_cast<double>(s2w_);
}

std::uint64_t CommLedger::w2s_bytes(std::size_t worker) const {
  return w2s(worker) * kBytesPerCoordinate;
}

std::uint64_t CommLedger::s2w_bytes() const { return s2w_ * kBytesPerCoordinate; }

CommCounts expected_counts(Algorithm algo, std::uint64_t rounds,
                           std::uint64_t heads, std::uint64_t k_omega,
                           std::uint64_t k_alpha, std::uint64_t dim) {
  switch (algo) {
    case Algorithm::kTwoDirection:
      return {2 * k_omega * rounds + dim, k_alpha * rounds + 2 * dim * heads + dim};
    case Algorithm::kAdiana:
      return {2 * k_omega * rounds + dim, dim * rounds + dim};
    case Algorithm::kEf21pDiana:
      return {k_omega * rounds + dim, k_alpha * rounds + dim};
    case Algorithm::kGd:
    case Algorithm::kAgd:
      return {dim * rounds, dim * rounds};
  }
  return {};
}

std::string to_string(ParamProvenance p) {
  switch (p) {
    case ParamProvenance::kRealistic: return "realistic";
    case ParamProvenance::kOptimistic: return "optimistic";
    case ParamProvenance::kManual: return "manual";
  }
  return "?";
}

double mu_r(double r, double dim, double k_omega, double k_alpha) {
  if (r == 0.0) return 0.0;
  return r * dim / ((1.0 - r) * k_omega + r * k_alpha);
}

namespace {

double inv_or_inf(double v) {
  return v > 0.0 ? 1.0 / v : std::numeric_limits<double>::infinity();
}

double clamp_unit(double v) {
  if (!(v > 0.0)) throw Error("parameter choice produced a non-positive value");
  return std::min(v, 1.0);
}

}  // namespace

ParamChoice select_params_realistic(double omega, double k_omega,
                                    double k_alpha, double dim, double r) {
  ParamChoice c;
  c.provenance = ParamProvenance::kRealistic;
  c.mu_r = mu_r(r, dim, k_omega, k_alpha);
  const double w1 = omega + 1.0;
  c.p = clamp_unit(std::min(1.0 / w1, inv_or_inf(c.mu_r)));
  c.tau = clamp_unit(std::cbrt(c.p) / std::pow(w1, 2.0 / 3.0));
  return c;
}

ParamChoice select_params_optimistic(double omega, double k_omega,
                                     double k_alpha, double dim, double r,
                                     double L, double L_max, std::size_t n,
                                     double alpha) {
  const double nd = static_cast<double>(n);
  if (!(L > 0.0 && L <= L_max && L_max <= nd * L * (1.0 + 1e-12)))
    throw Error("optimistic parameters need 0 < L <= L_max <= n L");
  ParamChoice c;
  c.provenance = ParamProvenance::kOptimistic;
  c.mu_r = mu_r(r, dim, k_omega, k_alpha);
  const double w1 = omega + 1.0;
  const double ratio = L * nd / L_max;
  c.p = clamp_unit(std::min(
      {1.0, inv_or_inf(c.mu_r), std::cbrt(ratio) / w1,
       std::max(1.0 / w1, std::sqrt(ratio) / (std::sqrt(alpha) * std::pow(w1, 1.5)))}));
  c.tau = clamp_unit(std::min(
      1.0, std::cbrt(ratio) *
               std::min(1.0 / w1, std::cbrt(c.p) / std::pow(w1, 2.0 / 3.0))));
  return c;
}

namespace {
double k_r(const ComplexityInputs& in) {
  return (1.0 - in.r) * in.k_omega + in.r * in.k_alpha;
}
}  // namespace

double realistic_rounds(const ComplexityInputs& in) {
  const double m = mu_r(in.r, in.dim, in.k_omega, in.k_alpha);
  const double big = std::max(in.omega + 1.0, m);
  const double n = static_cast<double>(in.n);
  return std::sqrt(in.L * big / (in.alpha * in.mu)) +
         std::sqrt(in.L_max * in.omega * big / (n * in.mu)) + 1.0 / in.alpha +
         in.omega + m;
}

double realistic_total(const ComplexityInputs& in) {
  return k_r(in) * realistic_rounds(in) + in.dim;
}

double ef21p_diana_total(const ComplexityInputs& in) {
  const double n = static_cast<double>(in.n);
  return k_r(in) * (in.L / (in.alpha * in.mu) +
                    in.omega * in.L_max / (n * in.mu) + in.omega) +
         in.dim;
}

double agd_total(double dim, double L, double mu) { return dim * std::sqrt(L / mu); }

CoupledDensities agd_coupled_densities(double r, std::uint64_t k,
                                       std::uint64_t dim) {
  if (k < 1 || k > dim) throw Error("K must lie in [1, d]");
  if (!(r >= 0.0 && r <= 1.0)) throw Error("r must lie in [0, 1]");
  auto capped = [dim](double v) {
    return std::min<std::uint64_t>(static_cast<std::uint64_t>(std::ceil(v)), dim);
  };
  const double kd = static_cast<double>(k);
  if (r <= 0.5) {
    if (r == 0.0) return {k, dim};
    return {k, capped((1.0 - r) / r * kd)};
  }
  if (r == 1.0) return {dim, k};
  return {capped(r / (1.0 - r) * kd), k};
}

}  // namespace bidiopt
