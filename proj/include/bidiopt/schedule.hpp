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

namespace bidiopt {

// Constant of the provable choice of the Lipschitz-like parameter.
inline constexpr double kTheoryConstant = 660508.0;

struct ScheduleParams {
  double lbar = 1.0;   // Lipschitz-like parameter, > 0
  double mu = 0.0;     // strong convexity, >= 0
  double p = 1.0;      // coin probability, (0, 1]
  double alpha = 1.0;  // primal contraction, (0, 1]
  double tau = 1.0;    // momentum of v, (0, 1]
  double beta = 1.0;   // shift step, (0, 1/(omega+1)]
  double gamma0 = 1.0;

  // Throws Error on out-of-range values (including lbar < mu, gamma0 < 1).
  void validate() const;
};

struct ScheduleStep {
  double theta_bar = 0.0;  // largest root of the step quadratic
  double theta = 0.0;      // min(theta_bar, theta_min)
  double gamma = 0.0;      // gamma_{t+1}
  double big_gamma_prev = 0.0;  // Gamma_t
  double big_gamma = 0.0;       // Gamma_{t+1}
  // (lbar + Gamma_t mu) / gamma_{t+1}, computed without forming Gamma_t mu,
  // so it stays finite after Gamma_t overflows.
  double prox_weight = 0.0;
};

double theta_min(double p, double alpha, double tau, double beta);

// One call of the learning-rate recursion from Gamma_t.
ScheduleStep calc_learning_rates(double big_gamma, const ScheduleParams& params);

// Stateful wrapper: Gamma_0 -> Gamma_1 -> ...
class Schedule {
 public:
  explicit Schedule(const ScheduleParams& params);

  const ScheduleStep& advance();
  std::size_t round() const { return round_; }
  double big_gamma() const { return big_gamma_; }
  const ScheduleStep& last() const { return last_; }
  const ScheduleParams& params() const { return params_; }

 private:
  ScheduleParams params_;
  double big_gamma_;
  std::size_t round_ = 0;
  ScheduleStep last_{};
};

struct LbarInputs {
  double L = 1.0;
  double L_max = 1.0;
  double omega = 0.0;
  double alpha = 1.0;
  double tau = 1.0;
  double p = 1.0;
  double beta = 1.0;
  std::size_t n = 1;
};

// constant * max{L/a, Lp/(a tau), sqrt(L Lmax) p sqrt(w tau)/(a b sqrt n),
//   sqrt(L Lmax) sqrt(p) sqrt(w tau)/(a sqrt(b) sqrt n), Lmax w p^2/(b^2 n),
//   Lmax w / n}
double lbar_theory(const LbarInputs& in, double constant = kTheoryConstant);

// Rate constant Q of the strongly convex guarantee
//   E[f(z^T) - f*] + mu/2 E|u^T - x*|^2 <= 2 exp(-T/Q) (...)
// with the same constant as used for lbar.
double strongly_convex_q(const LbarInputs& in, double mu,
                         double constant = kTheoryConstant);

// Default Gamma_0: lbar/mu when mu > 0, lbar/L otherwise, never below 1.
double gamma0_strongly_convex(double lbar, double mu);
double gamma0_general_convex(double lbar, double L);

// Lower bounds on Gamma_t guaranteed by the recursion (checked by tests).
double gamma_lower_bound_exp(std::size_t t, const ScheduleParams& params);
std::size_t gamma_bound_t_bar(const ScheduleParams& params);
double gamma_lower_bound_piecewise(std::size_t t, const ScheduleParams& params);

}  // namespace bidiopt
