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

#include "bidiopt/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

#include "bidiopt/common.hpp"

namespace bidiopt {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(std::string("invalid schedule parameter: ") + what);
}

bool in_unit(double v) { return std::isfinite(v) && v > 0.0 && v <= 1.0; }

double max_of(std::initializer_list<double> values) {
  return *std::max_element(values.begin(), values.end());
}

}  // namespace

void ScheduleParams::validate() const {
  require(std::isfinite(lbar) && lbar > 0.0, "lbar must be positive");
  require(std::isfinite(mu) && mu >= 0.0, "mu must be non-negative");
  require(lbar >= mu, "lbar must be at least mu");
  require(in_unit(p), "p must lie in (0, 1]");
  require(in_unit(alpha), "alpha must lie in (0, 1]");
  require(in_unit(tau), "tau must lie in (0, 1]");
  require(in_unit(beta), "beta must lie in (0, 1]");
  require(std::isfinite(gamma0) && gamma0 >= 1.0, "gamma0 must be at least 1");
}

double theta_min(double p, double alpha, double tau, double beta) {
  return 0.25 * std::min({1.0, alpha / p, tau / p, beta / p});
}

ScheduleStep calc_learning_rates(double big_gamma, const ScheduleParams& params) {
  if (!(big_gamma > 0.0)) throw Error("Gamma_t must be positive");
  const double p = params.p;
  // The quadratic divided by Gamma_t: a th^2 + b th + c = 0 with
  // a = p lbar, b = p s, c = -s, s = lbar / Gamma_t + mu.
  const double s = params.lbar / big_gamma + params.mu;
  const double a = p * params.lbar;
  const double b = p * s;
  // Largest root in the cancellation-free form 2(-c) / (b + sqrt(b^2 - 4ac)).
  const double theta_bar = 2.0 * s / (b + std::sqrt(b * b + 4.0 * a * s));

  ScheduleStep step;
  step.theta_bar = theta_bar;
  step.theta = std::min(theta_bar, theta_min(p, params.alpha, params.tau, params.beta));
  step.big_gamma_prev = big_gamma;
  const double pt = p * step.theta;
  step.gamma = pt * big_gamma / (1.0 - pt);
  step.big_gamma = big_gamma + step.gamma;
  step.prox_weight = s * (1.0 - pt) / pt;
  if (!std::isfinite(step.theta) || !(step.theta > 0.0) ||
      !std::isfinite(step.prox_weight))
    throw Error("learning-rate recursion produced a non-finite value");
  return step;
}

Schedule::Schedule(const ScheduleParams& params)
    : params_(params), big_gamma_(params.gamma0) {
  params_.validate();
}

const ScheduleStep& Schedule::advance() {
  last_ = calc_learning_rates(big_gamma_, params_);
  big_gamma_ = last_.big_gamma;
  ++round_;
  return last_;
}

double lbar_theory(const LbarInputs& in, double constant) {
  const double n = static_cast<double>(in.n);
  const double sll = std::sqrt(in.L * in.L_max);
  const double swt = std::sqrt(in.omega * in.tau);
  return constant *
         max_of({in.L / in.alpha, in.L * in.p / (in.alpha * in.tau),
                 sll * in.p * swt / (in.alpha * in.beta * std::sqrt(n)),
                 sll * std::sqrt(in.p) * swt /
                     (in.alpha * std::sqrt(in.beta) * std::sqrt(n)),
                 in.L_max * in.omega * in.p * in.p / (in.beta * in.beta * n),
                 in.L_max * in.omega / n});
}

double strongly_convex_q(const LbarInputs& in, double mu, double constant) {
  if (!(mu > 0.0)) throw Error("the strongly convex rate needs mu > 0");
  const double n = static_cast<double>(in.n);
  const double w1 = in.omega + 1.0;
  const double sll = std::sqrt(in.L * in.L_max);
  const double swt = std::sqrt(in.omega * in.tau);
  const double inner = max_of(
      {std::sqrt(in.L / (in.alpha * in.p * mu)),
       std::sqrt(in.L / (in.alpha * in.tau * mu)),
       std::sqrt(sll * w1 * swt / (in.alpha * std::sqrt(n) * mu)),
       std::sqrt(sll * std::sqrt(w1) * swt /
                 (in.alpha * std::sqrt(in.p) * std::sqrt(n) * mu)),
       std::sqrt(in.L_max * in.omega * w1 * w1 * in.p / (n * mu)),
       std::sqrt(in.L_max * in.omega / (n * in.p * mu)), 1.0 / in.alpha,
       1.0 / in.tau, w1, 1.0 / in.p});
  return 2.0 * std::sqrt(constant) * inner;
}

double gamma0_strongly_convex(double lbar, double mu) {
  if (!(mu > 0.0)) throw Error("gamma0_strongly_convex needs mu > 0");
  return std::max(1.0, lbar / mu);
}

double gamma0_general_convex(double lbar, double L) {
  if (!(L > 0.0)) throw Error("gamma0_general_convex needs L > 0");
  return std::max(1.0, lbar / L);
}

double gamma_lower_bound_exp(std::size_t t, const ScheduleParams& params) {
  const double tm = theta_min(params.p, params.alpha, params.tau, params.beta);
  const double rate = std::min(std::sqrt(params.p * params.mu / (4.0 * params.lbar)),
                               params.p * tm);
  return 0.5 * params.gamma0 * std::exp(static_cast<double>(t) * rate);
}

std::size_t gamma_bound_t_bar(const ScheduleParams& params) {
  const double tm = theta_min(params.p, params.alpha, params.tau, params.beta);
  const double ptm = params.p * tm;
  const double v = std::ceil(std::log(1.0 / (2.0 * params.gamma0 * ptm * tm)) / ptm);
  return v > 0.0 ? static_cast<std::size_t>(v) : 0;
}

double gamma_lower_bound_piecewise(std::size_t t, const ScheduleParams& params) {
  const double tm = theta_min(params.p, params.alpha, params.tau, params.beta);
  const double ptm = params.p * tm;
  const std::size_t t_bar = gamma_bound_t_bar(params);
  if (t < t_bar) return 0.5 * params.gamma0 * std::exp(static_cast<double>(t) * ptm);
  const double dt = static_cast<double>(t - t_bar);
  return 1.0 / (4.0 * ptm * tm) + params.p * dt * dt / 16.0;
}

}  // namespace bidiopt
