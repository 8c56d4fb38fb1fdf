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
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bidiopt/accounting.hpp"
#include "bidiopt/common.hpp"
#include "bidiopt/compressors.hpp"
#include "bidiopt/parallel.hpp"
#include "bidiopt/problems.hpp"
#include "bidiopt/schedule.hpp"

namespace bidiopt {

// Optional fixed coin outcomes; round t uses script[t] while it lasts and
// falls back to the coin stream afterwards.
using CoinScript = std::vector<std::uint8_t>;

// Shared state of every optimizer: the ledger and the round counter.
class Method {
 public:
  virtual ~Method() = default;

  virtual Algorithm id() const = 0;
  virtual void step() = 0;
  // The iterate whose optimality gap is reported (z for the coin methods,
  // u for EF21-P + DIANA, x for GD/AGD).
  virtual const Vector& point() const = 0;
  // Coin of the most recent round (0 for methods without one).
  virtual int last_coin() const { return 0; }

  const CommLedger& ledger() const { return ledger_; }
  std::size_t round() const { return round_; }

 protected:
  Method(std::size_t workers, double r, W2sMode mode)
      : ledger_(workers, r, mode) {}

  CommLedger ledger_;
  std::size_t round_ = 0;
};

struct CommonOptions {
  std::uint64_t seed = 0;
  double r = 0.5;
  W2sMode w2s_mode = W2sMode::kPerWorker;
  ExecConfig exec{};
  std::optional<Vector> x0;  // zeros when absent
};

// g = h + (1/n) sum_i C_i(grad f_i(y) - h_i), with C_i drawn from the stream
// (seed, i, round, purpose). Used by the coin methods for the y-messages and
// exposed for estimator tests.
Vector shifted_gradient_estimate(const DistributedProblem& problem,
                                 const std::vector<Vector>& shifts,
                                 const Vector& mean_shift, const Vector& y,
                                 const CompressorSpec& dual,
                                 std::uint64_t seed, std::uint64_t round,
                                 const ExecConfig& exec = {});

// argmin_x <lin, x> + weight/2 |x - anchor|^2 + mu/2 |x - y|^2
void prox_step(double weight, double mu, const Vector& anchor, const Vector& y,
               const Vector& lin, Vector& out);

// ---------------------------------------------------------------------------
// 2Direction

struct TwoDirectionOptions {
  CommonOptions common;
  CompressorSpec dual;    // unbiased, applied by workers
  CompressorSpec primal;  // contractive, applied by the server
  ScheduleParams schedule;  // alpha and beta must match the compressors
  CoinScript coins;
};

struct TwoDirectionServer {
  Vector x, y, z, u, w, q, k, v, h, g;
};

// Worker-side copies; w, z, k are kept in sync only through messages.
struct TwoDirectionReplica {
  Vector w, z, k, y, q, h;
  Vector grad_z;  // cached grad f_i(z), refreshed when z changes
};

class TwoDirection final : public Method {
 public:
  TwoDirection(const DistributedProblem& problem, TwoDirectionOptions options);

  Algorithm id() const override { return Algorithm::kTwoDirection; }
  void step() override;
  const Vector& point() const override { return server_.z; }
  int last_coin() const override { return last_coin_; }

  const TwoDirectionServer& server() const { return server_; }
  const std::vector<TwoDirectionReplica>& replicas() const { return replicas_; }
  const Schedule& schedule() const { return schedule_; }
  const TwoDirectionOptions& options() const { return options_; }

 private:
  bool draw_coin();

  const DistributedProblem& problem_;
  TwoDirectionOptions options_;
  Schedule schedule_;
  TwoDirectionServer server_;
  std::vector<TwoDirectionReplica> replicas_;
  std::vector<Message> msg_y_, msg_z_;
  std::vector<Vector> grad_y_;
  int last_coin_ = 0;
};

// ---------------------------------------------------------------------------
// ADIANA (uplink compression only; the server broadcasts u uncompressed)

struct AdianaOptions {
  CommonOptions common;
  CompressorSpec dual;
  ScheduleParams schedule;
  CoinScript coins;
};

struct AdianaState {
  Vector x, y, z, u, h, g;
  std::vector<Vector> h_workers;
  std::vector<Vector> grad_z;
};

class Adiana final : public Method {
 public:
  Adiana(const DistributedProblem& problem, AdianaOptions options);

  Algorithm id() const override { return Algorithm::kAdiana; }
  void step() override;
  const Vector& point() const override { return state_.z; }
  int last_coin() const override { return last_coin_; }

  const AdianaState& state() const { return state_; }
  const Schedule& schedule() const { return schedule_; }

 private:
  const DistributedProblem& problem_;
  AdianaOptions options_;
  Schedule schedule_;
  AdianaState state_;
  std::vector<Message> msg_z_;
  int last_coin_ = 0;
};

// ---------------------------------------------------------------------------
// EF21-P + DIANA

struct Ef21pDianaOptions {
  CommonOptions common;
  CompressorSpec dual;
  CompressorSpec primal;
  double gamma = 0.0;  // step size, > 0
  double beta = 0.0;   // shift step; 0 selects 1/(omega+1)
};

struct Ef21pDianaState {
  Vector u, w, h, g;
  std::vector<Vector> h_workers;
  std::vector<Vector> w_workers;
};

class Ef21pDiana final : public Method {
 public:
  Ef21pDiana(const DistributedProblem& problem, Ef21pDianaOptions options);

  Algorithm id() const override { return Algorithm::kEf21pDiana; }
  void step() override;
  const Vector& point() const override { return state_.u; }

  const Ef21pDianaState& state() const { return state_; }
  double beta() const { return beta_; }

 private:
  const DistributedProblem& problem_;
  Ef21pDianaOptions options_;
  double beta_;
  Ef21pDianaState state_;
  std::vector<Message> msg_;
  std::vector<Vector> grads_;
};

// ---------------------------------------------------------------------------
// Uncompressed baselines

class GradientDescent final : public Method {
 public:
  GradientDescent(const DistributedProblem& problem, CommonOptions common,
                  double gamma);

  Algorithm id() const override { return Algorithm::kGd; }
  void step() override;
  const Vector& point() const override { return x_; }

 private:
  const DistributedProblem& problem_;
  CommonOptions common_;
  double gamma_;
  Vector x_;
};

// Strongly convex (mu > 0): constant momentum (sqrt L - sqrt mu)/(sqrt L +
// sqrt mu). Otherwise Nesterov's t/(t+3) extrapolation. Step 1/L in both.
class AcceleratedGradient final : public Method {
 public:
  AcceleratedGradient(const DistributedProblem& problem, CommonOptions common,
                      double L, double mu);

  Algorithm id() const override { return Algorithm::kAgd; }
  void step() override;
  const Vector& point() const override { return x_; }
  const Vector& extrapolated() const { return y_; }

 private:
  const DistributedProblem& problem_;
  CommonOptions common_;
  double L_;
  double mu_;
  Vector x_, y_;
};

// x' = x - gamma grad f(x)
Vector step_gd(const Vector& x, const DistributedProblem& problem, double gamma);

// ---------------------------------------------------------------------------
// Run loop and traces

struct TraceRow {
  std::uint64_t round = 0;
  double f_gap = 0.0;
  double grad_norm = 0.0;
  std::uint64_t w2s_cum = 0;
  std::uint64_t s2w_cum = 0;
  double total_r = 0.0;
  int coin = 0;
};

enum class RunStatus { kBudget, kConverged, kDiverged };
std::string to_string(RunStatus status);

struct Trace {
  std::string label;
  Algorithm algo = Algorithm::kGd;
  std::optional<int> grid_exponent;
  std::vector<TraceRow> rows;
  RunStatus status = RunStatus::kBudget;
  std::string diagnostic;
};

// Stopping rules, combined by OR. A zero/negative value disables a rule,
// except max_rounds, which always applies.
struct RunConfig {
  std::size_t max_rounds = 1000;
  double coord_budget = 0.0;  // stop once total_r >= budget
  double eps = 0.0;           // stop once f_gap <= eps
  // Marks the run diverged once f_gap exceeds this multiple of max(1, initial gap).
  // Zero disables the check.
  double blowup = 1e8;
};

// Records the initial point, then steps until a rule fires. A non-finite
// objective, or a gap beyond the blowup threshold, ends the run with status
// kDiverged and a diagnostic.
Trace run(Method& method, const DistributedProblem& problem,
          const RunConfig& config);

// Header: round,f_gap,grad_norm,w2s_cum,s2w_cum,total_r,coin
void write_trace_csv(const Trace& trace, std::ostream& out);
Trace read_trace_csv(std::istream& in);
// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace bidiopt
