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

#include "bidiopt/algorithms.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace bidiopt {
namespace {

Vector initial_point(const DistributedProblem& problem, const CommonOptions& common) {
  const auto d = static_cast<Eigen::Index>(problem.dim());
  if (!common.x0) return Vector::Zero(d);
  if (common.x0->size() != d) throw Error("x0 has the wrong dimension");
  return *common.x0;
}

void check_spec(const CompressorSpec& spec, const DistributedProblem& problem,
                const char* role) {
  spec.validate();
  if (spec.dim != problem.dim())
    throw Error(std::string(role) + " compressor dimension " + std::to_string(spec.dim) +
                " does not match the problem dimension " + std::to_string(problem.dim()));
}

void check_dual(const CompressorSpec& spec, const DistributedProblem& problem) {
  check_spec(spec, problem, "dual");
  if (!spec.is_unbiased()) throw Error("the dual compressor must be unbiased");
}

void check_primal(const CompressorSpec& spec, const DistributedProblem& problem) {
  check_spec(spec, problem, "primal");
  if (!spec.is_contractive()) throw Error("the primal compressor must be contractive");
}

// Ascending-order mean of vectors.
Vector mean_of(const std::vector<Vector>& vs) {
  Vector s = vs.front();
  for (std::size_t i = 1; i < vs.size(); ++i) s += vs[i];
  return s / static_cast<double>(vs.size());
}

Vector message_sum(const std::vector<Message>& msgs, std::size_t dim) {
  Vector s = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& m : msgs) m.add_to(s);
  return s;
}

bool coin_for(const CoinScript& script, std::uint64_t seed, std::uint64_t round, double p) {
  if (round < script.size()) return script[round] != 0;
  RngStream rng({seed, kServerId, round, Purpose::kCoin});
  return rng.bernoulli(p);
}

}  // namespace

Vector shifted_gradient_estimate(const DistributedProblem& problem,
                                 const std::vector<Vector>& shifts,
                                 const Vector& mean_shift, const Vector& y,
                                 const CompressorSpec& dual, std::uint64_t seed,
                                 std::uint64_t round, const ExecConfig& exec) {
  const std::size_t n = problem.workers();
  if (shifts.size() != n) throw Error("need one shift per worker");
  std::vector<Message> msgs(n);
  for_each_worker(n, exec, [&](std::size_t i) {
    Vector grad;
    problem.worker(i).gradient(y, grad);
    RngStream rng({seed, static_cast<std::uint32_t>(i), round, Purpose::kDualY});
    msgs[i] = compress(dual, grad - shifts[i], rng);
  });
  return mean_shift + message_sum(msgs, problem.dim()) / static_cast<double>(n);
}

void prox_step(double weight, double mu, const Vector& anchor, const Vector& y,
               const Vector& lin, Vector& out) {
  out = (weight * anchor + mu * y - lin) / (weight + mu);
}

// ---------------------------------------------------------------------------
// 2Direction

TwoDirection::TwoDirection(const DistributedProblem& problem, TwoDirectionOptions options)
    : Method(problem.workers(), options.common.r, options.common.w2s_mode),
      problem_(problem),
      options_(std::move(options)),
      schedule_(options_.schedule) {
  check_dual(options_.dual, problem);
  check_primal(options_.primal, problem);
  const std::size_t n = problem.workers();
  const auto d = problem.dim();
  const Vector x0 = initial_point(problem, options_.common);

  std::vector<Vector> grads;
  problem.worker_gradients(x0, grads, options_.common.exec);
  auto& s = server_;
  s.x = s.y = s.z = s.u = s.w = s.q = x0;
  s.h = mean_of(grads);
  s.k = s.v = s.g = s.h;

  replicas_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = replicas_[i];
    r.w = r.z = r.y = r.q = x0;
    r.k = s.k;
    r.h = grads[i];
    r.grad_z = grads[i];
  }
  msg_y_.resize(n);
  msg_z_.resize(n);
  grad_y_.resize(n);
  ledger_.charge_w2s_all(d);
  ledger_.charge_s2w(d);
}

void TwoDirection::step() {
  const ScheduleStep& st = schedule_.advance();
  const double theta = st.theta;
  const double weight = st.prox_weight;
  const double mu = schedule_.params().mu;
  const double beta = schedule_.params().beta;
  const double tau = schedule_.params().tau;
  const std::size_t n = problem_.workers();
  const std::size_t d = problem_.dim();
  const std::uint64_t seed = options_.common.seed;
  const std::uint64_t t = round_;
  const auto& exec = options_.common.exec;
  auto& s = server_;

  s.y = theta * s.w + (1.0 - theta) * s.z;
  for_each_worker(n, exec, [&](std::size_t i) {
    auto& r = replicas_[i];
    r.y = theta * r.w + (1.0 - theta) * r.z;
    problem_.worker(i).gradient(r.y, grad_y_[i]);
    RngStream rng({seed, static_cast<std::uint32_t>(i), t, Purpose::kDualY});
    msg_y_[i] = compress(options_.dual, grad_y_[i] - r.h, rng);
  });
  for (std::size_t i = 0; i < n; ++i) ledger_.charge_w2s(i, msg_y_[i].stored());

  s.g = s.h + message_sum(msg_y_, d) / static_cast<double>(n);
  Vector u_next;
  prox_step(weight, mu, s.u, s.y, s.g, u_next);
  prox_step(weight, mu, s.w, s.y, s.k, s.q);
  RngStream primal_rng({seed, kServerId, t, Purpose::kPrimal});
  const Message p = compress(options_.primal, u_next - s.q, primal_rng);
  s.w = s.q;
  p.add_to(s.w);
  s.x = theta * u_next + (1.0 - theta) * s.z;
  s.u = std::move(u_next);
  ledger_.charge_s2w(p.stored());

  const bool heads = coin_for(options_.coins, seed, t, schedule_.params().p);
  last_coin_ = heads ? 1 : 0;
  if (heads) {
    s.k = s.v;
    s.z = s.x;
    ledger_.charge_s2w(2 * d);
  }

  for_each_worker(n, exec, [&](std::size_t i) {
    auto& r = replicas_[i];
    prox_step(weight, mu, r.w, r.y, r.k, r.q);
    r.w = r.q;
    p.add_to(r.w);
    if (heads) {
      r.z = s.x;
      r.k = s.k;
      problem_.worker(i).gradient(r.z, r.grad_z);
    }
    RngStream rng({seed, static_cast<std::uint32_t>(i), t, Purpose::kDualZ});
    msg_z_[i] = compress(options_.dual, r.grad_z - r.h, rng);
    msg_z_[i].add_to(r.h, beta);
  });
  for (std::size_t i = 0; i < n; ++i) ledger_.charge_w2s(i, msg_z_[i].stored());

  const Vector mz = message_sum(msg_z_, d) / static_cast<double>(n);
  s.v = (1.0 - tau) * s.v + tau * (s.h + mz);
  s.h += beta * mz;
  ++round_;
}

// ---------------------------------------------------------------------------
// ADIANA

Adiana::Adiana(const DistributedProblem& problem, AdianaOptions options)
    : Method(problem.workers(), options.common.r, options.common.w2s_mode),
      problem_(problem),
      options_(std::move(options)),
      schedule_(options_.schedule) {
  check_dual(options_.dual, problem);
  const Vector x0 = initial_point(problem, options_.common);
  auto& s = state_;
  s.x = s.y = s.z = s.u = x0;
  problem.worker_gradients(x0, s.h_workers, options_.common.exec);
  s.grad_z = s.h_workers;
  s.h = mean_of(s.h_workers);
  s.g = s.h;
  msg_z_.resize(problem.workers());
  ledger_.charge_w2s_all(problem.dim());
  ledger_.charge_s2w(problem.dim());
}

void Adiana::step() {
  const ScheduleStep& st = schedule_.advance();
  const double theta = st.theta;
  const double mu = schedule_.params().mu;
  const double beta = schedule_.params().beta;
  const std::size_t n = problem_.workers();
  const std::size_t d = problem_.dim();
  const std::uint64_t seed = options_.common.seed;
  const std::uint64_t t = round_;
  const auto& exec = options_.common.exec;
  auto& s = state_;

  s.y = theta * s.u + (1.0 - theta) * s.z;
  s.g = shifted_gradient_estimate(problem_, s.h_workers, s.h, s.y, options_.dual, seed,
                                  t, exec);
  ledger_.charge_w2s_all(expected_density(options_.dual));
  Vector u_next;
  prox_step(st.prox_weight, mu, s.u, s.y, s.g, u_next);
  s.u = std::move(u_next);
  ledger_.charge_s2w(d);

  const bool heads = coin_for(options_.coins, seed, t, schedule_.params().p);
  last_coin_ = heads ? 1 : 0;
  s.x = theta * s.u + (1.0 - theta) * s.z;
  if (heads) s.z = s.x;

  for_each_worker(n, exec, [&](std::size_t i) {
    if (heads) problem_.worker(i).gradient(s.z, s.grad_z[i]);
    RngStream rng({seed, static_cast<std::uint32_t>(i), t, Purpose::kDualZ});
    msg_z_[i] = compress(options_.dual, s.grad_z[i] - s.h_workers[i], rng);
    msg_z_[i].add_to(s.h_workers[i], beta);
  });
  for (std::size_t i = 0; i < n; ++i) ledger_.charge_w2s(i, msg_z_[i].stored());
  s.h += beta * (message_sum(msg_z_, d) / static_cast<double>(n));
  ++round_;
}

// ---------------------------------------------------------------------------
// EF21-P + DIANA

Ef21pDiana::Ef21pDiana(const DistributedProblem& problem, Ef21pDianaOptions options)
    : Method(problem.workers(), options.common.r, options.common.w2s_mode),
      problem_(problem),
      options_(std::move(options)) {
  check_dual(options_.dual, problem);
  check_primal(options_.primal, problem);
  if (!(options_.gamma > 0.0) || !std::isfinite(options_.gamma))
    throw Error("EF21-P + DIANA needs a positive step size");
  const double beta_max = 1.0 / (omega_of(options_.dual) + 1.0);
  beta_ = options_.beta > 0.0 ? options_.beta : beta_max;
  if (beta_ > beta_max * (1.0 + 1e-15))
    throw Error("beta must not exceed 1/(omega+1)");
  const Vector x0 = initial_point(problem, options_.common);
  auto& s = state_;
  s.u = s.w = x0;
  problem.worker_gradients(x0, s.h_workers, options_.common.exec);
  s.h = mean_of(s.h_workers);
  s.g = s.h;
  s.w_workers.assign(problem.workers(), x0);
  msg_.resize(problem.workers());
  grads_.resize(problem.workers());
  ledger_.charge_w2s_all(problem.dim());
  ledger_.charge_s2w(problem.dim());
}

void Ef21pDiana::step() {
  const std::size_t n = problem_.workers();
  const std::size_t d = problem_.dim();
  const std::uint64_t seed = options_.common.seed;
  const std::uint64_t t = round_;
  auto& s = state_;

  for_each_worker(n, options_.common.exec, [&](std::size_t i) {
    problem_.worker(i).gradient(s.w_workers[i], grads_[i]);
    RngStream rng({seed, static_cast<std::uint32_t>(i), t, Purpose::kDualY});
    msg_[i] = compress(options_.dual, grads_[i] - s.h_workers[i], rng);
    msg_[i].add_to(s.h_workers[i], beta_);
  });
  for (std::size_t i = 0; i < n; ++i) ledger_.charge_w2s(i, msg_[i].stored());

  const Vector m = message_sum(msg_, d) / static_cast<double>(n);
  s.g = s.h + m;
  s.h += beta_ * m;
  s.u -= options_.gamma * s.g;
  RngStream primal_rng({seed, kServerId, t, Purpose::kPrimal});
  const Message p = compress(options_.primal, s.u - s.w, primal_rng);
  p.add_to(s.w);
  for (auto& w : s.w_workers) p.add_to(w);
  ledger_.charge_s2w(p.stored());
  ++round_;
}

// ---------------------------------------------------------------------------
// GD / AGD

Vector step_gd(const Vector& x, const DistributedProblem& problem, double gamma) {
  return x - gamma * problem.gradient(x);
}

GradientDescent::GradientDescent(const DistributedProblem& problem, CommonOptions common,
                                 double gamma)
    : Method(problem.workers(), common.r, common.w2s_mode),
      problem_(problem),
      common_(std::move(common)),
      gamma_(gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error("GD needs a positive step size");
  x_ = initial_point(problem, common_);
}

void GradientDescent::step() {
  x_ -= gamma_ * problem_.gradient(x_, common_.exec);
  ledger_.charge_w2s_all(problem_.dim());
  ledger_.charge_s2w(problem_.dim());
  ++round_;
}

AcceleratedGradient::AcceleratedGradient(const DistributedProblem& problem,
                                         CommonOptions common, double L, double mu)
    : Method(problem.workers(), common.r, common.w2s_mode),
      problem_(problem),
      common_(std::move(common)),
      L_(L),
      mu_(mu) {
  if (!(L > 0.0) || !std::isfinite(L) || !(mu >= 0.0) || mu > L)
    throw Error("AGD needs 0 <= mu <= L and L > 0");
  x_ = initial_point(problem, common_);
  y_ = x_;
}

void AcceleratedGradient::step() {
  const Vector x_next = y_ - (1.0 / L_) * problem_.gradient(y_, common_.exec);
  double momentum = 0.0;
  if (mu_ > 0.0) {
    const double sl = std::sqrt(L_);
    const double sm = std::sqrt(mu_);
    momentum = (sl - sm) / (sl + sm);
  } else {
    const double k = static_cast<double>(round_ + 1);
    momentum = k / (k + 3.0);
  }
  y_ = x_next + momentum * (x_next - x_);
  x_ = x_next;
  ledger_.charge_w2s_all(problem_.dim());
  ledger_.charge_s2w(problem_.dim());
  ++round_;
}

// ---------------------------------------------------------------------------
// Run loop and traces

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kBudget: return "budget";
    case RunStatus::kConverged: return "converged";
    case RunStatus::kDiverged: return "diverged";
  }
  return "?";
}

Trace run(Method& method, const DistributedProblem& problem, const RunConfig& config) {
  Trace trace;
  trace.algo = method.id();
  trace.label = to_string(method.id());

  Vector last_point;
  double last_gap = 0.0;
  double last_norm = 0.0;
  auto record = [&](int coin) {
    const Vector& pt = method.point();
    if (trace.rows.empty() || !bit_equal(pt, last_point)) {
      last_point = pt;
      last_gap = problem.gap(pt);
      last_norm = problem.gradient(pt).norm();
    }
    const auto& ledger = method.ledger();
    trace.rows.push_back({method.round(), last_gap, last_norm, ledger.w2s_reported(),
                          ledger.s2w(), ledger.total_r(), coin});
  };
  auto should_stop = [&]() {
    const auto& row = trace.rows.back();
    if (!std::isfinite(row.f_gap) || !std::isfinite(row.grad_norm)) {
      trace.status = RunStatus::kDiverged;
      std::ostringstream msg;
      msg << "non-finite objective at round " << row.round;
      trace.diagnostic = msg.str();
      return true;
    }
    const double ceiling = config.blowup * std::max(1.0, trace.rows.front().f_gap);
    if (config.blowup > 0.0 && row.f_gap > ceiling) {
      trace.status = RunStatus::kDiverged;
      std::ostringstream msg;
      msg << "gap " << row.f_gap << " exceeded " << ceiling << " at round " << row.round;
      trace.diagnostic = msg.str();
      return true;
    }
    if (config.eps > 0.0 && row.f_gap <= config.eps) {
      trace.status = RunStatus::kConverged;
      return true;
    }
    if (config.coord_budget > 0.0 && row.total_r >= config.coord_budget) return true;
    return row.round >= config.max_rounds;
  };

  record(0);
  while (!should_stop()) {
    try {
      method.step();
    } catch (const Error& e) {
      trace.status = RunStatus::kDiverged;
      trace.diagnostic = "round " + std::to_string(method.round()) + ": " + e.what();
      break;
    }
    record(method.last_coin());
  }
  return trace;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "round,f_gap,grad_norm,w2s_cum,s2w_cum,total_r,coin\n";
  for (const auto& r : trace.rows)
    out << r.round << ',' << format_double(r.f_gap) << ',' << format_double(r.grad_norm)
        << ',' << r.w2s_cum << ',' << r.s2w_cum << ',' << format_double(r.total_r) << ','
        << r.coin << '\n';
}

namespace {

template <class T>
T parse_field(std::string_view tok, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("bad CSV field '" + std::string(tok) + "'", line);
  return v;
}

}  // namespace

Trace read_trace_csv(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line) || line != "round,f_gap,grad_norm,w2s_cum,s2w_cum,total_r,coin")
    throw ParseError("missing trace header", 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 7) throw ParseError("expected 7 fields", line_no);
    TraceRow r;
    r.round = parse_field<std::uint64_t>(f[0], line_no);
    r.f_gap = parse_field<double>(f[1], line_no);
    r.grad_norm = parse_field<double>(f[2], line_no);
    r.w2s_cum = parse_field<std::uint64_t>(f[3], line_no);
    r.s2w_cum = parse_field<std::uint64_t>(f[4], line_no);
    r.total_r = parse_field<double>(f[5], line_no);
    r.coin = parse_field<int>(f[6], line_no);
    trace.rows.push_back(r);
  }
  return trace;
}

}  // namespace bidiopt
