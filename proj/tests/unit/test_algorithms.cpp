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

#include <cmath>
#include <sstream>

#include <doctest.h>

#include "bidiopt/algorithms.hpp"

using namespace bidiopt;

namespace {

DistributedProblem quad(std::size_t d, std::size_t n, std::uint64_t seed, double mu = 0.1,
                        double L = 10.0) {
  return make_quadratic(QuadraticSpec{d, n, mu, L, seed});
}

Vector start(std::size_t d, std::uint64_t seed) {
  RngStream rng({seed, 5, 0, Purpose::kTest});
  Vector x(static_cast<Eigen::Index>(d));
  for (auto& v : x) v = rng.normal();
  return x;
}

ScheduleParams params_for(const DistributedProblem& p, const CompressorSpec& dual,
                          double alpha, double prob, double tau) {
  ScheduleParams s;
  s.lbar = 4 * p.constants().L;
  s.mu = p.constants().mu;
  s.p = prob;
  s.alpha = alpha;
  s.tau = tau;
  s.beta = 1.0 / (omega_of(dual) + 1.0);
  s.gamma0 = std::max(1.0, s.lbar / std::max(s.mu, p.constants().L));
  return s;
}

TwoDirectionOptions two_direction(const DistributedProblem& p, std::size_t kw, std::size_t ka,
                                  std::uint64_t seed, bool identity_primal = false) {
  const auto d = p.dim();
  TwoDirectionOptions o;
  o.common.seed = seed;
  o.common.x0 = start(d, seed);
  o.dual = kw >= d ? CompressorSpec::identity(d) : CompressorSpec::rand_k(d, kw);
  o.primal = identity_primal ? CompressorSpec::identity(d) : CompressorSpec::top_k(d, ka);
  o.schedule = params_for(p, o.dual, alpha_of(o.primal), 0.4, 0.5);
  return o;
}

std::string csv_of(const Trace& t) {
  std::ostringstream out;
  write_trace_csv(t, out);
  return out.str();
}

double max_abs(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("algorithms") {

TEST_CASE("prox step closed form") {
  Vector anchor(2), y(2), lin(2), out;
  anchor << 1, -2;
  y << 0.5, 0.5;
  lin << 3, 1;
  prox_step(2.0, 0.5, anchor, y, lin, out);
  // Stationarity: lin + w (x - anchor) + mu (x - y) = 0.
  CHECK((lin + 2.0 * (out - anchor) + 0.5 * (out - y)).norm() <= 1e-14);
}

TEST_CASE("2direction with identity primal keeps w at u") {
  auto p = quad(8, 3, 1);
  TwoDirection m(p, two_direction(p, 3, 8, 1, true));
  for (int t = 0; t < 60; ++t) {
    m.step();
    CHECK(max_abs(m.server().w, m.server().u) <= 1e-12 * (1 + m.server().u.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("2direction with identity dual") {
  auto p = quad(6, 3, 2);
  auto o = two_direction(p, 6, 2, 2);
  REQUIRE(o.schedule.beta == 1.0);
  TwoDirection m(p, o);
  for (int t = 0; t < 40; ++t) {
    m.step();
    const auto& s = m.server();
    for (std::size_t i = 0; i < 3; ++i) {
      Vector gz;
      p.worker(i).gradient(s.z, gz);
      CHECK(max_abs(m.replicas()[i].h, gz) <= 1e-12 * (1 + gz.cwiseAbs().maxCoeff()));
    }
    const Vector gy = p.gradient(s.y);
    CHECK(max_abs(s.g, gy) <= 1e-12 * (1 + gy.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("2direction replicas and shift mean") {
  auto p = quad(10, 4, 3);
  TwoDirection m(p, two_direction(p, 3, 4, 3));
  for (int t = 0; t < 200; ++t) {
    const Vector z_before = m.server().z, k_before = m.server().k;
    m.step();
    const auto& s = m.server();
    Vector mean = Vector::Zero(10);
    for (const auto& r : m.replicas()) {
      CHECK(bit_equal(r.w, s.w));
      mean += r.h;
    }
    mean /= 4.0;
    CHECK(max_abs(mean, s.h) <= 1e-12 * (1 + s.h.cwiseAbs().maxCoeff()));
    if (m.last_coin() == 0) {
      CHECK(bit_equal(s.z, z_before));
      CHECK(bit_equal(s.k, k_before));
    } else {
      CHECK(bit_equal(s.z, s.x));
    }
  }
}

TEST_CASE("2direction with identity primal follows adiana") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = quad(10, 4, 100 + seed);
    auto o = two_direction(p, 3, 10, seed, true);
    AdianaOptions a;
    a.common = o.common;
    a.dual = o.dual;
    a.schedule = o.schedule;
    TwoDirection two(p, o);
    Adiana ad(p, a);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      two.step();
      ad.step();
      REQUIRE(two.last_coin() == ad.last_coin());
      worst = std::max({worst, max_abs(two.server().x, ad.state().x),
                        max_abs(two.server().z, ad.state().z),
                        max_abs(two.server().u, ad.state().u)});
      for (std::size_t i = 0; i < 4; ++i)
        worst = std::max(worst, max_abs(two.replicas()[i].h, ad.state().h_workers[i]));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("adiana scalar recursion") {
  // f(x) = x^2 - x, identity dual, p = 1, mu = 0: the method reduces to
  //   y = th u + (1 - th) z, u -= grad f(y) gamma / lbar, z = th u + (1 - th) z
  // with th the capped root of G th^2 + th - 1 = 0.
  auto p = make_quadratic({Matrix::Constant(1, 1, 2.0)}, {Vector::Constant(1, 1.0)});
  for (double lbar : {2.0, kTheoryConstant * 2.0}) {
    AdianaOptions a;
    a.common.x0 = Vector::Constant(1, 5.0);
    a.dual = CompressorSpec::identity(1);
    a.schedule.lbar = lbar;
    a.schedule.p = 1.0;
    Adiana m(p, a);
    long double G = 1, u = 5, z = 5;
    double prev = p.value(m.point());
    bool monotone = true;
    for (int t = 0; t < 50; ++t) {
      const long double th = std::min((std::sqrt(1 + 4 * G) - 1) / (2 * G), 0.25L);
      const long double gamma = th * G / (1 - th);
      G += gamma;
      const long double y = th * u + (1 - th) * z;
      u -= (2 * y - 1) * gamma / lbar;
      z = th * u + (1 - th) * z;

      m.step();
      CHECK(m.last_coin() == 1);
      CHECK(std::abs(m.point()[0] - static_cast<double>(z)) <= 1e-12 * (1 + std::abs(double(z))));
      const double cur = p.value(m.point());
      monotone = monotone && cur <= prev;
      prev = cur;
    }
    if (lbar > 2.0) CHECK(monotone);
    else CHECK(p.gap(m.point()) < 1e-6);
  }
}

TEST_CASE("ledger totals follow the closed form") {
  auto p = quad(12, 3, 4);
  const std::uint64_t d = 12, kw = 4, ka = 5, rounds = 10;
  const CoinScript coins{0, 1, 0, 0, 1, 0, 0, 0, 1, 0};
  const std::uint64_t heads = 3;

  auto o = two_direction(p, kw, ka, 4);
  o.coins = coins;
  TwoDirection two(p, o);
  AdianaOptions a;
  a.common = o.common;
  a.dual = o.dual;
  a.schedule = o.schedule;
  a.schedule.alpha = 1.0;
  a.coins = coins;
  Adiana ad(p, a);
  Ef21pDianaOptions e;
  e.common = o.common;
  e.dual = o.dual;
  e.primal = o.primal;
  e.gamma = 0.05;
  Ef21pDiana ef(p, e);
  GradientDescent gd(p, o.common, 0.05);
  AcceleratedGradient agd(p, o.common, p.constants().L, p.constants().mu);

  std::vector<Method*> methods{&two, &ad, &ef, &gd, &agd};
  for (std::uint64_t t = 0; t < rounds; ++t)
    for (auto* m : methods) m->step();
  for (auto* m : methods) {
    const auto want = expected_counts(m->id(), rounds, heads, kw, ka, d);
    for (std::size_t i = 0; i < 3; ++i) CHECK(m->ledger().w2s(i) == want.w2s);
    CHECK(m->ledger().s2w() == want.s2w);
    CHECK(m->ledger().total_r() == 0.5 * static_cast<double>(want.w2s + want.s2w));
  }
  CHECK(two.ledger().w2s(0) == 2 * kw * rounds + d);
  CHECK(two.ledger().s2w() == ka * rounds + 2 * d * heads + d);
  CHECK(ad.ledger().s2w() == d * rounds + d);
  CHECK(ef.ledger().w2s(0) == kw * rounds + d);
}

TEST_CASE("ef21p diana with identity compressors is gradient descent") {
  auto p = quad(7, 3, 5);
  Ef21pDianaOptions e;
  e.common.x0 = start(7, 5);
  e.dual = CompressorSpec::identity(7);
  e.primal = CompressorSpec::identity(7);
  e.gamma = 0.08;
  Ef21pDiana m(p, e);
  Vector x = *e.common.x0;
  for (int t = 0; t < 50; ++t) {
    m.step();
    x = step_gd(x, p, 0.08);
    CHECK(max_abs(m.state().u, x) <= 1e-12);
    CHECK(max_abs(m.state().w, m.state().u) <= 1e-12);
  }
}

TEST_CASE("ef21p diana replicas and shift mean") {
  auto p = quad(9, 4, 6);
  Ef21pDianaOptions e;
  e.common.seed = 6;
  e.dual = CompressorSpec::rand_k(9, 3);
  e.primal = CompressorSpec::top_k(9, 3);
  e.gamma = 0.02;
  Ef21pDiana m(p, e);
  CHECK(m.beta() == doctest::Approx(1.0 / 3));
  for (int t = 0; t < 100; ++t) {
    m.step();
    Vector mean = Vector::Zero(9);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(bit_equal(m.state().w_workers[i], m.state().w));
      mean += m.state().h_workers[i];
    }
    CHECK(max_abs(mean / 4.0, m.state().h) <= 1e-12 * (1 + m.state().h.cwiseAbs().maxCoeff()));
  }
  e.gamma = 0.0;
  CHECK_THROWS_AS(Ef21pDiana(p, e), Error);
}

TEST_CASE("gradient descent examples") {
  auto p = make_quadratic({Matrix::Identity(1, 1)}, {Vector::Zero(1)});
  CHECK(step_gd(Vector::Ones(1), p, 1.0)[0] == 0.0);

  auto q = quad(5, 2, 7);
  CommonOptions c;
  c.x0 = start(5, 7);
  GradientDescent gd(q, c, 1.0 / q.constants().L);
  double prev = q.value(gd.point());
  for (int t = 0; t < 100; ++t) {
    gd.step();
    const double cur = q.value(gd.point());
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("agd beats gd on an ill-conditioned quadratic") {
  auto p = quad(2, 1, 8, 0.1, 10.0);
  CommonOptions c;
  c.x0 = Vector::Constant(2, 3.0);
  GradientDescent gd(p, c, 1.0 / p.constants().L);
  AcceleratedGradient agd(p, c, p.constants().L, p.constants().mu);
  const RunConfig cfg{100000, 0.0, 1e-8};
  const auto tg = run(gd, p, cfg);
  const auto ta = run(agd, p, cfg);
  REQUIRE(tg.status == RunStatus::kConverged);
  REQUIRE(ta.status == RunStatus::kConverged);
  CHECK(ta.rows.back().round < tg.rows.back().round);

  auto convex = quad(4, 2, 9, 0.0, 1.0);
  AcceleratedGradient plain(convex, c = CommonOptions{}, 1.0, 0.0);
  const auto tc = run(plain, convex, {2000, 0.0, 0.0});
  CHECK(tc.rows.back().f_gap <= 1e-2 * tc.rows.front().f_gap);
}

TEST_CASE("run stopping rules") {
  auto p = quad(6, 2, 10);
  TwoDirection m(p, two_direction(p, 2, 2, 10));
  const auto t0 = run(m, p, {0, 0.0, 0.0});
  REQUIRE(t0.rows.size() == 1);
  CHECK(t0.rows[0].round == 0);
  CHECK(t0.rows[0].w2s_cum == 6);

  TwoDirection m2(p, two_direction(p, 2, 2, 10));
  const auto te = run(m2, p, {100, 0.0, 1e12});
  CHECK(te.rows.size() == 1);
  CHECK(te.status == RunStatus::kConverged);

  TwoDirection m3(p, two_direction(p, 2, 2, 10));
  const auto tb = run(m3, p, {1000, 500.0, 0.0});
  CHECK(tb.rows.back().total_r >= 500.0);
  CHECK(tb.rows[tb.rows.size() - 2].total_r < 500.0);
  CHECK(tb.status == RunStatus::kBudget);

  CommonOptions c;
  c.x0 = Vector::Ones(6);
  GradientDescent wild(p, c, 10.0);
  const auto td = run(wild, p, {100000, 0.0, 0.0});
  CHECK(td.status == RunStatus::kDiverged);
  CHECK_FALSE(td.diagnostic.empty());
}

TEST_CASE("runs are deterministic and thread-count independent") {
  auto p = quad(16, 6, 11);
  auto o = two_direction(p, 5, 5, 11);
  TwoDirection a(p, o), b(p, o);
  o.common.exec.threads = 4;
  TwoDirection c(p, o);
  const RunConfig cfg{150, 0.0, 0.0};
  const auto ta = csv_of(run(a, p, cfg));
  CHECK(ta == csv_of(run(b, p, cfg)));
  CHECK(ta == csv_of(run(c, p, cfg)));
  CHECK(bit_equal(a.server().w, c.server().w));

  auto o2 = two_direction(p, 5, 5, 12);
  TwoDirection d(p, o2);
  CHECK(ta != csv_of(run(d, p, cfg)));
}

TEST_CASE("trace csv round trip") {
  auto p = quad(6, 2, 13);
  TwoDirection m(p, two_direction(p, 2, 2, 13));
  const auto t = run(m, p, {40, 0.0, 0.0});
  const std::string text = csv_of(t);
  CHECK(text.rfind("round,f_gap,grad_norm,w2s_cum,s2w_cum,total_r,coin\n", 0) == 0);
  std::istringstream in(text);
  const auto back = read_trace_csv(in);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(back.rows[i].f_gap == t.rows[i].f_gap);
    CHECK(back.rows[i].total_r == t.rows[i].total_r);
    CHECK(back.rows[i].coin == t.rows[i].coin);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
  std::istringstream bad("round,f_gap\n1,2\n");
  CHECK_THROWS_AS(read_trace_csv(bad), Error);
}

TEST_CASE("shifted gradient estimate is unbiased") {
  auto p = quad(8, 3, 14);
  const Vector y = start(8, 14);
  std::vector<Vector> shifts;
  for (std::size_t i = 0; i < 3; ++i) shifts.push_back(start(8, 200 + i));
  const Vector mean_shift = (shifts[0] + shifts[1] + shifts[2]) / 3.0;
  const auto dual = CompressorSpec::rand_k(8, 2);
  const int n = 10000;
  Vector sum = Vector::Zero(8), sq = Vector::Zero(8);
  for (int t = 0; t < n; ++t) {
    const Vector g = shifted_gradient_estimate(p, shifts, mean_shift, y, dual, 14,
                                               static_cast<std::uint64_t>(t));
    sum += g;
    sq += g.cwiseProduct(g);
  }
  const Vector mean = sum / n;
  const Vector truth = p.gradient(y);
  for (Eigen::Index i = 0; i < 8; ++i) {
    const double se = std::sqrt((sq[i] / n - mean[i] * mean[i]) / n);
    CHECK(std::abs(mean[i] - truth[i]) <= 4 * se);
  }
}

TEST_CASE("constructor validation") {
  auto p = quad(6, 2, 15);
  auto o = two_direction(p, 2, 2, 15);
  o.dual = CompressorSpec::top_k(6, 2);
  CHECK_THROWS_AS(TwoDirection(p, o), Error);
  o = two_direction(p, 2, 2, 15);
  o.primal = CompressorSpec::rand_k(6, 2);
  CHECK_THROWS_AS(TwoDirection(p, o), Error);
  o = two_direction(p, 2, 2, 15);
  o.primal = CompressorSpec::top_k(5, 2);
  CHECK_THROWS_AS(TwoDirection(p, o), Error);
  o = two_direction(p, 2, 2, 15);
  o.common.x0 = Vector::Zero(3);
  CHECK_THROWS_AS(TwoDirection(p, o), Error);
}

}
