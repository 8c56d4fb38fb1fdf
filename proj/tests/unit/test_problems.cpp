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

#include <bit>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include <doctest.h>

#include "bidiopt/problems.hpp"
#include "bidiopt/rng.hpp"

using namespace bidiopt;

namespace {

Dataset random_dataset(std::size_t m, std::uint32_t d_feat, std::uint32_t c, std::uint64_t seed) {
  RngStream rng({seed, 0, 0, Purpose::kTest});
  Dataset data;
  data.num_features = d_feat;
  data.num_classes = c;
  for (std::size_t j = 0; j < m; ++j) {
    SparseRow row;
    for (std::uint32_t f = 0; f < d_feat; ++f) {
      if (rng.uniform() < 0.3) continue;
      row.index.push_back(f);
      row.value.push_back(rng.normal());
    }
    data.rows.push_back(row);
    data.labels.push_back(static_cast<std::uint32_t>(rng.below(c)));
  }
  return data;
}

Vector random_vector(std::size_t d, std::uint64_t seed, double scale = 1.0) {
  RngStream rng({seed, 1, 0, Purpose::kTest});
  Vector x(static_cast<Eigen::Index>(d));
  for (auto& v : x) v = scale * rng.normal();
  return x;
}

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("libsvm single line") {
  const auto data = parse_libsvm("1 1:0.5 3:-2\n");
  REQUIRE(data.size() == 1);
  CHECK(data.labels[0] == 0);
  CHECK(data.num_features == 3);
  const Vector dense = data.dense_row(0);
  CHECK(dense[0] == 0.5);
  CHECK(dense[1] == 0.0);
  CHECK(dense[2] == -2.0);
}

TEST_CASE("libsvm labels remap in ascending order") {
  const auto data = parse_libsvm("2 1:1\n1 2:1\n");
  REQUIRE(data.size() == 2);
  CHECK(data.num_classes == 2);
  CHECK(data.labels[0] == 1);
  CHECK(data.labels[1] == 0);
}

TEST_CASE("libsvm remap ignores input order") {
  const auto a = parse_libsvm("-1 1:1\n+1 1:2\n7 1:3\n");
  const auto b = parse_libsvm("7 1:3\n-1 1:1\n+1 1:2\n");
  CHECK(a.labels == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(b.labels == std::vector<std::uint32_t>{2, 0, 1});
}

TEST_CASE("libsvm errors") {
  CHECK_THROWS_AS(parse_libsvm(""), Error);
  CHECK_THROWS_AS(parse_libsvm("# only a comment\n\n"), Error);
  try {
    parse_libsvm("1 1:1\n1 3:1 2:1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse_libsvm("1 1:1\n1 2:1\n0 x:1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_libsvm("1 0:1\n"), ParseError);
  CHECK_THROWS_AS(parse_libsvm("1 1:abc\n"), ParseError);
  CHECK_THROWS_AS(parse_libsvm("1 2:1 2:3\n"), ParseError);
}

TEST_CASE("libsvm comments and blank lines") {
  const auto data = parse_libsvm("# header\n\n3 2:1.5 # trailing\n  \n4 1:2\n");
  REQUIRE(data.size() == 2);
  CHECK(data.num_features == 2);
  CHECK(data.labels == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("libsvm write and parse round trip") {
  const auto data = random_dataset(40, 7, 3, 11);
  std::ostringstream out;
  write_libsvm(data, out);
  const auto back = parse_libsvm(out.str());
  REQUIRE(back.size() == data.size());
  for (std::size_t j = 0; j < data.size(); ++j) {
    CHECK(back.rows[j].index == data.rows[j].index);
    CHECK(back.rows[j].value == data.rows[j].value);
  }
}

TEST_CASE("dataset cache round trip") {
  const auto data = random_dataset(25, 9, 4, 5);
  std::stringstream buf;
  write_dataset_cache(data, buf);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "BDS1");
  const auto back = read_dataset_cache(buf);
  CHECK(back.num_classes == data.num_classes);
  CHECK(back.num_features == data.num_features);
  CHECK(back.labels == data.labels);
  for (std::size_t j = 0; j < data.size(); ++j) {
    CHECK(back.rows[j].index == data.rows[j].index);
    CHECK(back.rows[j].value == data.rows[j].value);
  }
  CHECK(dataset_hash(back) == dataset_hash(data));

  std::stringstream bad(std::string("XXXX") + bytes.substr(4));
  CHECK_THROWS_AS(read_dataset_cache(bad), Error);
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_dataset_cache(cut), Error);
}

TEST_CASE("partition examples") {
  using S = std::vector<std::vector<std::size_t>>;
  CHECK(partition_indices(4, 2, PartitionScheme::kContiguous) == S{{0, 1}, {2, 3}});
  CHECK(partition_indices(4, 2, PartitionScheme::kRoundRobin) == S{{0, 2}, {1, 3}});
  CHECK_THROWS_AS(partition_indices(3, 5, PartitionScheme::kContiguous), Error);
  CHECK_THROWS_AS(partition_indices(3, 0, PartitionScheme::kRoundRobin), Error);
  CHECK(parse_partition_scheme(to_string(PartitionScheme::kRoundRobin)) ==
        PartitionScheme::kRoundRobin);
  CHECK_THROWS_AS(parse_partition_scheme("striped"), Error);
}

TEST_CASE("partitions are exact covers") {
  for (std::size_t m : {1u, 2u, 7u, 23u}) {
    for (std::size_t n = 1; n <= m; ++n) {
      for (auto scheme : {PartitionScheme::kContiguous, PartitionScheme::kRoundRobin}) {
        const auto shards = partition_indices(m, n, scheme);
        REQUIRE(shards.size() == n);
        std::set<std::size_t> seen;
        std::size_t lo = m, hi = 0, total = 0;
        for (std::size_t i = 0; i < n; ++i) {
          lo = std::min(lo, shards[i].size());
          hi = std::max(hi, shards[i].size());
          total += shards[i].size();
          for (std::size_t j : shards[i]) {
            seen.insert(j);
            if (scheme == PartitionScheme::kRoundRobin) CHECK(j % n == i);
          }
          if (scheme == PartitionScheme::kContiguous)
            for (std::size_t k = 1; k < shards[i].size(); ++k)
              CHECK(shards[i][k] == shards[i][k - 1] + 1);
        }
        CHECK(total == m);
        CHECK(seen.size() == m);
        CHECK(hi - lo <= 1);
      }
    }
  }
}

TEST_CASE("logistic value examples") {
  const auto data = random_dataset(12, 5, 4, 3);
  const LogisticObjective f(data);
  CHECK(f.value(Vector::Zero(20)) == doctest::Approx(std::log(4.0)).epsilon(1e-15));

  Dataset one;
  one.num_classes = 2;
  one.num_features = 1;
  one.rows.push_back({{0}, {1.0}});
  one.labels.push_back(0);
  const LogisticObjective g(one);
  for (double t : {-30.0, -1.0, 0.0, 0.7, 25.0}) {
    Vector x(2);
    x << t, 0.0;
    CHECK(g.value(x) == doctest::Approx(std::log1p(std::exp(-t))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(g.value(Vector::Zero(3)), Error);
  Vector out;
  CHECK_THROWS_AS(g.gradient(Vector::Zero(1), out), Error);
}

TEST_CASE("logistic value matches naive evaluation") {
  const auto data = random_dataset(10, 6, 3, 21);
  const LogisticObjective f(data);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector x = random_vector(18, 100 + s);
    CHECK(std::abs(f.value(x) - logistic_value_naive(data, x)) <= 1e-12);
  }
}

TEST_CASE("logistic value is stable for large logits") {
  const auto data = random_dataset(10, 6, 3, 22);
  const LogisticObjective f(data);
  const Vector x = random_vector(18, 7, 400.0);
  CHECK(std::isfinite(f.value(x)));
  Vector g;
  f.gradient(x, g);
  CHECK(g.allFinite());
}

TEST_CASE("logistic gradient example") {
  Dataset one;
  one.num_classes = 2;
  one.num_features = 2;
  one.rows.push_back({{0}, {1.0}});
  one.labels.push_back(0);
  const LogisticObjective f(one);
  Vector g;
  f.gradient(Vector::Zero(4), g);
  CHECK(g[0] == -0.5);
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.5);
  CHECK(g[3] == 0.0);
}

TEST_CASE("logistic gradient matches central differences") {
  const auto data = random_dataset(15, 4, 3, 31);
  for (double l2 : {0.0, 0.3}) {
    const LogisticObjective f(data, l2);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Vector x = random_vector(12, 200 + s);
      Vector g;
      f.gradient(x, g);
      const double h = 1e-5;
      double worst = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        worst = std::max(worst, std::abs(g[i] - (f.value(xp) - f.value(xm)) / (2 * h)));
      }
      CHECK(worst <= 1e-6);
    }
  }
}

TEST_CASE("logistic gradient vanishes at the regularized minimizer of separable data") {
  Dataset sep;
  sep.num_classes = 2;
  sep.num_features = 2;
  sep.rows = {{{0, 1}, {1.0, 0.5}}, {{0, 1}, {-1.0, 0.2}}, {{0}, {2.0}}, {{1}, {-0.4}}};
  sep.labels = {0, 1, 0, 1};
  auto problem = make_logistic(sep, 2, PartitionScheme::kContiguous, 0.05);
  const auto ref = solve_reference(problem, 1e-11);
  REQUIRE(ref.converged);
  CHECK(problem.gradient(ref.x).norm() <= 1e-8);

  auto plain = make_logistic(sep, 1, PartitionScheme::kContiguous);
  Vector x = Vector::Zero(4);
  double prev = plain.value(x);
  for (int t = 0; t < 50; ++t) {
    x -= (1.0 / plain.constants().L) * plain.gradient(x);
    const double cur = plain.value(x);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("quadratic explicit examples") {
  {
    auto p = make_quadratic({Matrix::Constant(1, 1, 3.0)}, {Vector::Zero(1)});
    REQUIRE(p.x_star());
    CHECK((*p.x_star())[0] == 0.0);
    CHECK(*p.f_star() == 0.0);
  }
  {
    auto p = make_quadratic({Matrix::Identity(2, 2), 3.0 * Matrix::Identity(2, 2)},
                            {Vector::Zero(2), Vector::Zero(2)});
    CHECK(p.constants().L == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(p.constants().L_max == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(p.constants().mu == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(p.x_star()->norm() == 0.0);
  }
  {
    auto p = make_quadratic({Matrix::Constant(1, 1, 4.0)}, {Vector::Ones(1)});
    CHECK(p.constants().L == doctest::Approx(4.0));
    CHECK(p.constants().L_max == doctest::Approx(4.0));
  }
}

TEST_CASE("random quadratic spectrum and determinism") {
  const QuadraticSpec spec{12, 4, 0.1, 10.0, 77};
  auto a = make_quadratic(spec);
  auto b = make_quadratic(spec);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& qa = dynamic_cast<const QuadraticObjective&>(a.worker(i));
    const auto& qb = dynamic_cast<const QuadraticObjective&>(b.worker(i));
    CHECK(qa.a() == qb.a());
    CHECK(bit_equal(qa.b(), qb.b()));
  }
  Matrix mean = Matrix::Zero(12, 12);
  for (std::size_t i = 0; i < 4; ++i)
    mean += dynamic_cast<const QuadraticObjective&>(a.worker(i)).a();
  mean /= 4.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(mean);
  CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(eig.eigenvalues().maxCoeff() == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(a.gradient(*a.x_star()).norm() <= 1e-10);
  CHECK(a.gap(*a.x_star()) == doctest::Approx(0.0));
  CHECK_THROWS_AS(make_quadratic(QuadraticSpec{3, 1, 2.0, 1.0, 0}), Error);
}

TEST_CASE("constant ordering") {
  const auto data = random_dataset(40, 5, 3, 41);
  std::vector<DistributedProblem> problems;
  problems.push_back(make_quadratic(QuadraticSpec{6, 3, 0.5, 4.0, 1}));
  problems.push_back(make_logistic(data, 4, PartitionScheme::kRoundRobin));
  problems.push_back(make_logistic(data, 5, PartitionScheme::kContiguous, 0.1));
  for (const auto& p : problems) {
    const auto c = estimate_constants(p);
    CHECK(c.mu <= c.L);
    CHECK(c.L <= c.Lhat_bound);
    CHECK(c.Lhat_bound <= c.L_max);
    CHECK(c.L_max <= static_cast<double>(p.workers()) * c.L * (1 + 1e-12));
  }
}

TEST_CASE("logistic smoothness bound of a single sample") {
  Dataset one;
  one.num_classes = 2;
  one.num_features = 2;
  one.rows.push_back({{0, 1}, {1.0, -1.0}});
  one.labels.push_back(1);
  CHECK(LogisticObjective(one).smoothness_bound() == 1.0);
}

TEST_CASE("mean of worker gradients equals the pooled gradient") {
  const auto data = random_dataset(60, 6, 3, 51);
  const LogisticObjective pooled(data, 0.2);
  for (auto scheme : {PartitionScheme::kContiguous, PartitionScheme::kRoundRobin}) {
    auto p = make_logistic(data, 6, scheme, 0.2);
    for (std::uint64_t s = 0; s < 3; ++s) {
      const Vector x = random_vector(18, 300 + s);
      Vector ref;
      pooled.gradient(x, ref);
      CHECK((p.gradient(x) - ref).norm() <= 1e-10 * ref.norm());
      CHECK(p.value(x) == doctest::Approx(pooled.value(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("directional derivatives match central differences") {
  const auto data = random_dataset(30, 5, 3, 61);
  std::vector<DistributedProblem> problems;
  problems.push_back(make_quadratic(QuadraticSpec{8, 3, 0.1, 5.0, 2}));
  problems.push_back(make_logistic(data, 3, PartitionScheme::kContiguous));
  for (int k = 0; k < 10; ++k) {
    const auto& p = problems[static_cast<std::size_t>(k % 2)];
    const Vector x = random_vector(p.dim(), 400 + static_cast<std::uint64_t>(k));
    Vector v = random_vector(p.dim(), 500 + static_cast<std::uint64_t>(k));
    v.normalize();
    const double h = 1e-5;
    const double fd = (p.value(x + h * v) - p.value(x - h * v)) / (2 * h);
    CHECK(std::abs(p.gradient(x).dot(v) - fd) <= 1e-5);
  }
}

TEST_CASE("gradients are L-Lipschitz with the estimated L") {
  const auto data = random_dataset(30, 5, 3, 71);
  std::vector<DistributedProblem> problems;
  problems.push_back(make_quadratic(QuadraticSpec{8, 3, 0.1, 5.0, 3}));
  problems.push_back(make_logistic(data, 3, PartitionScheme::kRoundRobin, 0.01));
  for (const auto& p : problems) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Vector x = random_vector(p.dim(), 600 + s);
      const Vector y = random_vector(p.dim(), 700 + s);
      const double lhs = (p.gradient(x) - p.gradient(y)).norm();
      CHECK(lhs <= (1 + 1e-6) * p.constants().L * (x - y).norm());
    }
  }
}

TEST_CASE("reference solve and f* cache") {
  const auto data = random_dataset(30, 4, 3, 81);
  auto p = make_logistic(data, 3, PartitionScheme::kContiguous, 0.1);
  const auto ref = solve_reference(p, 1e-12);
  CHECK(ref.converged);
  CHECK(ref.grad_norm <= 1e-12);

  const auto dir = std::filesystem::temp_directory_path() / "bidiopt_fstar_test";
  std::filesystem::remove_all(dir);
  FStarCache cache(dir);
  CHECK_FALSE(cache.lookup(42).has_value());
  cache.store(42, ref.f_star);
  const auto hit = FStarCache(dir).lookup(42);
  REQUIRE(hit.has_value());
  CHECK(std::bit_cast<std::uint64_t>(*hit) == std::bit_cast<std::uint64_t>(ref.f_star));
  std::filesystem::remove_all(dir);
}

TEST_CASE("toy dataset is deterministic") {
  ToyDatasetSpec spec;
  spec.samples = 50;
  const auto a = make_toy_dataset(spec);
  const auto b = make_toy_dataset(spec);
  CHECK(dataset_hash(a) == dataset_hash(b));
  CHECK(a.num_classes == 3);
  CHECK(a.num_features == 16);
  spec.seed += 1;
  CHECK(dataset_hash(make_toy_dataset(spec)) != dataset_hash(a));
}

}
