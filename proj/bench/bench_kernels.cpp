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

#include <benchmark/benchmark.h>

#include "bidiopt/algorithms.hpp"
#include "bidiopt/problems.hpp"

namespace {

using namespace bidiopt;

const DistributedProblem& logistic_problem() {
  static const DistributedProblem problem = [] {
    ToyDatasetSpec spec;
    spec.samples = 4000;
    spec.features = 64;
    spec.classes = 4;
    return make_logistic(make_toy_dataset(spec), 16, PartitionScheme::kContiguous);
  }();
  return problem;
}

void BM_WorkerGradients(benchmark::State& state) {
  const auto& problem = logistic_problem();
  const ExecConfig exec{static_cast<int>(state.range(0))};
  const Vector x = Vector::Constant(static_cast<Eigen::Index>(problem.dim()), 0.01);
  std::vector<Vector> out;
  for (auto _ : state) {
    problem.worker_gradients(x, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_WorkerGradients)->Arg(1)->Arg(2)->Arg(4);

void BM_TwoDirectionStep(benchmark::State& state) {
  const auto& problem = logistic_problem();
  const std::size_t d = problem.dim();
  TwoDirectionOptions o;
  o.common.exec = ExecConfig{static_cast<int>(state.range(0))};
  o.dual = CompressorSpec::rand_k(d, d / 4);
  o.primal = CompressorSpec::top_k(d, d / 4);
  o.schedule.lbar = problem.constants().L;
  o.schedule.p = o.schedule.tau = o.schedule.beta = 0.25;
  o.schedule.alpha = 0.25;
  TwoDirection method(problem, o);
  for (auto _ : state) method.step();
}
BENCHMARK(BM_TwoDirectionStep)->Arg(1)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
