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

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bidiopt/harness.hpp"

int main(int argc, char** argv) {
  using namespace bidiopt;
  CLI::App app{"Simulate compressed distributed optimization and emit traces"};
  ExperimentConfig cfg;
  std::string algo = "2direction", problem = "quadratic", mode = "tuned";
  std::string partition = "contiguous", select = "realistic";
  double gamma = 0.0;

  app.add_option("--algo", algo, "2direction | adiana | ef21p_diana | gd | agd");
  app.add_option("--problem", problem, "quadratic | logistic");
  app.add_option("--dataset", cfg.dataset, "LIBSVM file for logistic problems");
  app.add_option("--partition", partition, "contiguous | round_robin");
  app.add_option("--n", cfg.n, "number of workers");
  app.add_option("--kw", cfg.kw, "RandK density of the worker compressor (0: ceil(d/3))");
  app.add_option("--ka", cfg.ka, "TopK density of the server compressor (0: ceil(d/3))");
  app.add_option("--r", cfg.r, "downlink weight in [0, 1]");
  app.add_option("--mode", mode, "theory | tuned");
  app.add_option("--grid-lo", cfg.grid_lo, "smallest grid exponent");
  app.add_option("--grid-hi", cfg.grid_hi, "largest grid exponent");
  app.add_option("--rounds", cfg.rounds, "round budget");
  app.add_option("--budget-coords", cfg.budget_coords, "total_r budget (0: off)");
  app.add_option("--eps", cfg.eps, "stop once f(x) - f* <= eps (0: off)");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--out", cfg.out, "output directory")->required();
  app.add_option("--dim", cfg.dim, "quadratic dimension");
  app.add_option("--mu", cfg.mu, "quadratic strong convexity");
  app.add_option("--L", cfg.L, "quadratic smoothness");
  app.add_option("--l2", cfg.l2, "logistic l2 regularization");
  app.add_option("--gamma", gamma, "step size for ef21p_diana/gd in theory mode");
  app.add_option("--select", select, "realistic | optimistic choice of (p, tau)");
  app.add_option("--theory-constant", cfg.theory_constant, "constant in the theory lbar");
  app.add_option("--fstar-cache", cfg.fstar_cache, "directory caching reference optima");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.algo = parse_algorithm(algo);
    cfg.problem = parse_problem_kind(problem);
    cfg.mode = parse_param_mode(mode);
    cfg.partition = parse_partition_scheme(partition);
    cfg.select = parse_select_rule(select);
    if (gamma > 0.0) cfg.gamma = gamma;

    const ExperimentResult res = run_experiment(cfg);
    for (const auto& t : res.traces) {
      const auto& last = t.rows.back();
      std::printf("%-22s rounds=%-8llu f_gap=%-14.6g total_r=%-14.6g %s\n", t.label.c_str(),
                  static_cast<unsigned long long>(last.round), last.f_gap, last.total_r,
                  to_string(t.status).c_str());
      if (!t.diagnostic.empty()) std::fprintf(stderr, "%s: %s\n", t.label.c_str(), t.diagnostic.c_str());
    }
    if (cfg.eps > 0.0)
      std::printf("best: %s\n", res.best ? res.traces[*res.best].label.c_str() : "none");
    std::printf("wrote %zu files to %s\n", res.files.size(), cfg.out.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bidiopt: %s\n", e.what());
    return 2;
  }
  return 0;
}
