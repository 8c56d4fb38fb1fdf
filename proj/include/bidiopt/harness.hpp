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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bidiopt/accounting.hpp"
#include "bidiopt/algorithms.hpp"
#include "bidiopt/parallel.hpp"
#include "bidiopt/problems.hpp"
#include "bidiopt/schedule.hpp"

namespace bidiopt {

enum class ProblemKind { kQuadratic, kLogistic };
enum class ParamMode { kTheory, kTuned };
enum class SelectRule { kRealistic, kOptimistic };

std::string to_string(ProblemKind kind);
std::string to_string(ParamMode mode);
std::string to_string(SelectRule rule);
ProblemKind parse_problem_kind(std::string_view name);
ParamMode parse_param_mode(std::string_view name);
SelectRule parse_select_rule(std::string_view name);

// One experiment: an algorithm on a problem, either at its theory
// parameters or swept over a grid 2^i, i in [grid_lo, grid_hi].
//
// Grid meaning: 2direction/adiana use lbar = 2^i L; ef21p_diana, gd and agd
// use step size 2^i / L.
struct ExperimentConfig {
  Algorithm algo = Algorithm::kTwoDirection;
  ProblemKind problem = ProblemKind::kQuadratic;
  std::string dataset;  // LIBSVM path for logistic problems
  PartitionScheme partition = PartitionScheme::kContiguous;
  std::size_t n = 10;
  std::size_t kw = 0;  // 0: ceil(d / 3)
  std::size_t ka = 0;  // 0: ceil(d / 3)
  double r = 0.5;
  ParamMode mode = ParamMode::kTuned;
  int grid_lo = -6;
  int grid_hi = 6;
  std::size_t rounds = 1000;
  double budget_coords = 0.0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::string out;  // empty: nothing is written

  // quadratic instance
  std::size_t dim = 20;
  double mu = 0.1;
  double L = 10.0;
  // logistic instance
  double l2 = 0.0;

  std::optional<double> gamma;  // explicit step for ef21p_diana in theory mode
  SelectRule select = SelectRule::kRealistic;
  double theory_constant = kTheoryConstant;
  std::string fstar_cache;  // directory; empty disables caching

  // Throws Error for out-of-range fields.
  void validate() const;
  std::vector<int> exponents() const;
};

// Flat "key=value" lines in a fixed key order; doubles in shortest
// round-trip form so parse(serialize(c)) == c.
std::string serialize(const ExperimentConfig& config);
// Unknown keys starting with "result." are ignored; any other unknown key,
// or a malformed line, throws ParseError.
ExperimentConfig parse_config(std::string_view text);
std::uint64_t config_hash(const ExperimentConfig& config);

DistributedProblem build_problem(const ExperimentConfig& config,
                                 const ExecConfig& exec = {});

struct ResolvedParams {
  std::size_t kw = 0;
  std::size_t ka = 0;
  ParamChoice choice;
  double omega = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
};
ResolvedParams resolve_params(const ExperimentConfig& config,
                              const DistributedProblem& problem);

// Method for one grid exponent (or the theory point when exponent is empty).
std::unique_ptr<Method> make_method(const ExperimentConfig& config,
                                    const DistributedProblem& problem,
                                    const ResolvedParams& params,
                                    std::optional<int> exponent,
                                    const ExecConfig& exec = {});

struct ExperimentResult {
  std::vector<Trace> traces;
  std::optional<std::size_t> best;
  Constants constants;
  double f_star = 0.0;
  ResolvedParams params;
  std::string manifest;
  std::vector<std::filesystem::path> files;
};

// Runs every grid point (in parallel when exec asks for it), writes
// `<algo>_2p<i>.csv` (or `<algo>.csv` in theory mode), `manifest.txt` and
// `plot.svg` into config.out when it is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExecConfig& exec = ExecConfig::from_env());

// Index of the trace with the smallest total_r at its first row with
// f_gap <= eps; ties go to the smaller grid exponent. Empty when no trace
// reaches eps.
std::optional<std::size_t> best_of(const std::vector<Trace>& traces, double eps);
// total_r at the first row with f_gap <= eps.
std::optional<double> coords_to_eps(const Trace& trace, double eps);

// Log-y plot of f_gap against total_r. Traces with no finite point are
// skipped and named in `skipped`.
std::string render_svg(const std::vector<Trace>& traces,
                       std::vector<std::string>* skipped = nullptr);

// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

}  // namespace bidiopt
