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
#include <exception>
#include <vector>

namespace bidiopt {

// How worker loops are executed. threads <= 1 runs the serial reference loop.
struct ExecConfig {
  int threads = 1;

  // Reads BIDIOPT_THREADS; defaults to 1 so runs are reproducible by default.
  static ExecConfig from_env();
  bool parallel() const { return threads > 1; }
};

namespace detail {
void rethrow_first(std::vector<std::exception_ptr>& errors);
}

// Runs fn(i) for i in [0, n). Each iteration must write only to its own
// slot; reductions over the results happen afterwards in ascending order, so
// the output is bit-identical for every thread count.
template <class Fn>
void for_each_worker(std::size_t n, const ExecConfig& exec, Fn&& fn) {
  if (!exec.parallel() || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for num_threads(exec.threads) schedule(static)
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  detail::rethrow_first(errors);
}

}  // namespace bidiopt
