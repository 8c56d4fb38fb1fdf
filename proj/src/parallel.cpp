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

#include "bidiopt/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "bidiopt/common.hpp"

namespace bidiopt {

ExecConfig ExecConfig::from_env() {
  ExecConfig cfg;
  if (const char* env = std::getenv("BIDIOPT_THREADS"); env && *env) {
    try {
      cfg.threads = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw Error(std::string("BIDIOPT_THREADS is not an integer: ") + env);
    }
  }
  return cfg;
}

namespace detail {
void rethrow_first(std::vector<std::exception_ptr>& errors) {
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}
}  // namespace detail

}  // namespace bidiopt
