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
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "bidiopt/problems.hpp"

int main(int argc, char** argv) {
  bidiopt::ToyDatasetSpec spec;
  std::string out;
  CLI::App app{"Write the synthetic LIBSVM classification set"};
  app.add_option("--out", out, "output path")->required();
  app.add_option("--samples", spec.samples);
  app.add_option("--features", spec.features);
  app.add_option("--classes", spec.classes);
  app.add_option("--sparsity", spec.sparsity);
  app.add_option("--label-noise", spec.label_noise);
  app.add_option("--scale-decay", spec.scale_decay);
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    const auto data = bidiopt::make_toy_dataset(spec);
    std::ofstream file(out);
    bidiopt::write_libsvm(data, file);
    if (!file) throw bidiopt::Error("cannot write " + out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "make_toy_dataset: %s\n", e.what());
    return 2;
  }
  return 0;
}
