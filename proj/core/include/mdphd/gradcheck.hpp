// Copyright 2026 The mdphd Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mdphd/tensor.hpp"

namespace mdphd::gradcheck {

/// Builds a scalar from the inputs using recorded ops.
using Graph = std::function<ad::Tensor(const std::vector<ad::Tensor>&)>;

struct Comparison {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of `graph` against central differences
/// with step `h` on up to `max_coords` randomly chosen coordinates of each
/// input (all of them when the input is smaller). The error of one
/// coordinate is |a - f| / max(|a|, |f|, 1e-5 * max(1, |loss|)).
Comparison compare(const Graph& graph, const std::vector<ad::Tensor>& inputs,
                   std::size_t max_coords, std::mt19937_64& rng, double h = 1e-6);

struct CheckResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return max_rel_error <= tolerance; }
};

struct SuiteOptions {
  std::uint64_t seed = 7;
  std::size_t instances = 5;
  bool ops = true;
  bool networks = true;
  std::string preset = "toy";
  // The networks are checked on shorter windows to keep the run short.
  std::size_t network_window = 2048;
  std::size_t network_batch = 2;
  double op_tolerance = 1e-4;
  double network_tolerance = 1e-3;
  /// Called after each check finishes.
  std::function<void(const CheckResult&)> on_result;
};

std::vector<CheckResult> run_suite(const SuiteOptions& options);

}  // namespace mdphd::gradcheck
