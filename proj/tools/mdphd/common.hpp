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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace CLI {
class App;
}

namespace mdphd::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kContractError = 1;
inline constexpr int kNumericError = 2;

/// True when MDPHD_DETERMINISTIC=1.
bool deterministic_env();
/// Worker count after applying deterministic mode.
std::size_t resolve_jobs(std::size_t requested);

/// Prints the resolved configuration as one JSON line prefixed "config: ".
void print_config(const std::string& command, nlohmann::json config);

std::vector<double> parse_number_list(const std::string& text);
std::vector<std::string> split_list(const std::string& text);

/// Runs `fn`, mapping exceptions to exit codes and a one-line message.
template <typename Fn>
int guarded(Fn&& fn);

// Registers each subcommand; the returned callback result is the exit code.
void add_mix(CLI::App& app, int& exit_code);
void add_train(CLI::App& app, int& exit_code);
void add_enhance(CLI::App& app, int& exit_code);
void add_eval(CLI::App& app, int& exit_code);
void add_gradcheck(CLI::App& app, int& exit_code);
void add_describe(CLI::App& app, int& exit_code);

}  // namespace mdphd::cli

#include "common_inl.hpp"
