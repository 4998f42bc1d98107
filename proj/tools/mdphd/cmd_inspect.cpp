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

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "common.hpp"
#include "mdphd/errors.hpp"
#include "mdphd/gradcheck.hpp"
#include "mdphd/models.hpp"

namespace mdphd::cli {
namespace {

struct GradcheckCliOptions {
  std::string preset = "toy";
  std::uint64_t seed = 7;
  std::size_t instances = 5;
  std::size_t window = 2048;
  bool ops_only = false;
};

int run_gradcheck(const GradcheckCliOptions& o) {
  gradcheck::SuiteOptions so;
  so.preset = o.preset;
  so.seed = o.seed;
  so.instances = o.instances;
  so.network_window = o.window;
  so.networks = !o.ops_only;
  print_config("gradcheck", {{"preset", o.preset},
                             {"seed", o.seed},
                             {"instances", o.instances},
                             {"window", o.window},
                             {"networks", so.networks}});
  so.on_result = [](const gradcheck::CheckResult& r) {
    std::printf("%-4s %-28s instances=%zu coords=%zu max_rel_err=%.3e tol=%.0e\n",
                r.passed() ? "ok" : "FAIL", r.name.c_str(), r.instances, r.coordinates,
                r.max_rel_error, r.tolerance);
    std::fflush(stdout);
  };
  const auto results = gradcheck::run_suite(so);
  double worst = 0.0;
  std::size_t failed = 0;
  for (const auto& r : results) {
    worst = std::max(worst, r.max_rel_error);
    failed += r.passed() ? 0 : 1;
  }
  std::printf("checks=%zu failed=%zu max_rel_error=%.3e\n", results.size(), failed, worst);
  return failed == 0 ? kOk : kNumericError;
}

// "tasnet-1.5m" / "unet-toy" / "toy" (both networks).
int run_describe(const std::string& preset) {
  std::string family;
  std::string size = preset;
  if (const auto dash = preset.find('-'); dash != std::string::npos) {
    family = preset.substr(0, dash);
    size = preset.substr(dash + 1);
  }
  if (!family.empty() && family != "tasnet" && family != "unet") {
    throw InvalidArgument("unknown model family '" + family + "' (expected tasnet or unet)");
  }
  if (family.empty() || family == "tasnet") {
    const models::TasNet net(models::tasnet_preset(size), 0);
    std::cout << net.describe();
  }
  if (family.empty() || family == "unet") {
    if (family.empty()) std::cout << '\n';
    const models::UNet net(models::unet_preset(size), 0);
    std::cout << net.describe();
  }
  return kOk;
}

}  // namespace

void add_gradcheck(CLI::App& app, int& exit_code) {
  auto o = std::make_shared<GradcheckCliOptions>();
  auto* cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op and network");
  cmd->add_option("--preset", o->preset, "Network preset")->capture_default_str();
  cmd->add_option("--seed", o->seed)->capture_default_str();
  cmd->add_option("--instances", o->instances, "Random instances per op")->capture_default_str();
  cmd->add_option("--window", o->window, "Window length for the network checks")
      ->capture_default_str();
  cmd->add_flag("--ops-only", o->ops_only, "Skip the network checks");
  cmd->callback([o, &exit_code] { exit_code = guarded([&] { return run_gradcheck(*o); }); });
}

void add_describe(CLI::App& app, int& exit_code) {
  auto preset = std::make_shared<std::string>("toy");
  auto* cmd = app.add_subcommand("describe", "Print the layer table and parameter count");
  cmd->add_option("--preset", *preset, "tasnet-<size>, unet-<size> or <size> for both")
      ->capture_default_str();
  cmd->callback([preset, &exit_code] { exit_code = guarded([&] { return run_describe(*preset); }); });
}

}  // namespace mdphd::cli
