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

#include <iomanip>
#include <sstream>

#include "describe.hpp"
#include "mdphd/errors.hpp"
#include "mdphd/models.hpp"

namespace mdphd::models {
namespace {

std::string_view strip_prefix(std::string_view name, std::string_view prefix) {
  if (name.substr(0, prefix.size()) == prefix) name.remove_prefix(prefix.size());
  return name;
}

}  // namespace

// Budgets are checked against param_count() in the tests: toy ~50k per
// network, the others within 5% of 1.5M / 3M.
TasNetConfig tasnet_preset(std::string_view name) {
  const auto key = strip_prefix(name, "tasnet-");
  TasNetConfig c;
  if (key == "toy") {
    c.channels = 44;
    c.param_budget = 50'000;
  } else if (key == "1.5m") {
    c.channels = 248;
    c.param_budget = 1'500'000;
  } else if (key == "3m") {
    c.channels = 352;
    c.param_budget = 3'000'000;
  } else {
    throw InvalidArgument("unknown tasnet preset '" + std::string(name) + "'");
  }
  return c;
}

UNetConfig unet_preset(std::string_view name) {
  const auto key = strip_prefix(name, "unet-");
  UNetConfig c;
  auto levels = [&c](std::initializer_list<std::size_t> channels) {
    for (std::size_t ch : channels) c.levels.push_back({{5, 5}, {2, 2}, ch});
  };
  if (key == "toy") {
    levels({12, 24, 24});
    c.param_budget = 50'000;
  } else if (key == "1.5m") {
    levels({16, 32, 64, 96, 176});
    c.param_budget = 1'500'000;
  } else if (key == "3m") {
    levels({16, 32, 64, 160, 256});
    c.param_budget = 3'000'000;
  } else {
    throw InvalidArgument("unknown unet preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"toy", "1.5m", "3m"}; }

namespace detail {

std::string format_layers(const std::string& title, const std::vector<LayerInfo>& layers,
                          std::size_t total_params, const std::string& receptive_field) {
  std::ostringstream os;
  os << title << '\n';
  os << std::left << std::setw(10) << "layer" << std::setw(44) << "operation" << std::setw(24)
     << "output" << std::right << std::setw(12) << "params" << '\n';
  for (const auto& l : layers) {
    os << std::left << std::setw(10) << l.name << std::setw(44) << l.kind << std::setw(24)
       << ad::to_string(l.output_shape) << std::right << std::setw(12) << l.params << '\n';
  }
  os << "receptive field: " << receptive_field << '\n';
  os << "total parameters: " << total_params << '\n';
  return os.str();
}

}  // namespace detail
}  // namespace mdphd::models
