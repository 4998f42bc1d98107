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

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "mdphd/errors.hpp"

namespace mdphd::cli {

bool deterministic_env() {
  const char* v = std::getenv("MDPHD_DETERMINISTIC");
  return v != nullptr && std::string(v) == "1";
}

std::size_t resolve_jobs(std::size_t requested) {
  if (deterministic_env()) return 1;
  return requested == 0 ? 1 : requested;
}

void print_config(const std::string& command, nlohmann::json config) {
  config["command"] = command;
  config["deterministic"] = deterministic_env();
  std::cout << "config: " << config.dump() << std::endl;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidArgument("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty number list");
  return out;
}

}  // namespace mdphd::cli
