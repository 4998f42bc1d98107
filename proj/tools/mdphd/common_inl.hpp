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

#include <exception>
#include <iostream>
#include <stdexcept>

#include "mdphd/errors.hpp"

namespace mdphd::cli {

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const NumericError& e) {
    std::cerr << "mdphd: numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "mdphd: error: " << e.what() << '\n';
    return kContractError;
  }
}

}  // namespace mdphd::cli
