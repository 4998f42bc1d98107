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

#include <stdexcept>
#include <string>

namespace mdphd {

// Precondition failures on caller-supplied arguments (shapes, sizes, ranges).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value violated a documented contract that callers are expected to uphold,
// e.g. a mask entry outside [0, 1].
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN/Inf gradients or losses, degenerate overlap-add envelopes.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or incompatible files: WAV, manifest, checkpoint.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdphd
