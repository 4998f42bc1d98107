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

#include <complex>
#include <cstddef>
#include <span>

namespace mdphd::dsp::detail {

/// Unnormalized complex DFT of a fixed size. Plans are created once per size
/// and shared; executing a plan is thread-safe.
class Fft {
 public:
  static const Fft& of_size(std::size_t n);

  std::size_t size() const { return n_; }
  // out[k] = sum_n in[n] exp(-2 pi i k n / N)
  void forward(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) const;
  // out[n] = sum_k in[k] exp(+2 pi i k n / N), no 1/N factor
  void inverse(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) const;

 private:
  Fft(std::size_t n, void* forward_plan, void* inverse_plan)
      : n_(n), forward_(forward_plan), inverse_(inverse_plan) {}

  std::size_t n_;
  void* forward_;
  void* inverse_;
};

}  // namespace mdphd::dsp::detail
