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

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

#include "mdphd/errors.hpp"

namespace mdphd::dsp::detail {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(const std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(p));
}

}  // namespace

const Fft& Fft::of_size(std::size_t n) {
  if (n == 0) throw InvalidArgument("fft size must be positive");
  // Plans live for the lifetime of the process.
  static std::map<std::size_t, std::unique_ptr<Fft>> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;

  // FFTW_ESTIMATE keeps plan selection independent of timing, so results are
  // reproducible run to run. FFTW_UNALIGNED lets us execute on std::vector data.
  auto* in = fftw_alloc_complex(n);
  auto* out = fftw_alloc_complex(n);
  const int size = static_cast<int>(n);
  fftw_plan fwd = fftw_plan_dft_1d(size, in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_plan inv = fftw_plan_dft_1d(size, in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  if (fwd == nullptr || inv == nullptr) throw NumericError("fftw planning failed");

  auto [pos, _] = cache.emplace(n, std::unique_ptr<Fft>(new Fft(n, fwd, inv)));
  return *pos->second;
}

void Fft::forward(std::span<const std::complex<double>> in,
                  std::span<std::complex<double>> out) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_), as_fftw(in.data()), as_fftw(out.data()));
}

void Fft::inverse(std::span<const std::complex<double>> in,
                  std::span<std::complex<double>> out) const {
  fftw_execute_dft(static_cast<fftw_plan>(inverse_), as_fftw(in.data()), as_fftw(out.data()));
}

}  // namespace mdphd::dsp::detail
