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

#include <random>

#include <benchmark/benchmark.h>

#include "mdphd/dsp.hpp"
#include "mdphd/ops.hpp"

namespace {

using namespace mdphd;

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_StftRoundTrip(benchmark::State& state) {
  const dsp::Waveform w{noise(static_cast<std::size_t>(state.range(0)), 1), dsp::kSampleRate};
  for (auto _ : state) {
    auto back = dsp::istft(dsp::stft(w));
    benchmark::DoNotOptimize(back.samples.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StftRoundTrip)->Arg(16384)->Arg(65536)->Unit(benchmark::kMicrosecond);

void BM_Conv1dDilated(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const std::size_t frames = 1024;
  ad::NoGradGuard guard;
  const auto x = ad::Tensor::from_vector({4, ch, frames}, noise(4 * ch * frames, 2));
  const auto k = ad::Tensor::from_vector({ch, ch, 3}, noise(ch * ch * 3, 3));
  for (auto _ : state) {
    auto y = ad::conv1d_dilated(x, k, 16);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_Conv1dDilated)->Arg(44)->Arg(248)->Unit(benchmark::kMillisecond);

void BM_Conv2dStrided(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const std::array<std::size_t, 2> size{36, 260};
  ad::NoGradGuard guard;
  const auto x = ad::Tensor::from_vector({4, ch, size[0], size[1]}, noise(4 * ch * size[0] * size[1], 4));
  const auto k = ad::Tensor::from_vector({2 * ch, ch, 5, 5}, noise(2 * ch * ch * 25, 5));
  const auto opt = ad::conv2d_options(ad::Padding::kSame, size, {5, 5}, {2, 2});
  for (auto _ : state) {
    auto y = ad::conv2d(x, k, opt);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_Conv2dStrided)->Arg(12)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
