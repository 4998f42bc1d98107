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

#include "mdphd/hybrid.hpp"
#include "mdphd/objectives.hpp"

namespace {

using namespace mdphd;

ad::Tensor input(std::size_t batch, std::size_t length) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 0.1);
  std::vector<double> v(batch * length);
  for (auto& x : v) x = d(rng);
  return ad::Tensor::from_vector({batch, length}, std::move(v));
}

hybrid::HybridConfig config(const char* preset) {
  hybrid::HybridConfig c;
  c.tasnet = models::tasnet_preset(preset);
  c.unet = models::unet_preset(preset);
  return c;
}

void BM_TasNetForward(benchmark::State& state, const char* preset) {
  models::TasNet net(models::tasnet_preset(preset), 1);
  const auto x = input(1, 16384);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, nn::RunContext::eval()).values().data());
}
BENCHMARK_CAPTURE(BM_TasNetForward, toy, "toy")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TasNetForward, 1_5m, "1.5m")->Unit(benchmark::kMillisecond);

void BM_UNetForward(benchmark::State& state, const char* preset) {
  models::UNet net(models::unet_preset(preset), 1);
  const auto x = input(1, 16384);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, nn::RunContext::eval()).values().data());
}
BENCHMARK_CAPTURE(BM_UNetForward, toy, "toy")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_UNetForward, 1_5m, "1.5m")->Unit(benchmark::kMillisecond);

void BM_HybridTrainStep(benchmark::State& state) {
  hybrid::HybridModel model(config("toy"), 1);
  const auto s = input(4, 16384);
  const auto n = input(4, 16384);
  const auto x = ad::Tensor::from_vector(s.shape(), std::vector<double>(s.numel()));
  for (std::size_t i = 0; i < x.numel(); ++i) x.mutable_values()[i] = s.values()[i] + 0.5 * n.values()[i];
  for (std::size_t i = 0; i < n.numel(); ++i) n.mutable_values()[i] *= 0.5;
  for (auto _ : state) {
    auto loss = model.train_step_loss(x, s, n, objectives::LossKind::kL1Energy, false);
    ad::backward(loss);
    for (const auto& p : model.parameters()) p.tensor.zero_grad();
    model.advance_step();
  }
}
BENCHMARK(BM_HybridTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
