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

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mdphd/dsp.hpp"
#include "mdphd/errors.hpp"
#include "oracles.hpp"

namespace mdphd {
namespace {

using testing::Rng;

double relative_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return std::sqrt(num / den);
}

TEST(Hann, IsPeriodic) {
  const auto w = dsp::hann_window(8);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_NEAR(w[4], 1.0, 1e-15);
  EXPECT_NEAR(w[2], 0.5, 1e-15);
  EXPECT_NEAR(w[1], w[7], 1e-15);
  EXPECT_THROW(dsp::hann_window(1), InvalidArgument);
}

TEST(StftConfig, FrameCount) {
  const dsp::StftConfig cfg;
  EXPECT_EQ(cfg.num_bins(), 257u);
  EXPECT_EQ(cfg.num_frames(16384), 65u);
  EXPECT_EQ(cfg.num_frames(1), 2u);
  EXPECT_EQ(cfg.num_frames(257), 3u);
  EXPECT_THROW((dsp::StftConfig{512, 200}.validate()), InvalidArgument);
  EXPECT_THROW((dsp::StftConfig{511, 1}.validate()), InvalidArgument);
}

TEST(Stft, MatchesBruteForceDft) {
  Rng rng(1);
  for (std::size_t len : {64u, 100u, 257u}) {
    const auto x = testing::random_vector(len, rng);
    const auto spec = dsp::stft({x}, {32, 8});
    const auto ref = testing::brute_force_stft(x, 32, 8);
    ASSERT_EQ(spec.bins.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_NEAR(spec.bins[i].real(), ref[i].real(), 1e-10);
      EXPECT_NEAR(spec.bins[i].imag(), ref[i].imag(), 1e-10);
    }
  }
}

TEST(Stft, DefaultConfigMatchesBruteForceOnASine) {
  std::vector<double> x(2048);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 1000.0 * i / 16000.0);
  const auto spec = dsp::stft({x});
  const auto ref = testing::brute_force_stft(x, 512, 256);
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(spec.bins[i] - ref[i]));
  EXPECT_LT(worst, 1e-9);
  // 1 kHz lands in bin 32 of a 512-point frame at 16 kHz.
  const auto& mid = spec.at(4, 32);
  EXPECT_GT(std::abs(mid), 100.0);
}

TEST(Stft, RoundTripIsExact) {
  Rng rng(2);
  for (std::size_t len : {1u, 255u, 512u, 1000u, 16384u}) {
    const auto x = testing::random_vector(len, rng);
    const auto y = dsp::istft(dsp::stft({x}));
    ASSERT_EQ(y.size(), len);
    EXPECT_LT(relative_l2(x, y.samples), 1e-12) << "length " << len;
  }
}

TEST(Stft, RoundTripOtherHops) {
  Rng rng(3);
  const auto x = testing::random_vector(3000, rng);
  for (std::size_t hop : {64u, 128u}) {
    const auto y = dsp::istft(dsp::stft({x}, {512, hop}));
    EXPECT_LT(relative_l2(x, y.samples), 1e-12);
  }
}

TEST(Stft, NonOverlappingHannCannotBeInverted) {
  Rng rng(4);
  const auto x = testing::random_vector(64, rng);
  EXPECT_THROW(dsp::istft(dsp::stft({x}, {16, 16})), NumericError);
}

TEST(Stft, EmptySignalRejected) {
  EXPECT_THROW(dsp::stft(dsp::Waveform{}), InvalidArgument);
}

TEST(Stft, IstftRejectsMalformedSpectrogram) {
  auto spec = dsp::stft({std::vector<double>(100, 0.1)});
  spec.bins.pop_back();
  EXPECT_THROW(dsp::istft(spec), InvalidArgument);
}

TEST(Mask, ScalesMagnitudeKeepsPhase) {
  Rng rng(5);
  const auto spec = dsp::stft({testing::random_vector(600, rng)});
  std::vector<double> mask(spec.bins.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& m : mask) m = u(rng);
  const auto out = dsp::apply_mask(spec, mask);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    EXPECT_NEAR(std::abs(out.bins[i]), mask[i] * std::abs(spec.bins[i]), 1e-12);
    if (mask[i] > 0.01 && std::abs(spec.bins[i]) > 1e-6) {
      EXPECT_NEAR(std::arg(out.bins[i]), std::arg(spec.bins[i]), 1e-9);
    }
  }
}

TEST(Mask, OnesAreIdentityZerosSilence) {
  Rng rng(6);
  const auto x = testing::random_vector(1024, rng);
  const auto spec = dsp::stft({x});
  const auto ones = dsp::istft(dsp::apply_mask(spec, std::vector<double>(spec.bins.size(), 1.0)));
  EXPECT_LT(relative_l2(x, ones.samples), 1e-12);
  const auto zeros = dsp::istft(dsp::apply_mask(spec, std::vector<double>(spec.bins.size(), 0.0)));
  for (double v : zeros.samples) EXPECT_EQ(v, 0.0);
}

TEST(Mask, Contracts) {
  const auto spec = dsp::stft({std::vector<double>(600, 0.1)});
  EXPECT_THROW(dsp::apply_mask(spec, std::vector<double>(3, 0.5)), InvalidArgument);
  std::vector<double> bad(spec.bins.size(), 0.5);
  bad[7] = 1.5;
  EXPECT_THROW(dsp::apply_mask(spec, bad), ContractViolation);
  bad[7] = -0.1;
  EXPECT_THROW(dsp::apply_mask(spec, bad), ContractViolation);
}

TEST(LogMagnitude, FloorApplies) {
  const auto spec = dsp::stft({std::vector<double>(600, 0.0)});
  const auto lm = dsp::log_magnitude(spec, 1e-7);
  for (double v : lm) EXPECT_DOUBLE_EQ(v, std::log(1e-7));
  EXPECT_THROW(dsp::log_magnitude(spec, 0.0), InvalidArgument);
  auto one = spec;
  one.bins[3] = {3.0, 4.0};
  EXPECT_NEAR(dsp::log_magnitude(one)[3], std::log(5.0), 1e-15);
}

}  // namespace
}  // namespace mdphd
