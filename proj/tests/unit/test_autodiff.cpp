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

#include <gtest/gtest.h>

#include "mdphd/errors.hpp"
#include "mdphd/ops.hpp"
#include "oracles.hpp"

namespace mdphd {
namespace {

using ad::Tensor;
using testing::Rng;

// Builds a scalar from `inputs` via the op under test, projected on fixed
// random weights, then checks every coordinate against central differences.
void expect_gradients(const std::function<Tensor(const std::vector<Tensor>&)>& op,
                      const std::vector<Tensor>& inputs, Rng& rng, double tol = 1e-6) {
  Tensor weights;
  auto loss = [&](const std::vector<Tensor>& in) {
    auto y = op(in);
    if (!weights.defined()) weights = testing::random_tensor(y.shape(), rng);
    return ad::sum(ad::mul(y, weights));
  };
  for (const auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  ad::backward(loss(inputs));
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto numeric = testing::numeric_gradient([&] { return loss(inputs).item(); }, inputs[k]);
    const auto analytic = inputs[k].grad();
    ASSERT_EQ(analytic.size(), numeric.size());
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      EXPECT_NEAR(analytic[i], numeric[i], tol * std::max(1.0, std::abs(numeric[i])))
          << "input " << k << " coordinate " << i;
    }
  }
}

TEST(Tape, NoGradRecordsNothing) {
  Rng rng(1);
  auto a = testing::random_tensor({3}, rng);
  a.set_requires_grad(true);
  ad::Tape::current().clear();
  {
    ad::NoGradGuard guard;
    auto b = ad::mul(a, a);
    EXPECT_FALSE(b.requires_grad());
    EXPECT_EQ(ad::Tape::current().size(), 0u);
  }
  EXPECT_TRUE(ad::grad_enabled());
}

TEST(Tape, SharedInputsAccumulate) {
  auto a = Tensor::from_vector({2}, {3.0, -2.0}, true);
  // d/da of sum(a*a + a) = 2a + 1
  ad::backward(ad::sum(ad::add(ad::mul(a, a), a)));
  EXPECT_DOUBLE_EQ(a.grad()[0], 7.0);
  EXPECT_DOUBLE_EQ(a.grad()[1], -3.0);
}

TEST(Tape, ConstantsGetNoGradient) {
  auto a = Tensor::from_vector({2}, {1.0, 2.0}, true);
  auto c = Tensor::from_vector({2}, {5.0, 6.0});
  ad::backward(ad::sum(ad::mul(a, c)));
  EXPECT_FALSE(c.has_grad());
  EXPECT_DOUBLE_EQ(a.grad()[1], 6.0);
}

TEST(Elementwise, Values) {
  auto a = Tensor::from_vector({4}, {-2.0, -0.5, 0.0, 3.0});
  const auto l = ad::leaky_relu(a, 0.2);
  EXPECT_DOUBLE_EQ(l.values()[0], -0.4);
  EXPECT_DOUBLE_EQ(l.values()[3], 3.0);
  const auto s = ad::sigmoid(Tensor::from_vector({3}, {-800.0, 0.0, 800.0}));
  EXPECT_EQ(s.values()[0], 0.0);
  EXPECT_DOUBLE_EQ(s.values()[1], 0.5);
  EXPECT_EQ(s.values()[2], 1.0);
  EXPECT_DOUBLE_EQ(ad::l1_norm(a).item(), 5.5);
  EXPECT_DOUBLE_EQ(ad::mean(a).item(), 0.125);
  EXPECT_THROW(ad::add(a, Tensor::zeros({3})), InvalidArgument);
}

TEST(Elementwise, Gradients) {
  Rng rng(2);
  const auto a = testing::random_tensor({2, 5}, rng);
  const auto b = testing::random_tensor({2, 5}, rng);
  expect_gradients([](auto& in) { return ad::mul(in[0], in[1]); }, {a, b}, rng);
  expect_gradients([](auto& in) { return ad::sub(in[0], in[1]); }, {a, b}, rng);
  expect_gradients([](auto& in) { return ad::sigmoid(in[0]); }, {a}, rng);
  expect_gradients([](auto& in) { return ad::leaky_relu(in[0], 0.1); }, {a}, rng);
  expect_gradients([](auto& in) { return ad::scale(in[0], -2.5); }, {a}, rng);
}

TEST(Reductions, RowNorms) {
  const auto a = Tensor::from_vector({2, 2}, {3.0, -4.0, 0.0, 0.0}, true);
  const auto l2 = ad::row_l2_norm(a);
  EXPECT_DOUBLE_EQ(l2.values()[0], 5.0);
  EXPECT_DOUBLE_EQ(l2.values()[1], 0.0);
  ad::backward(ad::sum(l2));
  EXPECT_DOUBLE_EQ(a.grad()[0], 0.6);
  EXPECT_DOUBLE_EQ(a.grad()[1], -0.8);
  EXPECT_EQ(a.grad()[2], 0.0);
  EXPECT_DOUBLE_EQ(ad::row_l1_norm(a).values()[0], 7.0);
  EXPECT_DOUBLE_EQ(ad::row_sum_squares(a).values()[0], 25.0);
}

TEST(Reductions, L1SubgradientAtZeroIsZero) {
  const auto a = Tensor::from_vector({3}, {0.0, 2.0, -1.0}, true);
  ad::backward(ad::l1_norm(a));
  EXPECT_EQ(a.grad()[0], 0.0);
  EXPECT_EQ(a.grad()[1], 1.0);
  EXPECT_EQ(a.grad()[2], -1.0);
}

TEST(Reductions, Gradients) {
  Rng rng(3);
  const auto a = testing::random_tensor({3, 4}, rng);
  expect_gradients([](auto& in) { return ad::row_l2_norm(in[0]); }, {a}, rng);
  expect_gradients([](auto& in) { return ad::row_l1_norm(in[0]); }, {a}, rng);
  expect_gradients([](auto& in) { return ad::row_sum_squares(in[0]); }, {a}, rng);
}

TEST(Shape, PadCropConcat) {
  Rng rng(4);
  const auto a = testing::random_tensor({2, 3, 4, 5}, rng);
  const auto padded = ad::pad_trailing2d(a, 6, 8);
  EXPECT_EQ(padded.shape(), (ad::Shape{2, 3, 6, 8}));
  const auto back = ad::crop_trailing2d(padded, 4, 5);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(back.values()[i], a.values()[i]);
  EXPECT_EQ(padded.values()[7], 0.0);
  const auto b = testing::random_tensor({2, 1, 4, 5}, rng);
  const auto cat = ad::concat_channels(a, b);
  EXPECT_EQ(cat.shape(), (ad::Shape{2, 4, 4, 5}));
  EXPECT_EQ(cat.values()[3 * 20], b.values()[0]);
  EXPECT_EQ(cat.values()[4 * 20], a.values()[60]);
  EXPECT_THROW(ad::reshape(a, {7}), InvalidArgument);
  expect_gradients([](auto& in) { return ad::concat_channels(in[0], in[1]); }, {a, b}, rng);
  expect_gradients([](auto& in) { return ad::pad_trailing2d(in[0], 5, 7); }, {b}, rng);
  expect_gradients([](auto& in) { return ad::crop_trailing2d(in[0], 3, 2); }, {b}, rng);
}

struct Conv1dCase {
  std::size_t length, kernel, stride, dilation;
  ad::Padding padding;
};

TEST(Conv1d, MatchesDirectLoops) {
  Rng rng(5);
  const std::vector<Conv1dCase> cases = {{50, 3, 1, 1, ad::Padding::kSame},
                                         {50, 3, 1, 4, ad::Padding::kSame},
                                         {64, 32, 16, 1, ad::Padding::kSame},
                                         {37, 5, 3, 2, ad::Padding::kValid},
                                         {9, 4, 2, 1, ad::Padding::kSame}};
  for (const auto& c : cases) {
    const std::size_t batch = 2, c_in = 3, c_out = 4;
    const auto x = testing::random_tensor({batch, c_in, c.length}, rng);
    const auto w = testing::random_tensor({c_out, c_in, c.kernel}, rng);
    const auto opt = ad::conv1d_options(c.padding, c.length, c.kernel, c.stride, c.dilation);
    const auto y = ad::conv1d(x, w, opt);
    const auto ref = testing::direct_conv1d({x.values().begin(), x.values().end()}, batch, c_in,
                                            c.length, {w.values().begin(), w.values().end()},
                                            c_out, c.kernel, opt);
    ASSERT_EQ(y.numel(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.values()[i], ref[i], 1e-12);
    if (c.padding == ad::Padding::kSame) {
      EXPECT_EQ(y.dim(2), (c.length + c.stride - 1) / c.stride);
    }
  }
}

TEST(Conv1d, DilatedKeepsLength) {
  Rng rng(6);
  const auto x = testing::random_tensor({1, 2, 40}, rng);
  const auto w = testing::random_tensor({2, 2, 3}, rng);
  const auto y = ad::conv1d_dilated(x, w, 8);
  EXPECT_EQ(y.dim(2), 40u);
  const auto ref = testing::direct_conv1d({x.values().begin(), x.values().end()}, 1, 2, 40,
                                          {w.values().begin(), w.values().end()}, 2, 3,
                                          {1, 8, 8, 8});
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.values()[i], ref[i], 1e-12);
  EXPECT_THROW(ad::conv1d_dilated(x, testing::random_tensor({2, 2, 4}, rng), 2), InvalidArgument);
}

TEST(Conv1d, TransposeIsAdjoint) {
  Rng rng(7);
  for (const auto& [len, k, s] : std::vector<std::array<std::size_t, 3>>{{64, 32, 16}, {33, 5, 2}, {20, 3, 1}}) {
    const auto opt = ad::conv1d_options(ad::Padding::kSame, len, k, s);
    const std::size_t out_len = ad::conv1d_output_length(len, k, opt);
    const auto x = testing::random_tensor({2, 3, len}, rng);
    const auto y = testing::random_tensor({2, 4, out_len}, rng);
    const auto w = testing::random_tensor({4, 3, k}, rng);
    const double lhs = testing::dot(ad::conv1d(x, w, opt).values(), y.values());
    const double rhs = testing::dot(x.values(), ad::conv_transpose1d(y, w, opt, len).values());
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Conv1d, Gradients) {
  Rng rng(8);
  const auto x = testing::random_tensor({2, 2, 12}, rng);
  const auto w = testing::random_tensor({3, 2, 3}, rng);
  const auto opt = ad::conv1d_options(ad::Padding::kSame, 12, 3, 2, 2);
  expect_gradients([opt](auto& in) { return ad::conv1d(in[0], in[1], opt); }, {x, w}, rng);
  const auto wt = testing::random_tensor({2, 3, 4}, rng);
  const auto y = testing::random_tensor({2, 2, 6}, rng);
  const auto topt = ad::conv1d_options(ad::Padding::kSame, 12, 4, 2);
  expect_gradients([topt](auto& in) { return ad::conv_transpose1d(in[0], in[1], topt, 12); },
                   {y, wt}, rng);
}

TEST(Conv2d, MatchesDirectLoops) {
  Rng rng(9);
  for (const auto& [h, w, k, s] : std::vector<std::array<std::size_t, 4>>{
           {8, 12, 5, 2}, {7, 9, 3, 1}, {16, 20, 5, 2}, {3, 65, 5, 2}}) {
    const std::size_t batch = 2, c_in = 3, c_out = 8;
    const auto x = testing::random_tensor({batch, c_in, h, w}, rng);
    const auto kernel = testing::random_tensor({c_out, c_in, k, k}, rng);
    const auto opt = ad::conv2d_options(ad::Padding::kSame, {h, w}, {k, k}, {s, s});
    const auto y = ad::conv2d(x, kernel, opt);
    const auto ref = testing::direct_conv2d({x.values().begin(), x.values().end()}, batch, c_in,
                                            h, w, {kernel.values().begin(), kernel.values().end()},
                                            c_out, k, k, opt);
    ASSERT_EQ(y.numel(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.values()[i], ref[i], 1e-11);
  }
}

TEST(Conv2d, TransposeIsAdjoint) {
  Rng rng(10);
  for (const auto& [h, w] : std::vector<std::array<std::size_t, 2>>{{12, 260}, {6, 130}, {5, 7}}) {
    const auto opt = ad::conv2d_options(ad::Padding::kSame, {h, w}, {5, 5}, {2, 2});
    const auto out = ad::conv2d_output_size({h, w}, {5, 5}, opt);
    const auto x = testing::random_tensor({2, 12, h, w}, rng);
    const auto y = testing::random_tensor({2, 24, out[0], out[1]}, rng);
    const auto k = testing::random_tensor({24, 12, 5, 5}, rng);
    const double lhs = testing::dot(ad::conv2d(x, k, opt).values(), y.values());
    const double rhs = testing::dot(x.values(), ad::conv_transpose2d(y, k, opt, {h, w}).values());
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Conv2d, GradientsOfWideLayers) {
  // Many output channels exercise the weight-gradient product with a
  // transposed operand.
  Rng rng(11);
  const auto x = testing::random_tensor({2, 8, 6, 7}, rng);
  const auto k = testing::random_tensor({16, 8, 3, 3}, rng, 0.3);
  const auto opt = ad::conv2d_options(ad::Padding::kSame, {6, 7}, {3, 3}, {2, 2});
  expect_gradients([opt](auto& in) { return ad::conv2d(in[0], in[1], opt); }, {x, k}, rng);
  const auto y = testing::random_tensor({2, 16, 3, 4}, rng);
  expect_gradients([opt](auto& in) { return ad::conv_transpose2d(in[0], in[1], opt, {6, 7}); },
                   {y, k}, rng);
}

TEST(Conv2d, ChainedGradients) {
  Rng rng(12);
  const auto x = testing::random_tensor({1, 1, 8, 12}, rng);
  const auto k0 = testing::random_tensor({8, 1, 5, 5}, rng, 0.3);
  const auto k1 = testing::random_tensor({8, 8, 5, 5}, rng, 0.1);
  const auto b0 = testing::random_tensor({8}, rng);
  const auto o0 = ad::conv2d_options(ad::Padding::kSame, {8, 12}, {5, 5}, {1, 1});
  expect_gradients(
      [o0](auto& in) {
        auto h = ad::leaky_relu(ad::add_channel_bias(ad::conv2d(in[0], in[1], o0), in[3]), 0.2);
        return ad::conv2d(h, in[2], o0);
      },
      {x, k0, k1, b0}, rng);
}

TEST(Conv2d, ShapeErrors) {
  Rng rng(13);
  const auto x = testing::random_tensor({1, 2, 4, 4}, rng);
  EXPECT_THROW(ad::conv2d(x, testing::random_tensor({3, 1, 3, 3}, rng), {}), InvalidArgument);
  EXPECT_THROW(ad::conv2d(testing::random_tensor({2, 4, 4}, rng),
                          testing::random_tensor({3, 2, 3, 3}, rng), {}),
               InvalidArgument);
  const auto opt = ad::conv2d_options(ad::Padding::kSame, {4, 4}, {3, 3}, {2, 2});
  EXPECT_THROW(ad::conv_transpose2d(testing::random_tensor({1, 3, 2, 2}, rng),
                                    testing::random_tensor({3, 2, 3, 3}, rng), opt, {9, 9}),
               InvalidArgument);
}

TEST(BatchRenorm, StartingLimitsReduceToBatchNorm) {
  Rng rng(14);
  const auto x = testing::random_tensor({4, 2, 5}, rng);
  const auto gamma = Tensor::from_vector({2}, {1.5, 0.5});
  const auto beta = Tensor::from_vector({2}, {0.1, -0.2});
  ad::RenormState state{{3.0, -1.0}, {9.0, 0.25}};
  const auto y = ad::batch_renorm(x, gamma, beta, state, {true, false, 1.0, 0.0});
  for (std::size_t c = 0; c < 2; ++c) {
    double mu = 0.0, var = 0.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 5; ++i) mu += x.values()[(n * 2 + c) * 5 + i] / 20.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 5; ++i) var += std::pow(x.values()[(n * 2 + c) * 5 + i] - mu, 2) / 20.0;
    for (std::size_t n = 0; n < 4; ++n) {
      for (std::size_t i = 0; i < 5; ++i) {
        const std::size_t j = (n * 2 + c) * 5 + i;
        const double expected =
            gamma.values()[c] * (x.values()[j] - mu) / std::sqrt(var + 1e-5) + beta.values()[c];
        EXPECT_NEAR(y.values()[j], expected, 1e-12);
      }
    }
  }
  EXPECT_EQ(state.running_mean[0], 3.0);  // update_stats off
}

TEST(BatchRenorm, CorrectionsAreClipped) {
  Rng rng(15);
  // Batch statistics far from the running ones: r and d saturate.
  auto x = testing::random_tensor({8, 1, 16}, rng, 10.0);
  for (auto& v : x.mutable_values()) v += 100.0;
  const auto gamma = Tensor::full({1}, 1.0);
  const auto beta = Tensor::zeros({1});
  ad::RenormState state{{0.0}, {1.0}};
  const auto y = ad::batch_renorm(x, gamma, beta, state, {true, false, 3.0, 5.0});
  double mu = 0.0;
  for (double v : x.values()) mu += v / 128.0;
  double var = 0.0;
  for (double v : x.values()) var += (v - mu) * (v - mu) / 128.0;
  const double sigma = std::sqrt(var + 1e-5);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_NEAR(y.values()[i], (x.values()[i] - mu) / sigma * 3.0 + 5.0, 1e-10);
  }
}

TEST(BatchRenorm, RunningStatisticsUseMomentum) {
  const auto x = Tensor::from_vector({2, 1, 2}, {1.0, 3.0, 5.0, 7.0});
  ad::RenormState state{{0.0}, {1.0}};
  ad::batch_renorm(x, Tensor::full({1}, 1.0), Tensor::zeros({1}), state, {true, true, 1.0, 0.0});
  EXPECT_NEAR(state.running_mean[0], 0.01 * 4.0, 1e-15);
  EXPECT_NEAR(state.running_var[0], 0.99 + 0.01 * 5.0, 1e-15);
  // Evaluation reads the running statistics.
  const auto y = ad::batch_renorm(x, Tensor::full({1}, 2.0), Tensor::full({1}, 1.0), state, {});
  EXPECT_NEAR(y.values()[0], 2.0 * (1.0 - 0.04) / std::sqrt(1.04 + 1e-5) + 1.0, 1e-12);
}

TEST(BatchRenorm, Gradients) {
  Rng rng(16);
  const auto x = testing::random_tensor({3, 2, 2, 3}, rng);
  const auto gamma = testing::random_tensor({2}, rng);
  const auto beta = testing::random_tensor({2}, rng);
  ad::RenormState state{{0.3, -0.2}, {1.5, 0.7}};
  expect_gradients(
      [&state](auto& in) { return ad::batch_renorm(in[0], in[1], in[2], state, {true, false, 1.0, 0.0}); },
      {x, gamma, beta}, rng, 1e-5);
  expect_gradients(
      [&state](auto& in) { return ad::batch_renorm(in[0], in[1], in[2], state, {false, false, 1.0, 0.0}); },
      {x, gamma, beta}, rng, 1e-5);
}

TEST(Spectral, StftOpMatchesDsp) {
  Rng rng(17);
  const auto x = testing::random_tensor({2, 100}, rng);
  const dsp::StftConfig cfg{32, 8};
  const auto spec = ad::stft(x, cfg);
  EXPECT_EQ(spec.shape(), (ad::Shape{2, 2, cfg.num_frames(100), 17}));
  const auto ref = testing::brute_force_stft({x.values().begin() + 100, x.values().end()}, 32, 8);
  const std::size_t plane = cfg.num_frames(100) * 17;
  for (std::size_t i = 0; i < plane; ++i) {
    EXPECT_NEAR(spec.values()[2 * plane + i], ref[i].real(), 1e-10);
    EXPECT_NEAR(spec.values()[3 * plane + i], ref[i].imag(), 1e-10);
  }
  const auto back = ad::istft(spec, cfg, 100);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(back.values()[i], x.values()[i], 1e-12);
}

TEST(Spectral, Gradients) {
  Rng rng(18);
  const dsp::StftConfig cfg{16, 4};
  const auto x = testing::random_tensor({1, 30}, rng);
  expect_gradients([cfg](auto& in) { return ad::stft(in[0], cfg); }, {x}, rng);
  const auto spec = testing::random_tensor({1, 2, cfg.num_frames(30), 9}, rng);
  expect_gradients([cfg](auto& in) { return ad::istft(in[0], cfg, 30); }, {spec}, rng);
  expect_gradients([](auto& in) { return ad::magnitude(in[0]); }, {spec}, rng);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  auto mask = Tensor::zeros({1, cfg.num_frames(30), 9});
  for (auto& m : mask.mutable_values()) m = u(rng);
  expect_gradients([](auto& in) { return ad::apply_mask(in[0], in[1]); }, {spec, mask}, rng);
  auto positive = Tensor::zeros({3, 4});
  for (auto& v : positive.mutable_values()) v = u(rng);
  expect_gradients([](auto& in) { return ad::log_floor(in[0], 1e-3); }, {positive}, rng);
}

TEST(Spectral, FlatRegionsHaveZeroGradient) {
  auto spec = Tensor::zeros({1, 2, 1, 2}, true);
  spec.mutable_values()[1] = 2.0;  // real part of bin 1
  ad::backward(ad::sum(ad::magnitude(spec)));
  EXPECT_EQ(spec.grad()[0], 0.0);
  EXPECT_EQ(spec.grad()[2], 0.0);
  EXPECT_DOUBLE_EQ(spec.grad()[1], 1.0);

  auto a = Tensor::from_vector({2}, {1e-9, 2.0}, true);
  const auto l = ad::log_floor(a, 1e-7);
  EXPECT_DOUBLE_EQ(l.values()[0], std::log(1e-7));
  ad::backward(ad::sum(l));
  EXPECT_EQ(a.grad()[0], 0.0);
  EXPECT_DOUBLE_EQ(a.grad()[1], 0.5);
}

TEST(Spectral, MaskContract) {
  const auto spec = Tensor::zeros({1, 2, 2, 3});
  EXPECT_THROW(ad::apply_mask(spec, Tensor::full({1, 2, 3}, 1.5)), ContractViolation);
  EXPECT_THROW(ad::apply_mask(spec, Tensor::full({1, 3, 3}, 0.5)), InvalidArgument);
}

}  // namespace
}  // namespace mdphd
