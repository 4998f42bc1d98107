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

#include "mdphd/layers.hpp"

#include <algorithm>
#include <cmath>

#include "mdphd/errors.hpp"

namespace mdphd::nn {
namespace {

// Kaiming-uniform for a leaky-ReLU gain; biases start at zero.
ad::Tensor kaiming_uniform(ad::Shape shape, double fan_in, double slope, Rng& rng) {
  const double bound = std::sqrt(6.0 / ((1.0 + slope * slope) * std::max(fan_in, 1.0)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(ad::numel(shape));
  for (double& v : values) v = dist(rng);
  return ad::Tensor::from_vector(std::move(shape), std::move(values), true);
}

ad::Tensor zero_bias(std::size_t channels) { return ad::Tensor::zeros({channels}, true); }

}  // namespace

RenormLimits renorm_limits(std::size_t step, std::size_t ramp_steps) {
  const double frac =
      ramp_steps == 0 ? 1.0 : std::min(1.0, static_cast<double>(step) / static_cast<double>(ramp_steps));
  return {1.0 + 2.0 * frac, 5.0 * frac};
}

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride, std::size_t dilation, Mode mode, double slope, Rng& rng)
    : kernel_(kaiming_uniform({out_channels, in_channels, kernel},
                              static_cast<double>(in_channels * kernel), slope, rng)),
      bias_(zero_bias(out_channels)),
      stride_(stride),
      dilation_(dilation),
      mode_(mode) {
  if (mode == Mode::kDilatedSame && (kernel % 2 == 0 || stride != 1)) {
    throw InvalidArgument("dilated convolution needs an odd kernel and stride 1");
  }
}

ad::Tensor Conv1d::forward(const ad::Tensor& x) const {
  ad::Tensor y;
  if (mode_ == Mode::kDilatedSame) {
    y = ad::conv1d_dilated(x, kernel_, dilation_);
  } else {
    const auto opt = ad::conv1d_options(ad::Padding::kSame, x.dim(2), kernel_.dim(2), stride_,
                                        dilation_);
    y = ad::conv1d(x, kernel_, opt);
  }
  return ad::add_channel_bias(y, bias_);
}

std::size_t Conv1d::out_length(std::size_t in_length) const {
  return mode_ == Mode::kDilatedSame ? in_length : (in_length + stride_ - 1) / stride_;
}

void Conv1d::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  out.push_back({prefix + ".kernel", kernel_});
  out.push_back({prefix + ".bias", bias_});
}

ConvTranspose1d::ConvTranspose1d(std::size_t in_channels, std::size_t out_channels,
                                 std::size_t kernel, std::size_t stride, double slope, Rng& rng,
                                 double gain)
    : kernel_(kaiming_uniform({in_channels, out_channels, kernel},
                              static_cast<double>(in_channels * kernel) / static_cast<double>(stride),
                              slope, rng)),
      bias_(zero_bias(out_channels)),
      stride_(stride) {
  for (double& v : kernel_.mutable_values()) v *= gain;
}

ad::Tensor ConvTranspose1d::forward(const ad::Tensor& x, std::size_t out_length) const {
  const auto opt = ad::conv1d_options(ad::Padding::kSame, out_length, kernel_.dim(2), stride_);
  return ad::add_channel_bias(ad::conv_transpose1d(x, kernel_, opt, out_length), bias_);
}

void ConvTranspose1d::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  out.push_back({prefix + ".kernel", kernel_});
  out.push_back({prefix + ".bias", bias_});
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, Size2 kernel, Size2 stride,
               double slope, Rng& rng)
    : kernel_(kaiming_uniform({out_channels, in_channels, kernel[0], kernel[1]},
                              static_cast<double>(in_channels * kernel[0] * kernel[1]), slope, rng)),
      bias_(zero_bias(out_channels)),
      stride_(stride) {}

ad::Tensor Conv2d::forward(const ad::Tensor& x) const {
  const auto opt = ad::conv2d_options(ad::Padding::kSame, {x.dim(2), x.dim(3)},
                                      {kernel_.dim(2), kernel_.dim(3)}, stride_);
  return ad::add_channel_bias(ad::conv2d(x, kernel_, opt), bias_);
}

Size2 Conv2d::out_size(Size2 in_size) const {
  return {(in_size[0] + stride_[0] - 1) / stride_[0], (in_size[1] + stride_[1] - 1) / stride_[1]};
}

void Conv2d::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  out.push_back({prefix + ".kernel", kernel_});
  out.push_back({prefix + ".bias", bias_});
}

ConvTranspose2d::ConvTranspose2d(std::size_t in_channels, std::size_t out_channels, Size2 kernel,
                                 Size2 stride, double slope, Rng& rng)
    : kernel_(kaiming_uniform({in_channels, out_channels, kernel[0], kernel[1]},
                              static_cast<double>(in_channels * kernel[0] * kernel[1]) /
                                  static_cast<double>(stride[0] * stride[1]),
                              slope, rng)),
      bias_(zero_bias(out_channels)),
      stride_(stride) {}

ad::Tensor ConvTranspose2d::forward(const ad::Tensor& x, Size2 out_size) const {
  const auto opt = ad::conv2d_options(ad::Padding::kSame, out_size,
                                      {kernel_.dim(2), kernel_.dim(3)}, stride_);
  return ad::add_channel_bias(ad::conv_transpose2d(x, kernel_, opt, out_size), bias_);
}

void ConvTranspose2d::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  out.push_back({prefix + ".kernel", kernel_});
  out.push_back({prefix + ".bias", bias_});
}

BatchRenorm::BatchRenorm(std::size_t channels)
    : gamma_(ad::Tensor::full({channels}, 1.0, true)), beta_(ad::Tensor::zeros({channels}, true)) {
  state_.running_mean.assign(channels, 0.0);
  state_.running_var.assign(channels, 1.0);
}

ad::Tensor BatchRenorm::forward(const ad::Tensor& x, const RunContext& ctx) {
  ad::RenormOptions opt{ctx.training, ctx.update_stats, ctx.limits.r_max, ctx.limits.d_max};
  return ad::batch_renorm(x, gamma_, beta_, state_, opt);
}

void BatchRenorm::collect(const std::string& prefix, std::vector<Parameter>& out) const {
  out.push_back({prefix + ".gamma", gamma_});
  out.push_back({prefix + ".beta", beta_});
}

void BatchRenorm::collect_buffers(const std::string& prefix, std::vector<Buffer>& out) {
  out.push_back({prefix + ".running_mean", &state_.running_mean});
  out.push_back({prefix + ".running_var", &state_.running_var});
}

std::size_t count_parameters(const std::vector<Parameter>& params) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.tensor.numel();
  return total;
}

}  // namespace mdphd::nn
