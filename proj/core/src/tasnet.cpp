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
#include <sstream>

#include <nlohmann/json.hpp>

#include "describe.hpp"
#include "mdphd/errors.hpp"
#include "mdphd/models.hpp"

namespace mdphd::models {

std::size_t TasNetConfig::dilation(std::size_t block) const {
  const std::size_t exponent = dilation_cap == 0 ? block : block % dilation_cap;
  std::size_t d = 1;
  for (std::size_t i = 0; i < exponent; ++i) d *= dilation_base;
  return d;
}

void TasNetConfig::validate() const {
  if (channels == 0 || num_blocks == 0 || encoder_kernel == 0 || encoder_stride == 0 ||
      dilation_base == 0) {
    throw InvalidArgument("tasnet config: sizes must be positive");
  }
  if (kernel_size % 2 == 0) throw InvalidArgument("tasnet config: kernel_size must be odd");
  if (window_length == 0 || window_length % encoder_stride != 0) {
    throw InvalidArgument("tasnet config: window_length must be a multiple of encoder_stride");
  }
}

void to_json(nlohmann::json& j, const TasNetConfig& c) {
  j = nlohmann::json{{"window_length", c.window_length},
                     {"channels", c.channels},
                     {"kernel_size", c.kernel_size},
                     {"num_blocks", c.num_blocks},
                     {"dilation_base", c.dilation_base},
                     {"dilation_cap", c.dilation_cap},
                     {"encoder_kernel", c.encoder_kernel},
                     {"encoder_stride", c.encoder_stride},
                     {"leaky_slope", c.leaky_slope},
                     {"residual_blocks", c.residual_blocks},
                     {"input_skip", c.input_skip},
                     {"param_budget", c.param_budget}};
}

void from_json(const nlohmann::json& j, TasNetConfig& c) {
  j.at("window_length").get_to(c.window_length);
  j.at("channels").get_to(c.channels);
  j.at("kernel_size").get_to(c.kernel_size);
  j.at("num_blocks").get_to(c.num_blocks);
  j.at("dilation_base").get_to(c.dilation_base);
  j.at("dilation_cap").get_to(c.dilation_cap);
  j.at("encoder_kernel").get_to(c.encoder_kernel);
  j.at("encoder_stride").get_to(c.encoder_stride);
  j.at("leaky_slope").get_to(c.leaky_slope);
  j.at("residual_blocks").get_to(c.residual_blocks);
  j.at("input_skip").get_to(c.input_skip);
  j.at("param_budget").get_to(c.param_budget);
}

std::uint64_t fingerprint(const nlohmann::json& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

TasNet::TasNet(TasNetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  nn::Rng rng(seed);
  const auto& c = config_;
  encoder_ = nn::Conv1d(1, c.channels, c.encoder_kernel, c.encoder_stride, 1,
                        nn::Conv1d::Mode::kSame, c.leaky_slope, rng);
  for (std::size_t i = 0; i < c.num_blocks; ++i) {
    const std::size_t d = c.dilation(i);
    blocks_.push_back({nn::Conv1d(c.channels, c.channels, c.kernel_size, 1, d,
                                  nn::Conv1d::Mode::kDilatedSame, c.leaky_slope, rng),
                       nn::BatchRenorm(c.channels), d});
  }
  // With the input skip the network starts close to the identity.
  decoder_ = nn::ConvTranspose1d(c.channels, 1, c.encoder_kernel, c.encoder_stride,
                                 c.leaky_slope, rng, c.input_skip ? 0.01 : 1.0);
}

ad::Tensor TasNet::forward(const ad::Tensor& x, const nn::RunContext& ctx) {
  if (x.rank() != 2 || x.dim(1) != config_.window_length) {
    throw InvalidArgument("tasnet: expected (B, " + std::to_string(config_.window_length) +
                          ") input, got " + ad::to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t length = x.dim(1);
  auto h = ad::reshape(x, {batch, 1, length});
  h = ad::leaky_relu(encoder_.forward(h), config_.leaky_slope);
  for (auto& block : blocks_) {
    auto z = block.conv.forward(h);
    z = ad::leaky_relu(block.norm.forward(z, ctx), config_.leaky_slope);
    h = config_.residual_blocks ? ad::add(h, z) : z;
  }
  auto y = ad::reshape(decoder_.forward(h, length), {batch, length});
  return config_.input_skip ? ad::add(x, y) : y;
}

std::vector<nn::Parameter> TasNet::parameters() const {
  std::vector<nn::Parameter> out;
  encoder_.collect("tasnet.encoder", out);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string prefix = "tasnet.block" + std::to_string(i);
    blocks_[i].conv.collect(prefix + ".conv", out);
    blocks_[i].norm.collect(prefix + ".norm", out);
  }
  decoder_.collect("tasnet.decoder", out);
  return out;
}

std::vector<nn::Buffer> TasNet::buffers() {
  std::vector<nn::Buffer> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].norm.collect_buffers("tasnet.block" + std::to_string(i) + ".norm", out);
  }
  return out;
}

std::size_t TasNet::param_count() const { return nn::count_parameters(parameters()); }

std::size_t TasNet::receptive_field() const {
  const auto& c = config_;
  // Frames seen by one decoder output sample, then widened by the dilated stack.
  const std::size_t decoder_frames = (c.encoder_kernel + c.encoder_stride - 1) / c.encoder_stride;
  std::size_t stack_frames = 1;
  for (const auto& block : blocks_) stack_frames += (c.kernel_size - 1) * block.dilation;
  return (decoder_frames + stack_frames - 2) * c.encoder_stride + c.encoder_kernel;
}

std::vector<LayerInfo> TasNet::layers() const {
  const auto& c = config_;
  const std::size_t frames = c.window_length / c.encoder_stride;
  std::vector<LayerInfo> out;
  out.push_back({"encoder", "conv1d k=" + std::to_string(c.encoder_kernel) +
                                " s=" + std::to_string(c.encoder_stride) + " + leaky",
                 {1, c.channels, frames}, encoder_.param_count()});
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    out.push_back({"block" + std::to_string(i),
                   "d-conv1d k=" + std::to_string(c.kernel_size) +
                       " d=" + std::to_string(blocks_[i].dilation) + " + renorm + leaky",
                   {1, c.channels, frames},
                   blocks_[i].conv.param_count() + blocks_[i].norm.param_count()});
  }
  out.push_back({"decoder", "t-conv1d k=" + std::to_string(c.encoder_kernel) +
                                " s=" + std::to_string(c.encoder_stride),
                 {1, c.window_length}, decoder_.param_count()});
  return out;
}

std::string TasNet::describe() const {
  return detail::format_layers("TasNet (time domain)", layers(), param_count(),
                               std::to_string(receptive_field()) + " samples");
}

std::uint64_t TasNet::fingerprint() const {
  return models::fingerprint(nlohmann::json(config_));
}

dsp::Waveform tasnet_forward(TasNet& model, const dsp::Waveform& x) {
  ad::NoGradGuard guard;
  auto input = ad::Tensor::from_vector({1, x.size()}, x.samples);
  auto y = model.forward(input, nn::RunContext::eval());
  return {std::vector<double>(y.values().begin(), y.values().end()), x.sample_rate};
}

}  // namespace mdphd::models
