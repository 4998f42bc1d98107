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

#include <sstream>

#include <nlohmann/json.hpp>

#include "describe.hpp"
#include "mdphd/errors.hpp"
#include "mdphd/models.hpp"

namespace mdphd::models {

void UNetConfig::validate() const {
  stft.validate();
  if (levels.empty()) throw InvalidArgument("unet config: at least one level is required");
  for (const auto& level : levels) {
    if (level.channels == 0 || level.kernel[0] == 0 || level.kernel[1] == 0 ||
        level.stride[0] == 0 || level.stride[1] == 0) {
      throw InvalidArgument("unet config: level sizes must be positive");
    }
  }
  if (window_length == 0) throw InvalidArgument("unet config: window_length must be positive");
  if (!(log_floor > 0.0)) throw InvalidArgument("unet config: log_floor must be > 0");
}

nn::Size2 UNetConfig::padded_size() const {
  nn::Size2 total{1, 1};
  for (const auto& level : levels) {
    total[0] *= level.stride[0];
    total[1] *= level.stride[1];
  }
  const std::size_t frames = stft.num_frames(window_length);
  const std::size_t bins = stft.num_bins();
  return {(frames + total[0] - 1) / total[0] * total[0], (bins + total[1] - 1) / total[1] * total[1]};
}

void to_json(nlohmann::json& j, const UNetConfig& c) {
  auto levels = nlohmann::json::array();
  for (const auto& l : c.levels) {
    levels.push_back({{"kernel", l.kernel}, {"stride", l.stride}, {"channels", l.channels}});
  }
  j = nlohmann::json{{"window_length", c.window_length},
                     {"stft_window", c.stft.window_size},
                     {"stft_hop", c.stft.hop_size},
                     {"levels", levels},
                     {"leaky_slope", c.leaky_slope},
                     {"log_floor", c.log_floor},
                     {"param_budget", c.param_budget}};
}

void from_json(const nlohmann::json& j, UNetConfig& c) {
  j.at("window_length").get_to(c.window_length);
  j.at("stft_window").get_to(c.stft.window_size);
  j.at("stft_hop").get_to(c.stft.hop_size);
  c.levels.clear();
  for (const auto& l : j.at("levels")) {
    UNetLevel level;
    l.at("kernel").get_to(level.kernel);
    l.at("stride").get_to(level.stride);
    l.at("channels").get_to(level.channels);
    c.levels.push_back(level);
  }
  j.at("leaky_slope").get_to(c.leaky_slope);
  j.at("log_floor").get_to(c.log_floor);
  j.at("param_budget").get_to(c.param_budget);
}

UNet::UNet(UNetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  nn::Rng rng(seed);
  const auto& lv = config_.levels;
  const std::size_t depth = lv.size();
  for (std::size_t i = 0; i < depth; ++i) {
    Encoder enc{nn::Conv2d(i == 0 ? 1 : lv[i - 1].channels, lv[i].channels, lv[i].kernel,
                           lv[i].stride, config_.leaky_slope, rng),
                {}};
    if (i > 0) enc.norm.emplace_back(lv[i].channels);
    encoders_.push_back(std::move(enc));
  }
  decoders_.resize(depth);
  for (std::size_t k = depth; k-- > 0;) {
    const std::size_t in = k == depth - 1 ? lv[k].channels : 2 * lv[k].channels;
    const std::size_t out = k == 0 ? 1 : lv[k - 1].channels;
    Decoder dec{nn::ConvTranspose2d(in, out, lv[k].kernel, lv[k].stride, config_.leaky_slope, rng),
                {}};
    if (k > 0) dec.norm.emplace_back(out);
    decoders_[k] = std::move(dec);
  }
}

UNetOutput UNet::forward_detailed(const ad::Tensor& x, const nn::RunContext& ctx) {
  if (x.rank() != 2 || x.dim(1) != config_.window_length) {
    throw InvalidArgument("unet: expected (B, " + std::to_string(config_.window_length) +
                          ") input, got " + ad::to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t length = x.dim(1);
  const double slope = config_.leaky_slope;

  UNetOutput out;
  out.noisy_spec = ad::stft(x, config_.stft);
  const std::size_t frames = out.noisy_spec.dim(2);
  const std::size_t bins = out.noisy_spec.dim(3);
  auto features = ad::log_floor(ad::magnitude(out.noisy_spec), config_.log_floor);
  const auto padded = config_.padded_size();
  auto h = ad::pad_trailing2d(ad::reshape(features, {batch, 1, frames, bins}), padded[0],
                              padded[1]);

  const std::size_t depth = encoders_.size();
  std::vector<nn::Size2> sizes{padded};
  std::vector<ad::Tensor> skips;
  for (auto& enc : encoders_) {
    h = enc.conv.forward(h);
    if (!enc.norm.empty()) h = enc.norm.front().forward(h, ctx);
    h = ad::leaky_relu(h, slope);
    sizes.push_back({h.dim(2), h.dim(3)});
    skips.push_back(h);
  }
  for (std::size_t k = depth; k-- > 0;) {
    auto input = k == depth - 1 ? h : ad::concat_channels(h, skips[k]);
    h = decoders_[k].conv.forward(input, sizes[k]);
    if (!decoders_[k].norm.empty()) {
      h = ad::leaky_relu(decoders_[k].norm.front().forward(h, ctx), slope);
    }
  }

  out.logits = ad::reshape(ad::crop_trailing2d(h, frames, bins), {batch, frames, bins});
  out.mask = ad::sigmoid(out.logits);
  out.masked_spec = ad::apply_mask(out.noisy_spec, out.mask);
  out.estimate = ad::istft(out.masked_spec, config_.stft, length);
  return out;
}

ad::Tensor UNet::forward(const ad::Tensor& x, const nn::RunContext& ctx) {
  return forward_detailed(x, ctx).estimate;
}

std::vector<nn::Parameter> UNet::parameters() const {
  std::vector<nn::Parameter> out;
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    const std::string prefix = "unet.enc" + std::to_string(i);
    encoders_[i].conv.collect(prefix + ".conv", out);
    for (const auto& n : encoders_[i].norm) n.collect(prefix + ".norm", out);
  }
  for (std::size_t k = decoders_.size(); k-- > 0;) {
    const std::string prefix = "unet.dec" + std::to_string(k);
    decoders_[k].conv.collect(prefix + ".conv", out);
    for (const auto& n : decoders_[k].norm) n.collect(prefix + ".norm", out);
  }
  return out;
}

std::vector<nn::Buffer> UNet::buffers() {
  std::vector<nn::Buffer> out;
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    for (auto& n : encoders_[i].norm) n.collect_buffers("unet.enc" + std::to_string(i) + ".norm", out);
  }
  for (std::size_t k = decoders_.size(); k-- > 0;) {
    for (auto& n : decoders_[k].norm) n.collect_buffers("unet.dec" + std::to_string(k) + ".norm", out);
  }
  return out;
}

std::size_t UNet::param_count() const { return nn::count_parameters(parameters()); }

nn::Size2 UNet::receptive_field() const {
  nn::Size2 rf{1, 1};
  nn::Size2 jump{1, 1};
  for (const auto& level : config_.levels) {
    for (int a = 0; a < 2; ++a) {
      rf[a] += (level.kernel[a] - 1) * jump[a];
      jump[a] *= level.stride[a];
    }
  }
  for (std::size_t k = config_.levels.size(); k-- > 0;) {
    const auto& level = config_.levels[k];
    for (int a = 0; a < 2; ++a) {
      const std::size_t taps = (level.kernel[a] + level.stride[a] - 1) / level.stride[a];
      rf[a] += (taps - 1) * jump[a];
      jump[a] /= level.stride[a];
    }
  }
  return rf;
}

std::vector<LayerInfo> UNet::layers() const {
  std::vector<LayerInfo> out;
  const auto padded = config_.padded_size();
  std::vector<nn::Size2> sizes{padded};
  auto kernel_desc = [](const UNetLevel& l) {
    return "F=(" + std::to_string(l.kernel[0]) + "," + std::to_string(l.kernel[1]) + ") S=(" +
           std::to_string(l.stride[0]) + "," + std::to_string(l.stride[1]) + ")";
  };
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    const auto& l = config_.levels[i];
    sizes.push_back(encoders_[i].conv.out_size(sizes.back()));
    std::size_t params = encoders_[i].conv.param_count();
    for (const auto& n : encoders_[i].norm) params += n.param_count();
    out.push_back({"enc" + std::to_string(i),
                   "conv2d " + kernel_desc(l) + (i == 0 ? " + leaky" : " + renorm + leaky"),
                   {1, l.channels, sizes.back()[0], sizes.back()[1]}, params});
  }
  for (std::size_t k = decoders_.size(); k-- > 0;) {
    const auto& l = config_.levels[k];
    std::size_t params = decoders_[k].conv.param_count();
    for (const auto& n : decoders_[k].norm) params += n.param_count();
    const std::size_t ch = k == 0 ? 1 : config_.levels[k - 1].channels;
    out.push_back({"dec" + std::to_string(k),
                   "t-conv2d " + kernel_desc(l) + (k == 0 ? " + sigmoid mask" : " + renorm + leaky"),
                   {1, ch, sizes[k][0], sizes[k][1]}, params});
  }
  return out;
}

std::string UNet::describe() const {
  const auto rf = receptive_field();
  const auto padded = config_.padded_size();
  std::ostringstream extra;
  extra << rf[0] << " frames x " << rf[1] << " bins (input padded to " << padded[0] << " x "
        << padded[1] << ")";
  return detail::format_layers("U-Net (time-frequency domain, ratio mask)", layers(),
                               param_count(), extra.str());
}

std::uint64_t UNet::fingerprint() const {
  return models::fingerprint(nlohmann::json(config_));
}

dsp::Waveform unet_forward(UNet& model, const dsp::Waveform& x) {
  ad::NoGradGuard guard;
  auto input = ad::Tensor::from_vector({1, x.size()}, x.samples);
  auto y = model.forward(input, nn::RunContext::eval());
  return {std::vector<double>(y.values().begin(), y.values().end()), x.sample_rate};
}

}  // namespace mdphd::models
