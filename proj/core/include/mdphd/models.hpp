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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mdphd/dsp.hpp"
#include "mdphd/layers.hpp"
#include "mdphd/tensor.hpp"

namespace mdphd::models {

/// Reduced TasNet: strided 1D conv encoder, a stack of non-causal dilated
/// conv blocks (renorm + leaky ReLU, residual), and a 1D transposed-conv
/// decoder back to the waveform.
struct TasNetConfig {
  std::size_t window_length = 16384;
  std::size_t channels = 44;
  std::size_t kernel_size = 3;
  std::size_t num_blocks = 8;
  std::size_t dilation_base = 2;
  // Dilation restarts at 1 every `dilation_cap` blocks; 0 never restarts.
  std::size_t dilation_cap = 0;
  std::size_t encoder_kernel = 32;
  std::size_t encoder_stride = 16;
  double leaky_slope = 0.2;
  bool residual_blocks = true;
  // Decoder output is added to the input waveform.
  bool input_skip = true;
  std::size_t param_budget = 0;

  std::size_t dilation(std::size_t block) const;
  void validate() const;
};

void to_json(nlohmann::json& j, const TasNetConfig& c);
void from_json(const nlohmann::json& j, TasNetConfig& c);

struct UNetLevel {
  nn::Size2 kernel{5, 5};
  nn::Size2 stride{2, 2};
  std::size_t channels = 16;
};

/// U-Net over the log-magnitude spectrogram, laid out as (frames, bins).
/// Predicts a sigmoid ratio mask that is applied to the noisy spectrogram;
/// the noisy phase is reused for resynthesis.
struct UNetConfig {
  std::size_t window_length = 16384;
  dsp::StftConfig stft;
  std::vector<UNetLevel> levels;
  double leaky_slope = 0.2;
  double log_floor = 1e-7;
  std::size_t param_budget = 0;

  void validate() const;
  /// Frames and bins after padding to multiples of the total strides.
  nn::Size2 padded_size() const;
};

void to_json(nlohmann::json& j, const UNetConfig& c);
void from_json(const nlohmann::json& j, UNetConfig& c);

/// FNV-1a over the compact JSON dump.
std::uint64_t fingerprint(const nlohmann::json& config);

struct LayerInfo {
  std::string name;
  std::string kind;
  ad::Shape output_shape;  // for a batch of one
  std::size_t params = 0;
};

class TasNet {
 public:
  TasNet(TasNetConfig config, std::uint64_t seed);

  /// (B, T) waveforms -> (B, T) speech estimates.
  ad::Tensor forward(const ad::Tensor& x, const nn::RunContext& ctx);

  const TasNetConfig& config() const { return config_; }
  std::vector<nn::Parameter> parameters() const;
  std::vector<nn::Buffer> buffers();
  std::size_t param_count() const;
  /// Input samples that can influence one output sample.
  std::size_t receptive_field() const;
  std::vector<LayerInfo> layers() const;
  std::string describe() const;
  std::uint64_t fingerprint() const;

 private:
  struct Block {
    nn::Conv1d conv;
    nn::BatchRenorm norm;
    std::size_t dilation;
  };

  TasNetConfig config_;
  nn::Conv1d encoder_;
  std::vector<Block> blocks_;
  nn::ConvTranspose1d decoder_;
};

struct UNetOutput {
  ad::Tensor estimate;  // (B, T)
  ad::Tensor mask;      // (B, F, K)
  ad::Tensor logits;    // (B, F, K), pre-sigmoid
  ad::Tensor noisy_spec;   // (B, 2, F, K)
  ad::Tensor masked_spec;  // (B, 2, F, K)
};

class UNet {
 public:
  UNet(UNetConfig config, std::uint64_t seed);

  ad::Tensor forward(const ad::Tensor& x, const nn::RunContext& ctx);
  UNetOutput forward_detailed(const ad::Tensor& x, const nn::RunContext& ctx);

  const UNetConfig& config() const { return config_; }
  std::vector<nn::Parameter> parameters() const;
  std::vector<nn::Buffer> buffers();
  std::size_t param_count() const;
  /// Receptive field in (frames, bins) of the mask network.
  nn::Size2 receptive_field() const;
  std::vector<LayerInfo> layers() const;
  std::string describe() const;
  std::uint64_t fingerprint() const;

 private:
  struct Encoder {
    nn::Conv2d conv;
    std::vector<nn::BatchRenorm> norm;  // empty on the first level
  };
  struct Decoder {
    nn::ConvTranspose2d conv;
    std::vector<nn::BatchRenorm> norm;  // empty on the output level
  };

  UNetConfig config_;
  std::vector<Encoder> encoders_;
  std::vector<Decoder> decoders_;  // decoders_[i] restores encoder i's input size
};

/// Single-window inference in evaluation mode, no gradient recording.
dsp::Waveform tasnet_forward(TasNet& model, const dsp::Waveform& x);
dsp::Waveform unet_forward(UNet& model, const dsp::Waveform& x);

// Presets: "toy", "1.5m", "3m" (also accepted with a "tasnet-"/"unet-" prefix).
TasNetConfig tasnet_preset(std::string_view name);
UNetConfig unet_preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace mdphd::models
