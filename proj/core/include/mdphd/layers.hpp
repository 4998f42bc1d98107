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

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mdphd/ops.hpp"
#include "mdphd/tensor.hpp"

namespace mdphd::nn {

/// Trainable tensor with a stable dotted name, e.g. "unet.enc0.kernel".
struct Parameter {
  std::string name;
  ad::Tensor tensor;
};

/// Non-trainable state saved with a model (batch-renorm running statistics).
struct Buffer {
  std::string name;
  std::vector<double>* values;
};

struct RenormLimits {
  double r_max = 1.0;
  double d_max = 0.0;
};

/// r_max ramps 1 -> 3 and d_max 0 -> 5 linearly over `ramp_steps`.
RenormLimits renorm_limits(std::size_t step, std::size_t ramp_steps = 5000);

/// How a forward pass treats normalization layers.
struct RunContext {
  bool training = false;
  bool update_stats = true;
  RenormLimits limits;

  static RunContext eval() { return {}; }
  static RunContext train(std::size_t step, bool update_stats = true) {
    return {true, update_stats, renorm_limits(step)};
  }
};

using Rng = std::mt19937_64;

class Conv1d {
 public:
  enum class Mode { kSame, kDilatedSame };

  Conv1d() = default;
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, std::size_t dilation, Mode mode, double slope, Rng& rng);

  ad::Tensor forward(const ad::Tensor& x) const;
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
  std::size_t param_count() const { return kernel_.numel() + bias_.numel(); }
  std::size_t out_length(std::size_t in_length) const;

  const ad::Tensor& kernel() const { return kernel_; }
  const ad::Tensor& bias() const { return bias_; }

 private:
  ad::Tensor kernel_;
  ad::Tensor bias_;
  std::size_t stride_ = 1;
  std::size_t dilation_ = 1;
  Mode mode_ = Mode::kSame;
};

/// Maps `in_channels` -> `out_channels`; its kernel is (in, out, K), i.e. the
/// kernel of the strided convolution it inverts. `gain` scales the initial
/// kernel.
class ConvTranspose1d {
 public:
  ConvTranspose1d() = default;
  ConvTranspose1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, double slope, Rng& rng, double gain = 1.0);

  ad::Tensor forward(const ad::Tensor& x, std::size_t out_length) const;
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
  std::size_t param_count() const { return kernel_.numel() + bias_.numel(); }

  const ad::Tensor& kernel() const { return kernel_; }
  const ad::Tensor& bias() const { return bias_; }

 private:
  ad::Tensor kernel_;
  ad::Tensor bias_;
  std::size_t stride_ = 1;
};

using Size2 = std::array<std::size_t, 2>;

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t in_channels, std::size_t out_channels, Size2 kernel, Size2 stride,
         double slope, Rng& rng);

  ad::Tensor forward(const ad::Tensor& x) const;
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
  std::size_t param_count() const { return kernel_.numel() + bias_.numel(); }
  Size2 out_size(Size2 in_size) const;

  const ad::Tensor& kernel() const { return kernel_; }
  const ad::Tensor& bias() const { return bias_; }

 private:
  ad::Tensor kernel_;
  ad::Tensor bias_;
  Size2 stride_{1, 1};
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(std::size_t in_channels, std::size_t out_channels, Size2 kernel,
                  Size2 stride, double slope, Rng& rng);

  ad::Tensor forward(const ad::Tensor& x, Size2 out_size) const;
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
  std::size_t param_count() const { return kernel_.numel() + bias_.numel(); }

  const ad::Tensor& kernel() const { return kernel_; }
  const ad::Tensor& bias() const { return bias_; }

 private:
  ad::Tensor kernel_;
  ad::Tensor bias_;
  Size2 stride_{1, 1};
};

/// Per-channel batch renormalization with learnable scale and shift.
class BatchRenorm {
 public:
  BatchRenorm() = default;
  explicit BatchRenorm(std::size_t channels);

  ad::Tensor forward(const ad::Tensor& x, const RunContext& ctx);
  void collect(const std::string& prefix, std::vector<Parameter>& out) const;
  void collect_buffers(const std::string& prefix, std::vector<Buffer>& out);
  std::size_t param_count() const { return gamma_.numel() + beta_.numel(); }

  ad::RenormState& state() { return state_; }

 private:
  ad::Tensor gamma_;
  ad::Tensor beta_;
  ad::RenormState state_;
};

std::size_t count_parameters(const std::vector<Parameter>& params);

}  // namespace mdphd::nn
