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
#include <functional>
#include <vector>

#include "mdphd/dsp.hpp"
#include "mdphd/tensor.hpp"

// Differentiable operations. Every op records itself on the calling thread's
// tape when any input requires grad (see tensor.hpp).
namespace mdphd::ad {

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
Tensor sigmoid(const Tensor& a);

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum of absolute values. The subgradient at 0 is 0.
Tensor l1_norm(const Tensor& a);

// Row-wise reductions over all but the leading (batch) axis; result is (B).
Tensor row_l1_norm(const Tensor& a);
/// Euclidean norm per row; gradient is 0 for an all-zero row.
Tensor row_l2_norm(const Tensor& a);
Tensor row_sum_squares(const Tensor& a);

// ---- shape -----------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape);
/// Concatenates (B, C1, ...) and (B, C2, ...) along axis 1.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Zero-pads the two trailing axes at the end up to (height, width).
Tensor pad_trailing2d(const Tensor& a, std::size_t height, std::size_t width);
/// Keeps the leading (height, width) block of the two trailing axes.
Tensor crop_trailing2d(const Tensor& a, std::size_t height, std::size_t width);

// ---- convolution -----------------------------------------------------------

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};

enum class Padding { kSame, kValid };

/// "same" gives ceil(length / stride) outputs; odd padding puts the extra
/// zero on the right.
Conv1dOptions conv1d_options(Padding padding, std::size_t length, std::size_t kernel,
                             std::size_t stride = 1, std::size_t dilation = 1);
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel,
                                 const Conv1dOptions& opt);

/// input (B, Cin, T), kernel (Cout, Cin, K) -> (B, Cout, T').
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Conv1dOptions& opt);

/// Non-causal dilated convolution with symmetric zero padding; K must be odd
/// and the output keeps the input length.
Tensor conv1d_dilated(const Tensor& input, const Tensor& kernel, std::size_t dilation);

/// Adjoint of conv1d with the same kernel and options: input (B, Cout, T')
/// -> (B, Cin, output_length). `output_length` must map back to T' under conv1d.
Tensor conv_transpose1d(const Tensor& input, const Tensor& kernel, const Conv1dOptions& opt,
                        std::size_t output_length);

struct Conv2dOptions {
  std::array<std::size_t, 2> stride{1, 1};
  std::size_t pad_top = 0;
  std::size_t pad_bottom = 0;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};

Conv2dOptions conv2d_options(Padding padding, std::array<std::size_t, 2> size,
                             std::array<std::size_t, 2> kernel,
                             std::array<std::size_t, 2> stride = {1, 1});
std::array<std::size_t, 2> conv2d_output_size(std::array<std::size_t, 2> size,
                                              std::array<std::size_t, 2> kernel,
                                              const Conv2dOptions& opt);

/// input (B, Cin, H, W), kernel (Cout, Cin, KH, KW) -> (B, Cout, H', W').
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Conv2dOptions& opt);

/// Adjoint of conv2d: (B, Cout, H', W') -> (B, Cin, output_size).
Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, const Conv2dOptions& opt,
                        std::array<std::size_t, 2> output_size);

/// Adds bias[c] to every element of channel c of a (B, C, ...) tensor.
Tensor add_channel_bias(const Tensor& input, const Tensor& bias);

// ---- normalization ---------------------------------------------------------

struct RenormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.01;
  double eps = 1e-5;
};

struct RenormOptions {
  bool training = false;
  bool update_stats = true;
  double r_max = 1.0;
  double d_max = 0.0;
};

/// Batch renormalization over axis 1 of (B, C, ...). In training the batch
/// statistics are corrected towards the running ones by clipped r and d,
/// which are constants for the backward pass. Evaluation uses the running
/// statistics; a non-positive running variance is read as 1.
Tensor batch_renorm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                    RenormState& state, const RenormOptions& opt);

// ---- spectral --------------------------------------------------------------

/// (B, T) -> (B, 2, F, K): real and imaginary planes of the one-sided STFT.
Tensor stft(const Tensor& signal, const dsp::StftConfig& cfg);
/// (B, 2, F, K) -> (B, length).
Tensor istft(const Tensor& spec, const dsp::StftConfig& cfg, std::size_t length);
/// (B, 2, F, K) -> (B, F, K). Gradient is 0 at a zero bin.
Tensor magnitude(const Tensor& spec);
/// ln(max(a, floor)); gradient is 0 where the floor is active.
Tensor log_floor(const Tensor& a, double floor);
/// Scales both planes of (B, 2, F, K) by a (B, F, K) mask in [0, 1].
Tensor apply_mask(const Tensor& spec, const Tensor& mask);

}  // namespace mdphd::ad
