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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mdphd::dsp {

inline constexpr int kSampleRate = 16000;

/// Mono signal at a fixed sample rate.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

enum class WindowFn { kHann };

struct StftConfig {
  std::size_t window_size = 512;
  std::size_t hop_size = 256;
  WindowFn window_fn = WindowFn::kHann;

  std::size_t num_bins() const { return window_size / 2 + 1; }
  /// Throws InvalidArgument unless window_size is even and hop divides it.
  void validate() const;
  /// Frames produced for a signal of `length` samples (center-padded).
  std::size_t num_frames(std::size_t length) const;
};

/// One-sided complex spectrogram, row-major (frame, bin).
struct Spectrogram {
  std::vector<std::complex<double>> bins;
  std::size_t num_frames = 0;
  StftConfig config;
  std::size_t original_length = 0;

  std::size_t num_bins() const { return config.num_bins(); }
  std::complex<double>& at(std::size_t frame, std::size_t bin) {
    return bins[frame * num_bins() + bin];
  }
  const std::complex<double>& at(std::size_t frame, std::size_t bin) const {
    return bins[frame * num_bins() + bin];
  }
};

/// Periodic Hann window: w[k] = 0.5 (1 - cos(2 pi k / size)).
std::vector<double> hann_window(std::size_t size);

Spectrogram stft(const Waveform& w, const StftConfig& cfg = {});
Waveform istft(const Spectrogram& spec);

/// ln(max(|bin|, floor)) per bin, row-major (frame, bin).
std::vector<double> log_magnitude(const Spectrogram& spec, double floor = 1e-7);

/// Scales each complex bin by a real gain in [0, 1]; phase is untouched.
Spectrogram apply_mask(const Spectrogram& spec, std::span<const double> mask);

// Low-level kernels shared with the differentiable spectral ops. All operate
// on a single channel; `spec_re`/`spec_im` are (num_frames x num_bins).
namespace kernels {

void stft_forward(std::span<const double> signal, const StftConfig& cfg,
                  std::span<double> spec_re, std::span<double> spec_im);
// Adjoint of stft_forward: accumulates into `signal_grad`.
void stft_adjoint(std::span<const double> grad_re, std::span<const double> grad_im,
                  const StftConfig& cfg, std::span<double> signal_grad);

void istft_forward(std::span<const double> spec_re, std::span<const double> spec_im,
                   const StftConfig& cfg, std::span<double> signal);
// Adjoint of istft_forward: accumulates into the spectral gradients.
void istft_adjoint(std::span<const double> signal_grad, const StftConfig& cfg,
                   std::span<double> grad_re, std::span<double> grad_im);

}  // namespace kernels

}  // namespace mdphd::dsp
