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

#include "mdphd/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "mdphd/errors.hpp"

namespace mdphd::dsp {

void StftConfig::validate() const {
  if (window_size < 2 || window_size % 2 != 0) {
    throw InvalidArgument("stft window_size must be even and >= 2, got " +
                          std::to_string(window_size));
  }
  if (hop_size == 0 || window_size % hop_size != 0) {
    throw InvalidArgument("stft hop_size must divide window_size");
  }
}

std::size_t StftConfig::num_frames(std::size_t length) const {
  return (length + hop_size - 1) / hop_size + 1;
}

std::vector<double> hann_window(std::size_t size) {
  if (size < 2) throw InvalidArgument("hann_window size must be >= 2");
  std::vector<double> w(size);
  const double n = static_cast<double>(size);
  for (std::size_t k = 0; k < size; ++k) {
    w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / n));
  }
  return w;
}

namespace kernels {
namespace {

struct FrameLayout {
  std::size_t frames;
  std::size_t half;  // center padding on the left

  // Signal index for position n of frame t, or -1 when it falls in padding.
  std::ptrdiff_t index(std::size_t t, std::size_t n, std::size_t hop, std::size_t length) const {
    const auto p = static_cast<std::ptrdiff_t>(t * hop + n) - static_cast<std::ptrdiff_t>(half);
    return (p >= 0 && p < static_cast<std::ptrdiff_t>(length)) ? p : -1;
  }
};

FrameLayout layout(std::size_t length, const StftConfig& cfg) {
  return {cfg.num_frames(length), cfg.window_size / 2};
}

void check_sizes(std::size_t length, const StftConfig& cfg, std::size_t re, std::size_t im) {
  cfg.validate();
  if (length == 0) throw InvalidArgument("stft of empty signal");
  const std::size_t expected = cfg.num_frames(length) * cfg.num_bins();
  if (re != expected || im != expected) {
    throw InvalidArgument("spectrogram buffer size mismatch");
  }
}

// Squared-window overlap-add envelope over the padded signal.
std::vector<double> envelope(std::size_t frames, const StftConfig& cfg,
                             const std::vector<double>& window) {
  std::vector<double> env((frames - 1) * cfg.hop_size + cfg.window_size, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n = 0; n < cfg.window_size; ++n) {
      env[t * cfg.hop_size + n] += window[n] * window[n];
    }
  }
  return env;
}

}  // namespace

void stft_forward(std::span<const double> signal, const StftConfig& cfg,
                  std::span<double> spec_re, std::span<double> spec_im) {
  check_sizes(signal.size(), cfg, spec_re.size(), spec_im.size());
  const auto& fft = detail::Fft::of_size(cfg.window_size);
  const auto window = hann_window(cfg.window_size);
  const auto lay = layout(signal.size(), cfg);
  const std::size_t n_fft = cfg.window_size;
  const std::size_t bins = cfg.num_bins();

  std::vector<std::complex<double>> frame(n_fft), out(n_fft);
  for (std::size_t t = 0; t < lay.frames; ++t) {
    for (std::size_t n = 0; n < n_fft; ++n) {
      const auto i = lay.index(t, n, cfg.hop_size, signal.size());
      frame[n] = i >= 0 ? window[n] * signal[static_cast<std::size_t>(i)] : 0.0;
    }
    fft.forward(frame, out);
    for (std::size_t k = 0; k < bins; ++k) {
      spec_re[t * bins + k] = out[k].real();
      spec_im[t * bins + k] = out[k].imag();
    }
  }
}

void stft_adjoint(std::span<const double> grad_re, std::span<const double> grad_im,
                  const StftConfig& cfg, std::span<double> signal_grad) {
  check_sizes(signal_grad.size(), cfg, grad_re.size(), grad_im.size());
  const auto& fft = detail::Fft::of_size(cfg.window_size);
  const auto window = hann_window(cfg.window_size);
  const auto lay = layout(signal_grad.size(), cfg);
  const std::size_t n_fft = cfg.window_size;
  const std::size_t bins = cfg.num_bins();

  std::vector<std::complex<double>> in(n_fft), out(n_fft);
  for (std::size_t t = 0; t < lay.frames; ++t) {
    std::fill(in.begin(), in.end(), std::complex<double>{});
    for (std::size_t k = 0; k < bins; ++k) {
      in[k] = {grad_re[t * bins + k], grad_im[t * bins + k]};
    }
    fft.inverse(in, out);
    for (std::size_t n = 0; n < n_fft; ++n) {
      const auto i = lay.index(t, n, cfg.hop_size, signal_grad.size());
      if (i >= 0) signal_grad[static_cast<std::size_t>(i)] += window[n] * out[n].real();
    }
  }
}

void istft_forward(std::span<const double> spec_re, std::span<const double> spec_im,
                   const StftConfig& cfg, std::span<double> signal) {
  check_sizes(signal.size(), cfg, spec_re.size(), spec_im.size());
  const auto& fft = detail::Fft::of_size(cfg.window_size);
  const auto window = hann_window(cfg.window_size);
  const auto lay = layout(signal.size(), cfg);
  const std::size_t n_fft = cfg.window_size;
  const std::size_t bins = cfg.num_bins();
  const auto env = envelope(lay.frames, cfg, window);
  const double inv_n = 1.0 / static_cast<double>(n_fft);

  std::fill(signal.begin(), signal.end(), 0.0);
  std::vector<std::complex<double>> in(n_fft), out(n_fft);
  for (std::size_t t = 0; t < lay.frames; ++t) {
    const double* re = spec_re.data() + t * bins;
    const double* im = spec_im.data() + t * bins;
    // Hermitian extension; imaginary parts of DC and Nyquist are dropped.
    in[0] = re[0];
    in[n_fft / 2] = re[n_fft / 2];
    for (std::size_t k = 1; k < n_fft / 2; ++k) {
      in[k] = {re[k], im[k]};
      in[n_fft - k] = {re[k], -im[k]};
    }
    fft.inverse(in, out);
    for (std::size_t n = 0; n < n_fft; ++n) {
      const auto i = lay.index(t, n, cfg.hop_size, signal.size());
      if (i >= 0) signal[static_cast<std::size_t>(i)] += window[n] * out[n].real() * inv_n;
    }
  }
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double e = env[i + lay.half];
    if (e < 1e-12) throw NumericError("istft: overlap-add envelope below 1e-12");
    signal[i] /= e;
  }
}

void istft_adjoint(std::span<const double> signal_grad, const StftConfig& cfg,
                   std::span<double> grad_re, std::span<double> grad_im) {
  check_sizes(signal_grad.size(), cfg, grad_re.size(), grad_im.size());
  const auto& fft = detail::Fft::of_size(cfg.window_size);
  const auto window = hann_window(cfg.window_size);
  const auto lay = layout(signal_grad.size(), cfg);
  const std::size_t n_fft = cfg.window_size;
  const std::size_t bins = cfg.num_bins();
  const auto env = envelope(lay.frames, cfg, window);
  const double inv_n = 1.0 / static_cast<double>(n_fft);

  std::vector<double> scaled(signal_grad.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    const double e = env[i + lay.half];
    if (e < 1e-12) throw NumericError("istft: overlap-add envelope below 1e-12");
    scaled[i] = signal_grad[i] / e;
  }

  std::vector<std::complex<double>> in(n_fft), out(n_fft);
  for (std::size_t t = 0; t < lay.frames; ++t) {
    for (std::size_t n = 0; n < n_fft; ++n) {
      const auto i = lay.index(t, n, cfg.hop_size, signal_grad.size());
      in[n] = i >= 0 ? window[n] * scaled[static_cast<std::size_t>(i)] : 0.0;
    }
    fft.forward(in, out);
    double* re = grad_re.data() + t * bins;
    double* im = grad_im.data() + t * bins;
    re[0] += out[0].real() * inv_n;
    re[n_fft / 2] += out[n_fft / 2].real() * inv_n;
    for (std::size_t k = 1; k < n_fft / 2; ++k) {
      re[k] += 2.0 * inv_n * out[k].real();
      im[k] += 2.0 * inv_n * out[k].imag();
    }
  }
}

}  // namespace kernels

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  if (w.empty()) throw InvalidArgument("stft: empty waveform");
  Spectrogram spec;
  spec.config = cfg;
  spec.original_length = w.size();
  spec.num_frames = cfg.num_frames(w.size());
  const std::size_t count = spec.num_frames * cfg.num_bins();
  std::vector<double> re(count), im(count);
  kernels::stft_forward(w.samples, cfg, re, im);
  spec.bins.resize(count);
  for (std::size_t i = 0; i < count; ++i) spec.bins[i] = {re[i], im[i]};
  return spec;
}

Waveform istft(const Spectrogram& spec) {
  spec.config.validate();
  if (spec.original_length == 0 ||
      spec.num_frames != spec.config.num_frames(spec.original_length) ||
      spec.bins.size() != spec.num_frames * spec.num_bins()) {
    throw InvalidArgument("istft: malformed spectrogram");
  }
  std::vector<double> re(spec.bins.size()), im(spec.bins.size());
  for (std::size_t i = 0; i < spec.bins.size(); ++i) {
    re[i] = spec.bins[i].real();
    im[i] = spec.bins[i].imag();
  }
  Waveform out;
  out.samples.resize(spec.original_length);
  kernels::istft_forward(re, im, spec.config, out.samples);
  return out;
}

std::vector<double> log_magnitude(const Spectrogram& spec, double floor) {
  if (!(floor > 0.0)) throw InvalidArgument("log_magnitude floor must be > 0");
  std::vector<double> out(spec.bins.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::log(std::max(std::abs(spec.bins[i]), floor));
  }
  return out;
}

Spectrogram apply_mask(const Spectrogram& spec, std::span<const double> mask) {
  if (mask.size() != spec.bins.size()) {
    throw InvalidArgument("apply_mask: mask has " + std::to_string(mask.size()) +
                          " entries, spectrogram has " + std::to_string(spec.bins.size()));
  }
  Spectrogram out = spec;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (std::isnan(mask[i])) throw NumericError("apply_mask: non-finite mask entry");
    if (!(mask[i] >= 0.0 && mask[i] <= 1.0)) {
      throw ContractViolation("apply_mask: mask entry " + std::to_string(i) +
                              " outside [0, 1]: " + std::to_string(mask[i]));
    }
    out.bins[i] *= mask[i];
  }
  return out;
}

}  // namespace mdphd::dsp
