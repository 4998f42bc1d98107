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

#include <algorithm>
#include <cmath>
#include <string>

#include "mdphd/errors.hpp"
#include "mdphd/ops.hpp"

namespace mdphd::ad {
namespace {

struct SpecDims {
  std::size_t batch, frames, bins;
  std::size_t plane() const { return frames * bins; }
};

SpecDims spec_dims(const Tensor& spec, const char* op) {
  if (spec.rank() != 4 || spec.dim(1) != 2) {
    throw InvalidArgument(std::string(op) + ": expected (B, 2, F, K) spectrogram, got " +
                          to_string(spec.shape()));
  }
  return {spec.dim(0), spec.dim(2), spec.dim(3)};
}

}  // namespace

Tensor stft(const Tensor& signal, const dsp::StftConfig& cfg) {
  if (signal.rank() != 2) throw InvalidArgument("stft: expected (B, T) signal");
  cfg.validate();
  const std::size_t batch = signal.dim(0);
  const std::size_t length = signal.dim(1);
  const SpecDims dims{batch, cfg.num_frames(length), cfg.num_bins()};
  auto out = Tensor::zeros({batch, 2, dims.frames, dims.bins});
  auto o = out.mutable_values();
  for (std::size_t b = 0; b < batch; ++b) {
    dsp::kernels::stft_forward(signal.values().subspan(b * length, length), cfg,
                               o.subspan((2 * b) * dims.plane(), dims.plane()),
                               o.subspan((2 * b + 1) * dims.plane(), dims.plane()));
  }
  record({signal}, out, [signal, cfg, dims, length](std::span<const double> g) mutable {
    auto gs = signal.mutable_grad();
    for (std::size_t b = 0; b < dims.batch; ++b) {
      dsp::kernels::stft_adjoint(g.subspan((2 * b) * dims.plane(), dims.plane()),
                                 g.subspan((2 * b + 1) * dims.plane(), dims.plane()), cfg,
                                 gs.subspan(b * length, length));
    }
  });
  return out;
}

Tensor istft(const Tensor& spec, const dsp::StftConfig& cfg, std::size_t length) {
  const auto dims = spec_dims(spec, "istft");
  cfg.validate();
  if (length == 0 || cfg.num_frames(length) != dims.frames || cfg.num_bins() != dims.bins) {
    throw InvalidArgument("istft: spectrogram " + to_string(spec.shape()) +
                          " does not match output length " + std::to_string(length));
  }
  auto out = Tensor::zeros({dims.batch, length});
  auto o = out.mutable_values();
  const auto v = spec.values();
  for (std::size_t b = 0; b < dims.batch; ++b) {
    dsp::kernels::istft_forward(v.subspan((2 * b) * dims.plane(), dims.plane()),
                                v.subspan((2 * b + 1) * dims.plane(), dims.plane()), cfg,
                                o.subspan(b * length, length));
  }
  record({spec}, out, [spec, cfg, dims, length](std::span<const double> g) mutable {
    auto gs = spec.mutable_grad();
    for (std::size_t b = 0; b < dims.batch; ++b) {
      dsp::kernels::istft_adjoint(g.subspan(b * length, length), cfg,
                                  gs.subspan((2 * b) * dims.plane(), dims.plane()),
                                  gs.subspan((2 * b + 1) * dims.plane(), dims.plane()));
    }
  });
  return out;
}

Tensor magnitude(const Tensor& spec) {
  const auto dims = spec_dims(spec, "magnitude");
  auto out = Tensor::zeros({dims.batch, dims.frames, dims.bins});
  auto o = out.mutable_values();
  const auto v = spec.values();
  const std::size_t plane = dims.plane();
  for (std::size_t b = 0; b < dims.batch; ++b) {
    const double* re = v.data() + 2 * b * plane;
    const double* im = re + plane;
    for (std::size_t i = 0; i < plane; ++i) o[b * plane + i] = std::hypot(re[i], im[i]);
  }
  record({spec}, out, [spec, out, dims](std::span<const double> g) mutable {
    auto gs = spec.mutable_grad();
    const auto v = spec.values();
    const auto mag = out.values();
    const std::size_t plane = dims.plane();
    for (std::size_t b = 0; b < dims.batch; ++b) {
      const double* re = v.data() + 2 * b * plane;
      const double* im = re + plane;
      double* gre = gs.data() + 2 * b * plane;
      double* gim = gre + plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double m = mag[b * plane + i];
        if (m == 0.0) continue;
        const double k = g[b * plane + i] / m;
        gre[i] += k * re[i];
        gim[i] += k * im[i];
      }
    }
  });
  return out;
}

Tensor log_floor(const Tensor& a, double floor) {
  if (!(floor > 0.0)) throw InvalidArgument("log_floor: floor must be > 0");
  auto out = Tensor::zeros(a.shape());
  auto o = out.mutable_values();
  const auto v = a.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::log(std::max(v[i], floor));
  record({a}, out, [a, floor](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    const auto v = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v[i] > floor) ga[i] += g[i] / v[i];
    }
  });
  return out;
}

Tensor apply_mask(const Tensor& spec, const Tensor& mask) {
  const auto dims = spec_dims(spec, "apply_mask");
  if (mask.shape() != Shape{dims.batch, dims.frames, dims.bins}) {
    throw InvalidArgument("apply_mask: mask shape " + to_string(mask.shape()) +
                          " does not match spectrogram " + to_string(spec.shape()));
  }
  const auto m = mask.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (std::isnan(m[i])) throw NumericError("apply_mask: non-finite mask entry");
    if (!(m[i] >= 0.0 && m[i] <= 1.0)) {
      throw ContractViolation("apply_mask: mask entry outside [0, 1]: " + std::to_string(m[i]));
    }
  }
  auto out = Tensor::zeros(spec.shape());
  auto o = out.mutable_values();
  const auto v = spec.values();
  const std::size_t plane = dims.plane();
  for (std::size_t b = 0; b < dims.batch; ++b) {
    for (std::size_t part = 0; part < 2; ++part) {
      const std::size_t base = (2 * b + part) * plane;
      for (std::size_t i = 0; i < plane; ++i) o[base + i] = m[b * plane + i] * v[base + i];
    }
  }
  record({spec, mask}, out, [spec, mask, dims](std::span<const double> g) mutable {
    const std::size_t plane = dims.plane();
    const auto m = mask.values();
    const auto v = spec.values();
    if (spec.requires_grad()) {
      auto gs = spec.mutable_grad();
      for (std::size_t b = 0; b < dims.batch; ++b) {
        for (std::size_t part = 0; part < 2; ++part) {
          const std::size_t base = (2 * b + part) * plane;
          for (std::size_t i = 0; i < plane; ++i) gs[base + i] += m[b * plane + i] * g[base + i];
        }
      }
    }
    if (mask.requires_grad()) {
      auto gm = mask.mutable_grad();
      for (std::size_t b = 0; b < dims.batch; ++b) {
        const std::size_t re = 2 * b * plane;
        const std::size_t im = re + plane;
        for (std::size_t i = 0; i < plane; ++i) {
          gm[b * plane + i] += g[re + i] * v[re + i] + g[im + i] * v[im + i];
        }
      }
    }
  });
  return out;
}

}  // namespace mdphd::ad
