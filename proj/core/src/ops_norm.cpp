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

Tensor batch_renorm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                    RenormState& state, const RenormOptions& opt) {
  if (input.rank() < 2) throw InvalidArgument("batch_renorm: input must be (B, C, ...)");
  const std::size_t batch = input.dim(0);
  const std::size_t channels = input.dim(1);
  const std::size_t inner = input.numel() / (batch * channels);
  if (gamma.numel() != channels || beta.numel() != channels ||
      state.running_mean.size() != channels || state.running_var.size() != channels) {
    throw InvalidArgument("batch_renorm: parameter/state size does not match " +
                          std::to_string(channels) + " channels");
  }
  if (opt.r_max < 1.0 || opt.d_max < 0.0) {
    throw InvalidArgument("batch_renorm: need r_max >= 1 and d_max >= 0");
  }

  const double count = static_cast<double>(batch * inner);
  const auto x = input.values();
  const auto g = gamma.values();
  const auto b = beta.values();
  auto out = Tensor::zeros(input.shape());
  auto y = out.mutable_values();

  auto channel_ptr = [&](auto* base, std::size_t n, std::size_t c) {
    return base + (n * channels + c) * inner;
  };

  auto running_sigma = [&](std::size_t c) {
    const double v = state.running_var[c] > 0.0 ? state.running_var[c] : 1.0;
    return std::sqrt(v + state.eps);
  };

  if (!opt.training) {
    std::vector<double> inv_sigma(channels), shift(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      inv_sigma[c] = 1.0 / running_sigma(c);
      shift[c] = state.running_mean[c];
    }
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double* xs = channel_ptr(x.data(), n, c);
        double* ys = channel_ptr(y.data(), n, c);
        for (std::size_t i = 0; i < inner; ++i) {
          ys[i] = g[c] * (xs[i] - shift[c]) * inv_sigma[c] + b[c];
        }
      }
    }
    record({input, gamma, beta}, out,
           [input, gamma, beta, inv_sigma, shift, batch, channels,
            inner](std::span<const double> grad) mutable {
             const auto x = input.values();
             std::vector<double> dgamma(channels, 0.0), dbeta(channels, 0.0);
             for (std::size_t n = 0; n < batch; ++n) {
               for (std::size_t c = 0; c < channels; ++c) {
                 const std::size_t base = (n * channels + c) * inner;
                 for (std::size_t i = 0; i < inner; ++i) {
                   dgamma[c] += grad[base + i] * (x[base + i] - shift[c]) * inv_sigma[c];
                   dbeta[c] += grad[base + i];
                 }
               }
             }
             if (input.requires_grad()) {
               auto gx = input.mutable_grad();
               const auto gm = gamma.values();
               for (std::size_t n = 0; n < batch; ++n) {
                 for (std::size_t c = 0; c < channels; ++c) {
                   const std::size_t base = (n * channels + c) * inner;
                   const double k = gm[c] * inv_sigma[c];
                   for (std::size_t i = 0; i < inner; ++i) gx[base + i] += k * grad[base + i];
                 }
               }
             }
             if (gamma.requires_grad()) {
               auto gg = gamma.mutable_grad();
               for (std::size_t c = 0; c < channels; ++c) gg[c] += dgamma[c];
             }
             if (beta.requires_grad()) {
               auto gb = beta.mutable_grad();
               for (std::size_t c = 0; c < channels; ++c) gb[c] += dbeta[c];
             }
           });
    return out;
  }

  std::vector<double> mu(channels, 0.0), var(channels, 0.0), sigma(channels);
  std::vector<double> r(channels), d(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const double* xs = channel_ptr(x.data(), n, c);
      for (std::size_t i = 0; i < inner; ++i) acc += xs[i];
    }
    mu[c] = acc / count;
    double sq = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const double* xs = channel_ptr(x.data(), n, c);
      for (std::size_t i = 0; i < inner; ++i) sq += (xs[i] - mu[c]) * (xs[i] - mu[c]);
    }
    var[c] = sq / count;
    sigma[c] = std::sqrt(var[c] + state.eps);
    const double run_sigma = running_sigma(c);
    r[c] = std::clamp(sigma[c] / run_sigma, 1.0 / opt.r_max, opt.r_max);
    d[c] = std::clamp((mu[c] - state.running_mean[c]) / run_sigma, -opt.d_max, opt.d_max);
  }

  std::vector<double> xhat(input.numel());
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (n * channels + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        xhat[base + i] = (x[base + i] - mu[c]) / sigma[c];
        y[base + i] = g[c] * (xhat[base + i] * r[c] + d[c]) + b[c];
      }
    }
  }

  if (opt.update_stats) {
    for (std::size_t c = 0; c < channels; ++c) {
      state.running_mean[c] += state.momentum * (mu[c] - state.running_mean[c]);
      state.running_var[c] += state.momentum * (var[c] - state.running_var[c]);
    }
  }

  record({input, gamma, beta}, out,
         [input, gamma, beta, xhat = std::move(xhat), sigma, r, d, batch, channels, inner,
          count](std::span<const double> grad) mutable {
           const auto gm = gamma.values();
           std::vector<double> dgamma(channels, 0.0), dbeta(channels, 0.0);
           std::vector<double> mean_gxhat(channels, 0.0), mean_gxhat_xhat(channels, 0.0);
           for (std::size_t n = 0; n < batch; ++n) {
             for (std::size_t c = 0; c < channels; ++c) {
               const std::size_t base = (n * channels + c) * inner;
               for (std::size_t i = 0; i < inner; ++i) {
                 const double gi = grad[base + i];
                 dgamma[c] += gi * (r[c] * xhat[base + i] + d[c]);
                 dbeta[c] += gi;
                 const double gx = gi * gm[c] * r[c];
                 mean_gxhat[c] += gx;
                 mean_gxhat_xhat[c] += gx * xhat[base + i];
               }
             }
           }
           if (input.requires_grad()) {
             for (std::size_t c = 0; c < channels; ++c) {
               mean_gxhat[c] /= count;
               mean_gxhat_xhat[c] /= count;
             }
             auto gin = input.mutable_grad();
             for (std::size_t n = 0; n < batch; ++n) {
               for (std::size_t c = 0; c < channels; ++c) {
                 const std::size_t base = (n * channels + c) * inner;
                 const double k = gm[c] * r[c];
                 for (std::size_t i = 0; i < inner; ++i) {
                   const double gx = grad[base + i] * k;
                   gin[base + i] +=
                       (gx - mean_gxhat[c] - xhat[base + i] * mean_gxhat_xhat[c]) / sigma[c];
                 }
               }
             }
           }
           if (gamma.requires_grad()) {
             auto gg = gamma.mutable_grad();
             for (std::size_t c = 0; c < channels; ++c) gg[c] += dgamma[c];
           }
           if (beta.requires_grad()) {
             auto gb = beta.mutable_grad();
             for (std::size_t c = 0; c < channels; ++c) gb[c] += dbeta[c];
           }
         });
  return out;
}

}  // namespace mdphd::ad
