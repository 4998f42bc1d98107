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

#include "mdphd/errors.hpp"
#include "mdphd/ops.hpp"

namespace mdphd::ad {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                          " vs " + to_string(b.shape()));
  }
}

std::size_t batch_of(const Tensor& a, const char* op) {
  if (a.rank() < 2) throw InvalidArgument(std::string(op) + ": expected (B, ...) tensor");
  return a.dim(0);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto out = Tensor::zeros(a.shape());
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a.values()[i] + b.values()[i];
  record({a, b}, out, [a, b](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto out = Tensor::zeros(a.shape());
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a.values()[i] - b.values()[i];
  record({a, b}, out, [a, b](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto out = Tensor::zeros(a.shape());
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a.values()[i] * b.values()[i];
  record({a, b}, out, [a, b](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.values()[i];
    }
    if (b.requires_grad()) {
      auto gb = b.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.values()[i];
    }
  });
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  auto out = Tensor::zeros(a.shape());
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = factor * a.values()[i];
  record({a}, out, [a, factor](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
  return out;
}

Tensor leaky_relu(const Tensor& a, double slope) {
  auto out = Tensor::zeros(a.shape());
  auto o = out.mutable_values();
  const auto v = a.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = v[i] > 0.0 ? v[i] : slope * v[i];
  record({a}, out, [a, slope](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    const auto v = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += v[i] > 0.0 ? g[i] : slope * g[i];
  });
  return out;
}

Tensor sigmoid(const Tensor& a) {
  auto out = Tensor::zeros(a.shape());
  auto o = out.mutable_values();
  const auto v = a.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    // Split by sign so exp never overflows.
    if (v[i] >= 0.0) {
      o[i] = 1.0 / (1.0 + std::exp(-v[i]));
    } else {
      const double e = std::exp(v[i]);
      o[i] = e / (1.0 + e);
    }
  }
  record({a}, out, [a, out](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    const auto y = out.values();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
  return out;
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  auto out = Tensor::scalar(total);
  record({a}, out, [a](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    for (double& x : ga) x += g[0];
  });
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw InvalidArgument("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor l1_norm(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += std::abs(v);
  auto out = Tensor::scalar(total);
  record({a}, out, [a](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    const auto v = a.values();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (v[i] > 0.0) {
        ga[i] += g[0];
      } else if (v[i] < 0.0) {
        ga[i] -= g[0];
      }
    }
  });
  return out;
}

Tensor row_l1_norm(const Tensor& a) {
  const std::size_t rows = batch_of(a, "row_l1_norm");
  const std::size_t cols = a.numel() / std::max<std::size_t>(rows, 1);
  auto out = Tensor::zeros({rows});
  auto o = out.mutable_values();
  const auto v = a.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) o[r] += std::abs(v[r * cols + c]);
  }
  record({a}, out, [a, rows, cols](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    const auto v = a.values();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = v[r * cols + c];
        if (x > 0.0) {
          ga[r * cols + c] += g[r];
        } else if (x < 0.0) {
          ga[r * cols + c] -= g[r];
        }
      }
    }
  });
  return out;
}

Tensor row_sum_squares(const Tensor& a) {
  const std::size_t rows = batch_of(a, "row_sum_squares");
  const std::size_t cols = a.numel() / std::max<std::size_t>(rows, 1);
  auto out = Tensor::zeros({rows});
  auto o = out.mutable_values();
  const auto v = a.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) o[r] += v[r * cols + c] * v[r * cols + c];
  }
  record({a}, out, [a, rows, cols](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    const auto v = a.values();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += 2.0 * g[r] * v[r * cols + c];
    }
  });
  return out;
}

Tensor row_l2_norm(const Tensor& a) {
  const std::size_t rows = batch_of(a, "row_l2_norm");
  const std::size_t cols = a.numel() / std::max<std::size_t>(rows, 1);
  auto out = Tensor::zeros({rows});
  auto o = out.mutable_values();
  const auto v = a.values();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += v[r * cols + c] * v[r * cols + c];
    o[r] = std::sqrt(acc);
  }
  record({a}, out, [a, out, rows, cols](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    const auto v = a.values();
    const auto norms = out.values();
    for (std::size_t r = 0; r < rows; ++r) {
      if (norms[r] == 0.0) continue;
      const double k = g[r] / norms[r];
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += k * v[r * cols + c];
    }
  });
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw InvalidArgument("reshape " + to_string(a.shape()) + " -> " + to_string(shape));
  }
  auto out = Tensor::from_vector(std::move(shape), std::vector<double>(a.values().begin(),
                                                                       a.values().end()));
  record({a}, out, [a](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || a.rank() != b.rank() || a.dim(0) != b.dim(0) ||
      !std::equal(a.shape().begin() + 2, a.shape().end(), b.shape().begin() + 2)) {
    throw InvalidArgument("concat_channels: incompatible shapes " + to_string(a.shape()) +
                          " and " + to_string(b.shape()));
  }
  const std::size_t batch = a.dim(0);
  const std::size_t inner = a.numel() / (batch * a.dim(1));
  const std::size_t a_block = a.dim(1) * inner;
  const std::size_t b_block = b.dim(1) * inner;
  Shape shape = a.shape();
  shape[1] += b.dim(1);
  auto out = Tensor::zeros(shape);
  auto o = out.mutable_values();
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy_n(a.values().begin() + n * a_block, a_block, o.begin() + n * (a_block + b_block));
    std::copy_n(b.values().begin() + n * b_block, b_block,
                o.begin() + n * (a_block + b_block) + a_block);
  }
  record({a, b}, out, [a, b, batch, a_block, b_block](std::span<const double> g) mutable {
    for (std::size_t n = 0; n < batch; ++n) {
      const double* src = g.data() + n * (a_block + b_block);
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < a_block; ++i) ga[n * a_block + i] += src[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < b_block; ++i) gb[n * b_block + i] += src[a_block + i];
      }
    }
  });
  return out;
}

namespace {

// Copies the overlapping (rows x cols) top-left block between two stacks of
// matrices that differ only in their two trailing extents.
void copy_block(std::span<const double> src, std::size_t src_h, std::size_t src_w,
                std::span<double> dst, std::size_t dst_h, std::size_t dst_w,
                std::size_t planes, bool accumulate) {
  const std::size_t rows = std::min(src_h, dst_h);
  const std::size_t cols = std::min(src_w, dst_w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double* s = src.data() + (p * src_h + r) * src_w;
      double* d = dst.data() + (p * dst_h + r) * dst_w;
      if (accumulate) {
        for (std::size_t c = 0; c < cols; ++c) d[c] += s[c];
      } else {
        std::copy_n(s, cols, d);
      }
    }
  }
}

Tensor resize_trailing2d(const Tensor& a, std::size_t height, std::size_t width) {
  if (a.rank() < 2) throw InvalidArgument("trailing 2d resize needs rank >= 2");
  const std::size_t h = a.dim(a.rank() - 2);
  const std::size_t w = a.dim(a.rank() - 1);
  const std::size_t planes = a.numel() / (h * w);
  Shape shape = a.shape();
  shape[shape.size() - 2] = height;
  shape[shape.size() - 1] = width;
  auto out = Tensor::zeros(shape);
  copy_block(a.values(), h, w, out.mutable_values(), height, width, planes, false);
  record({a}, out, [a, h, w, height, width, planes](std::span<const double> g) mutable {
    copy_block(g, height, width, a.mutable_grad(), h, w, planes, true);
  });
  return out;
}

}  // namespace

Tensor pad_trailing2d(const Tensor& a, std::size_t height, std::size_t width) {
  if (a.rank() < 2 || height < a.dim(a.rank() - 2) || width < a.dim(a.rank() - 1)) {
    throw InvalidArgument("pad_trailing2d: target smaller than input " + to_string(a.shape()));
  }
  return resize_trailing2d(a, height, width);
}

Tensor crop_trailing2d(const Tensor& a, std::size_t height, std::size_t width) {
  if (a.rank() < 2 || height > a.dim(a.rank() - 2) || width > a.dim(a.rank() - 1)) {
    throw InvalidArgument("crop_trailing2d: target larger than input " + to_string(a.shape()));
  }
  return resize_trailing2d(a, height, width);
}

}  // namespace mdphd::ad
