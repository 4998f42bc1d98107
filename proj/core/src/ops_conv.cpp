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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mdphd/errors.hpp"
#include "mdphd/ops.hpp"

namespace mdphd::ad {
namespace {

using Index = std::ptrdiff_t;

// Output positions t in [lo, hi) for which t * stride + offset lands inside
// [0, in_len).
struct Range {
  std::size_t lo;
  std::size_t hi;
};

Range valid_range(Index offset, std::size_t stride, std::size_t in_len, std::size_t out_len) {
  const Index s = static_cast<Index>(stride);
  const Index n = static_cast<Index>(in_len);
  Index lo = offset >= 0 ? 0 : (-offset + s - 1) / s;
  Index hi = n - offset <= 0 ? 0 : (n - offset + s - 1) / s;
  lo = std::min<Index>(lo, static_cast<Index>(out_len));
  hi = std::clamp<Index>(hi, lo, static_cast<Index>(out_len));
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// ---- kernels ---------------------------------------------------------------

// A 2d convolution with stride and dilation; 1d convolutions use h = 1.
struct Geometry {
  std::size_t batch, c_in, h_in, w_in, c_out, h_out, w_out, kh, kw;
  std::size_t sh = 1, sw = 1, dh = 1, dw = 1, pad_top = 0, pad_left = 0;

  std::size_t rows() const { return c_in * kh * kw; }         // im2col rows
  std::size_t positions() const { return h_out * w_out; }     // im2col columns
  std::size_t in_plane() const { return c_in * h_in * w_in; }
  std::size_t out_plane() const { return c_out * h_out * w_out; }
};

Geometry geometry1d(std::size_t batch, std::size_t c_in, std::size_t len_in, std::size_t c_out,
                    std::size_t len_out, std::size_t k, const Conv1dOptions& opt) {
  Geometry g{batch, c_in, 1, len_in, c_out, 1, len_out, 1, k};
  g.sw = opt.stride;
  g.dw = opt.dilation;
  g.pad_left = opt.pad_left;
  return g;
}

Geometry geometry2d(std::size_t batch, std::size_t c_in, std::size_t h_in, std::size_t w_in,
                    std::size_t c_out, std::size_t h_out, std::size_t w_out, std::size_t kh,
                    std::size_t kw, const Conv2dOptions& opt) {
  Geometry g{batch, c_in, h_in, w_in, c_out, h_out, w_out, kh, kw};
  g.sh = opt.stride[0];
  g.sw = opt.stride[1];
  g.pad_top = opt.pad_top;
  g.pad_left = opt.pad_left;
  return g;
}

// Calls fn(row, oh, ih, cols, col_offset) for every im2col row segment that
// reads real (unpadded) input.
template <typename Fn>
void for_each_patch_row(const Geometry& g, Fn&& fn) {
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      const Index row_off = static_cast<Index>(i * g.dh) - static_cast<Index>(g.pad_top);
      const auto rows = valid_range(row_off, g.sh, g.h_in, g.h_out);
      for (std::size_t j = 0; j < g.kw; ++j) {
        const std::size_t r = (ci * g.kh + i) * g.kw + j;
        const Index col_off = static_cast<Index>(j * g.dw) - static_cast<Index>(g.pad_left);
        const auto cols = valid_range(col_off, g.sw, g.w_in, g.w_out);
        if (cols.hi <= cols.lo) continue;
        for (std::size_t oh = rows.lo; oh < rows.hi; ++oh) {
          const auto ih = static_cast<std::size_t>(static_cast<Index>(oh * g.sh) + row_off);
          fn(r, ci, oh, ih, cols, col_off);
        }
      }
    }
  }
}

// cols (rows x positions) <- patches of one batch item.
void im2col(const Geometry& g, const double* x, double* cols) {
  std::fill_n(cols, g.rows() * g.positions(), 0.0);
  for_each_patch_row(g, [&](std::size_t r, std::size_t ci, std::size_t oh, std::size_t ih,
                            Range c, Index off) {
    const double* src = x + (ci * g.h_in + ih) * g.w_in;
    double* dst = cols + r * g.positions() + oh * g.w_out;
    if (g.sw == 1) {
      std::copy_n(src + (static_cast<Index>(c.lo) + off), c.hi - c.lo, dst + c.lo);
    } else {
      for (std::size_t t = c.lo; t < c.hi; ++t) dst[t] = src[static_cast<Index>(t * g.sw) + off];
    }
  });
}

// x += scatter of cols; the adjoint of im2col.
void col2im_add(const Geometry& g, const double* cols, double* x) {
  for_each_patch_row(g, [&](std::size_t r, std::size_t ci, std::size_t oh, std::size_t ih,
                            Range c, Index off) {
    double* dst = x + (ci * g.h_in + ih) * g.w_in;
    const double* src = cols + r * g.positions() + oh * g.w_out;
    if (g.sw == 1) {
      double* d = dst + (static_cast<Index>(c.lo) + off);
      for (std::size_t t = 0; t < c.hi - c.lo; ++t) d[t] += src[c.lo + t];
    } else {
      for (std::size_t t = c.lo; t < c.hi; ++t) dst[static_cast<Index>(t * g.sw) + off] += src[t];
    }
  });
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor, 0, Eigen::OuterStride<>>;
using MutMap = Eigen::Map<RowMajor, 0, Eigen::OuterStride<>>;

// Row-major C(m x n) = op(A) * op(B) + beta * C, with beta 0 or 1.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc) {
  const auto im = static_cast<Eigen::Index>(m);
  const auto in = static_cast<Eigen::Index>(n);
  const auto ik = static_cast<Eigen::Index>(k);
  const ConstMap A(a, trans_a ? ik : im, trans_a ? im : ik,
                   Eigen::OuterStride<>(static_cast<Eigen::Index>(lda)));
  const ConstMap B(b, trans_b ? in : ik, trans_b ? ik : in,
                   Eigen::OuterStride<>(static_cast<Eigen::Index>(ldb)));
  MutMap C(c, im, in, Eigen::OuterStride<>(static_cast<Eigen::Index>(ldc)));
  if (beta == 0.0) C.setZero();
  if (trans_a && trans_b) {
    C.noalias() += A.transpose() * B.transpose();
  } else if (trans_a) {
    C.noalias() += A.transpose() * B;
  } else if (trans_b) {
    C.noalias() += A * B.transpose();
  } else {
    C.noalias() += A * B;
  }
}

// out(B, Cout, ...) += conv(in(B, Cin, ...), w)
void conv_forward_kernel(const Geometry& g, const double* in, const double* w, double* out) {
  std::vector<double> cols(g.rows() * g.positions());
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2col(g, in + b * g.in_plane(), cols.data());
    gemm(false, false, g.c_out, g.positions(), g.rows(), w, g.rows(), cols.data(), g.positions(),
         1.0, out + b * g.out_plane(), g.positions());
  }
}

// in_grad(B, Cin, ...) += conv^T(out_grad(B, Cout, ...), w)
void conv_adjoint_kernel(const Geometry& g, const double* out_grad, const double* w,
                         double* in_grad) {
  std::vector<double> cols(g.rows() * g.positions());
  for (std::size_t b = 0; b < g.batch; ++b) {
    gemm(true, false, g.rows(), g.positions(), g.c_out, w, g.rows(), out_grad + b * g.out_plane(),
         g.positions(), 0.0, cols.data(), g.positions());
    col2im_add(g, cols.data(), in_grad + b * g.in_plane());
  }
}

// w_grad(Cout, Cin, ...) += sum over the batch of out_grad * patches(in)
void conv_weight_kernel(const Geometry& g, const double* out_grad, const double* in,
                        double* w_grad) {
  std::vector<double> cols(g.rows() * g.positions());
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2col(g, in + b * g.in_plane(), cols.data());
    gemm(false, true, g.c_out, g.rows(), g.positions(), out_grad + b * g.out_plane(),
         g.positions(), cols.data(), g.positions(), 1.0, w_grad, g.rows());
  }
}

void check_conv1d_kernel(const Tensor& kernel, std::size_t c_in, const char* op) {
  if (kernel.rank() != 3 || kernel.dim(1) != c_in || kernel.dim(2) == 0) {
    throw InvalidArgument(std::string(op) + ": kernel shape " + to_string(kernel.shape()) +
                          " incompatible with " + std::to_string(c_in) + " input channels");
  }
}

void check_options(const Conv1dOptions& opt) {
  if (opt.stride == 0 || opt.dilation == 0) {
    throw InvalidArgument("conv1d: stride and dilation must be >= 1");
  }
}

void check_conv2d_kernel(const Tensor& kernel, std::size_t c_in, const char* op) {
  if (kernel.rank() != 4 || kernel.dim(1) != c_in || kernel.dim(2) == 0 || kernel.dim(3) == 0) {
    throw InvalidArgument(std::string(op) + ": kernel shape " + to_string(kernel.shape()) +
                          " incompatible with " + std::to_string(c_in) + " input channels");
  }
}

void check_options(const Conv2dOptions& opt) {
  if (opt.stride[0] == 0 || opt.stride[1] == 0) {
    throw InvalidArgument("conv2d: strides must be >= 1");
  }
}

std::size_t output_extent(std::size_t len, std::size_t pad_lo, std::size_t pad_hi,
                          std::size_t span, std::size_t stride) {
  const std::size_t padded = len + pad_lo + pad_hi;
  if (span > padded) {
    throw InvalidArgument("convolution kernel span " + std::to_string(span) +
                          " exceeds padded input " + std::to_string(padded));
  }
  return (padded - span) / stride + 1;
}

std::pair<std::size_t, std::size_t> same_padding(std::size_t len, std::size_t span,
                                                 std::size_t stride) {
  const std::size_t out = (len + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + span;
  const std::size_t total = needed > len ? needed - len : 0;
  return {total / 2, total - total / 2};
}

}  // namespace

// ---- 1d ---------------------------------------------------------------------

Conv1dOptions conv1d_options(Padding padding, std::size_t length, std::size_t kernel,
                             std::size_t stride, std::size_t dilation) {
  Conv1dOptions opt{stride, dilation, 0, 0};
  check_options(opt);
  if (padding == Padding::kSame) {
    std::tie(opt.pad_left, opt.pad_right) = same_padding(length, dilation * (kernel - 1) + 1, stride);
  }
  return opt;
}

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dOptions& opt) {
  check_options(opt);
  return output_extent(length, opt.pad_left, opt.pad_right, opt.dilation * (kernel - 1) + 1,
                       opt.stride);
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Conv1dOptions& opt) {
  if (input.rank() != 3) throw InvalidArgument("conv1d: input must be (B, C, T)");
  check_conv1d_kernel(kernel, input.dim(1), "conv1d");
  const std::size_t len_out = conv1d_output_length(input.dim(2), kernel.dim(2), opt);
  const auto g = geometry1d(input.dim(0), input.dim(1), input.dim(2), kernel.dim(0), len_out,
                            kernel.dim(2), opt);

  auto out = Tensor::zeros({g.batch, g.c_out, len_out});
  conv_forward_kernel(g, input.values().data(), kernel.values().data(),
                        out.mutable_values().data());
  record({input, kernel}, out, [input, kernel, g](std::span<const double> grad) mutable {
    if (input.requires_grad()) {
      conv_adjoint_kernel(g, grad.data(), kernel.values().data(), input.mutable_grad().data());
    }
    if (kernel.requires_grad()) {
      conv_weight_kernel(g, grad.data(), input.values().data(), kernel.mutable_grad().data());
    }
  });
  return out;
}

Tensor conv1d_dilated(const Tensor& input, const Tensor& kernel, std::size_t dilation) {
  if (kernel.rank() != 3 || kernel.dim(2) % 2 == 0) {
    throw InvalidArgument("conv1d_dilated: kernel size must be odd");
  }
  if (dilation == 0) throw InvalidArgument("conv1d_dilated: dilation must be >= 1");
  const std::size_t half = (kernel.dim(2) - 1) / 2 * dilation;
  return conv1d(input, kernel, Conv1dOptions{1, dilation, half, half});
}

Tensor conv_transpose1d(const Tensor& input, const Tensor& kernel, const Conv1dOptions& opt,
                        std::size_t output_length) {
  if (input.rank() != 3) throw InvalidArgument("conv_transpose1d: input must be (B, C, T)");
  if (kernel.rank() != 3 || kernel.dim(0) != input.dim(1)) {
    throw InvalidArgument("conv_transpose1d: kernel shape " + to_string(kernel.shape()) +
                          " incompatible with input " + to_string(input.shape()));
  }
  if (conv1d_output_length(output_length, kernel.dim(2), opt) != input.dim(2)) {
    throw InvalidArgument("conv_transpose1d: output length " + std::to_string(output_length) +
                          " is not an adjoint size for input length " + std::to_string(input.dim(2)));
  }
  const auto g = geometry1d(input.dim(0), kernel.dim(1), output_length, kernel.dim(0),
                            input.dim(2), kernel.dim(2), opt);
  auto out = Tensor::zeros({g.batch, g.c_in, output_length});
  conv_adjoint_kernel(g, input.values().data(), kernel.values().data(),
                        out.mutable_values().data());
  record({input, kernel}, out, [input, kernel, g](std::span<const double> grad) mutable {
    if (input.requires_grad()) {
      conv_forward_kernel(g, grad.data(), kernel.values().data(), input.mutable_grad().data());
    }
    if (kernel.requires_grad()) {
      conv_weight_kernel(g, input.values().data(), grad.data(), kernel.mutable_grad().data());
    }
  });
  return out;
}

// ---- 2d ---------------------------------------------------------------------

Conv2dOptions conv2d_options(Padding padding, std::array<std::size_t, 2> size,
                             std::array<std::size_t, 2> kernel,
                             std::array<std::size_t, 2> stride) {
  Conv2dOptions opt;
  opt.stride = stride;
  check_options(opt);
  if (padding == Padding::kSame) {
    std::tie(opt.pad_top, opt.pad_bottom) = same_padding(size[0], kernel[0], stride[0]);
    std::tie(opt.pad_left, opt.pad_right) = same_padding(size[1], kernel[1], stride[1]);
  }
  return opt;
}

std::array<std::size_t, 2> conv2d_output_size(std::array<std::size_t, 2> size,
                                              std::array<std::size_t, 2> kernel,
                                              const Conv2dOptions& opt) {
  check_options(opt);
  return {output_extent(size[0], opt.pad_top, opt.pad_bottom, kernel[0], opt.stride[0]),
          output_extent(size[1], opt.pad_left, opt.pad_right, kernel[1], opt.stride[1])};
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Conv2dOptions& opt) {
  if (input.rank() != 4) throw InvalidArgument("conv2d: input must be (B, C, H, W)");
  check_conv2d_kernel(kernel, input.dim(1), "conv2d");
  const auto out_size =
      conv2d_output_size({input.dim(2), input.dim(3)}, {kernel.dim(2), kernel.dim(3)}, opt);
  const auto g = geometry2d(input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                            kernel.dim(0), out_size[0], out_size[1], kernel.dim(2),
                            kernel.dim(3), opt);

  auto out = Tensor::zeros({g.batch, g.c_out, g.h_out, g.w_out});
  conv_forward_kernel(g, input.values().data(), kernel.values().data(),
                        out.mutable_values().data());
  record({input, kernel}, out, [input, kernel, g](std::span<const double> grad) mutable {
    if (input.requires_grad()) {
      conv_adjoint_kernel(g, grad.data(), kernel.values().data(), input.mutable_grad().data());
    }
    if (kernel.requires_grad()) {
      conv_weight_kernel(g, grad.data(), input.values().data(), kernel.mutable_grad().data());
    }
  });
  return out;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, const Conv2dOptions& opt,
                        std::array<std::size_t, 2> output_size) {
  if (input.rank() != 4) throw InvalidArgument("conv_transpose2d: input must be (B, C, H, W)");
  if (kernel.rank() != 4 || kernel.dim(0) != input.dim(1)) {
    throw InvalidArgument("conv_transpose2d: kernel shape " + to_string(kernel.shape()) +
                          " incompatible with input " + to_string(input.shape()));
  }
  const auto g = geometry2d(input.dim(0), kernel.dim(1), output_size[0], output_size[1],
                            kernel.dim(0), input.dim(2), input.dim(3), kernel.dim(2),
                            kernel.dim(3), opt);
  const auto check = conv2d_output_size(output_size, {g.kh, g.kw}, opt);
  if (check[0] != g.h_out || check[1] != g.w_out) {
    throw InvalidArgument("conv_transpose2d: output size (" + std::to_string(output_size[0]) +
                          ", " + std::to_string(output_size[1]) +
                          ") is not an adjoint size for input " + to_string(input.shape()));
  }
  auto out = Tensor::zeros({g.batch, g.c_in, g.h_in, g.w_in});
  conv_adjoint_kernel(g, input.values().data(), kernel.values().data(),
                        out.mutable_values().data());
  record({input, kernel}, out, [input, kernel, g](std::span<const double> grad) mutable {
    if (input.requires_grad()) {
      conv_forward_kernel(g, grad.data(), kernel.values().data(), input.mutable_grad().data());
    }
    if (kernel.requires_grad()) {
      conv_weight_kernel(g, input.values().data(), grad.data(), kernel.mutable_grad().data());
    }
  });
  return out;
}

Tensor add_channel_bias(const Tensor& input, const Tensor& bias) {
  if (input.rank() < 2 || bias.rank() != 1 || bias.dim(0) != input.dim(1)) {
    throw InvalidArgument("add_channel_bias: bias " + to_string(bias.shape()) +
                          " does not match input " + to_string(input.shape()));
  }
  const std::size_t batch = input.dim(0);
  const std::size_t channels = input.dim(1);
  const std::size_t inner = input.numel() / (batch * channels);
  auto out = Tensor::from_vector(input.shape(), std::vector<double>(input.values().begin(),
                                                                    input.values().end()));
  auto o = out.mutable_values();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      double* p = o.data() + (b * channels + c) * inner;
      const double v = bias.values()[c];
      for (std::size_t i = 0; i < inner; ++i) p[i] += v;
    }
  }
  record({input, bias}, out,
         [input, bias, batch, channels, inner](std::span<const double> g) mutable {
           if (input.requires_grad()) {
             auto gi = input.mutable_grad();
             for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
           }
           if (bias.requires_grad()) {
             auto gb = bias.mutable_grad();
             for (std::size_t b = 0; b < batch; ++b) {
               for (std::size_t c = 0; c < channels; ++c) {
                 const double* p = g.data() + (b * channels + c) * inner;
                 double acc = 0.0;
                 for (std::size_t i = 0; i < inner; ++i) acc += p[i];
                 gb[c] += acc;
               }
             }
           }
         });
  return out;
}

}  // namespace mdphd::ad
