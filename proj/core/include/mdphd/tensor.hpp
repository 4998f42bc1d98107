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
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mdphd::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
};
}  // namespace detail

/// Shared handle to a dense row-major array of doubles. Copies alias the same
/// storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_vector(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->values.size(); }

  std::span<const double> values() const { return impl_->values; }
  /// Direct write access; changes are not recorded on the tape.
  std::span<double> mutable_values() const { return impl_->values; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) const { impl_->requires_grad = on; }
  bool has_grad() const { return !impl_->grad.empty(); }
  /// Empty span when nothing has been accumulated yet.
  std::span<const double> grad() const { return impl_->grad; }
  /// Allocates a zero gradient buffer on first use.
  std::span<double> mutable_grad() const;
  void zero_grad() const;

  Tensor clone() const;
  Tensor detach() const;  // shares nothing, never requires grad
  bool is_same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

using BackwardFn = std::function<void(std::span<const double> grad_out)>;

/// Ordered record of differentiable operations on the calling thread.
class Tape {
 public:
  static Tape& current();

  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  void push(std::vector<Tensor> inputs, Tensor output, BackwardFn fn);
  /// Reverse sweep from `loss`; each recorded op runs at most once, and only
  /// if its output received gradient. Clears the tape afterwards.
  void backward(const Tensor& loss);

 private:
  struct Entry {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
};

bool grad_enabled();

/// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Records `output = op(inputs)` if recording is on and any input requires
/// grad; marks `output` as requiring grad in that case. `fn` receives dL/d(output)
/// and must accumulate into the inputs via mutable_grad().
void record(std::initializer_list<Tensor> inputs, Tensor& output, BackwardFn fn);
void record(std::vector<Tensor> inputs, Tensor& output, BackwardFn fn);

/// Seeds d(loss)/d(loss) = 1 and runs the current thread's tape backwards.
void backward(const Tensor& loss);

}  // namespace mdphd::ad
