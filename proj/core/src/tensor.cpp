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

#include "mdphd/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "mdphd/errors.hpp"

namespace mdphd::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->values.assign(ad::numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values, bool requires_grad) {
  if (ad::numel(shape) != values.size()) {
    throw InvalidArgument("tensor shape " + to_string(shape) + " does not match " +
                          std::to_string(values.size()) + " values");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_vector({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw InvalidArgument("item() on tensor of shape " + to_string(shape()));
  return impl_->values[0];
}

std::span<double> Tensor::mutable_grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() const {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<detail::TensorImpl>(*impl_);
  return Tensor(std::move(impl));
}

Tensor Tensor::detach() const {
  return from_vector(shape(), impl_->values, false);
}

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

void Tape::push(std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
  entries_.push_back({std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw InvalidArgument("backward() needs a scalar loss");
  }
  if (entries_.empty()) throw InvalidArgument("backward() on an empty tape");
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;

  // Entries are appended in execution order, so reverse order is a valid
  // topological order for the reverse sweep.
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->fn(it->output.grad());
  }
  entries_.clear();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void record(std::vector<Tensor> inputs, Tensor& output, BackwardFn fn) {
  if (!g_grad_enabled) return;
  const bool needed = std::any_of(inputs.begin(), inputs.end(),
                                  [](const Tensor& t) { return t.requires_grad(); });
  if (!needed) return;
  output.set_requires_grad(true);
  Tape::current().push(std::move(inputs), output, std::move(fn));
}

void record(std::initializer_list<Tensor> inputs, Tensor& output, BackwardFn fn) {
  record(std::vector<Tensor>(inputs), output, std::move(fn));
}

void backward(const Tensor& loss) { Tape::current().backward(loss); }

}  // namespace mdphd::ad
