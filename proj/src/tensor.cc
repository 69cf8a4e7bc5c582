// Copyright 2026 The dualdec Authors. All Rights Reserved.
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

#include "dualdec/tensor.h"

#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace dualdec {

struct TapeNode {
  std::vector<Tensor> inputs;
  std::function<void(const Tensor& out)> backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::shared_ptr<TapeNode> node;
};

namespace {

thread_local bool g_grad_enabled = true;

TensorImpl& checked(const std::shared_ptr<TensorImpl>& impl) {
  if (!impl) throw std::logic_error("use of undefined tensor");
  return *impl;
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d < 0) throw DimensionError("negative dimension in " + shape_string(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
  if (shape_numel(shape) != static_cast<Index>(data.size())) {
    throw DimensionError("tensor shape " + shape_string(shape) + " holds " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(data.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const Index n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return checked(impl_).shape; }

Index Tensor::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_string(shape()));
  }
  return shape()[a];
}

Index Tensor::numel() const {
  return static_cast<Index>(checked(impl_).data.size());
}

std::span<const double> Tensor::data() const { return checked(impl_).data; }
std::span<double> Tensor::mutable_data() { return checked(impl_).data; }

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on non-scalar tensor " + shape_string(shape()));
  }
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return checked(impl_).requires_grad; }
void Tensor::set_requires_grad(bool value) { checked(impl_).requires_grad = value; }
bool Tensor::has_grad() const { return !checked(impl_).grad.empty(); }
std::span<const double> Tensor::grad() const { return checked(impl_).grad; }

std::span<double> Tensor::mutable_grad() const {
  auto& impl = checked(impl_);
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), 0.0);
  return impl.grad;
}

void Tensor::zero_grad() const { checked(impl_).grad.clear(); }

Tensor Tensor::detach() const {
  const auto& impl = checked(impl_);
  return Tensor(impl.shape, impl.data, false);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_op_result(const char* op, Shape shape, std::vector<double> data,
                      std::vector<Tensor> inputs,
                      std::function<void(const Tensor& out)> backward) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string("non-finite value produced by ") + op);
    }
  }
  Tensor out(std::move(shape), std::move(data));
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& t : inputs) any = any || (t.defined() && t.requires_grad());
  if (!any) return out;
  out.impl_->requires_grad = true;
  auto node = std::make_shared<TapeNode>();
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  out.impl_->node = std::move(node);
  return out;
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw DimensionError("backward() needs a scalar loss, got " +
                         shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; reversed, it is a valid topological order.
  std::vector<Tensor> order;
  std::unordered_set<const TensorImpl*> visited;
  std::vector<std::pair<Tensor, std::size_t>> stack;
  stack.emplace_back(loss, 0);
  visited.insert(loss.impl());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const auto& node = t.impl()->node;
    if (node && next < node->inputs.size()) {
      const Tensor child = node->inputs[next++];
      if (child.defined() && child.requires_grad() &&
          visited.insert(child.impl()).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }

  // Interior gradients are per-call; only leaves accumulate across calls.
  for (auto& t : order) {
    if (t.impl()->node) t.zero_grad();
  }
  Tensor root = loss;
  root.mutable_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& node = it->impl()->node;
    if (!node || !it->has_grad()) continue;
    node->backward(*it);
  }
}

}  // namespace dualdec
