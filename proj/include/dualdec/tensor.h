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

#ifndef DUALDEC_TENSOR_H_
#define DUALDEC_TENSOR_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dualdec/errors.h"

namespace dualdec {

using Index = std::int64_t;
using Shape = std::vector<Index>;

std::string shape_string(const Shape& shape);
Index shape_numel(const Shape& shape);

struct TensorImpl;

// Dense row-major float64 tensor with an optional reverse-mode tape.
//
// Tensor is a handle: copies share storage and autograd history, the same
// way a framework tensor does. Use detach() or clone() for an independent
// value. The tape is rebuilt on every forward pass; ops record a node only
// when gradient mode is enabled and at least one input requires a gradient.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  // Negative axes count from the back.
  Index dim(int axis) const;
  Index numel() const;

  std::span<const double> data() const;
  // Writes through to every handle; never call on a tensor that is part of
  // a live tape.
  std::span<double> mutable_data();
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  // Allocates a zero gradient buffer on first use.
  std::span<double> mutable_grad() const;
  void zero_grad() const;

  // Same values, no history, no gradient requirement.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  TensorImpl* impl() const { return impl_.get(); }

 private:
  friend Tensor make_op_result(const char* op, Shape shape,
                               std::vector<double> data,
                               std::vector<Tensor> inputs,
                               std::function<void(const Tensor& out)> backward);
  std::shared_ptr<TensorImpl> impl_;
};

// Accumulates d(loss)/d(t) into every reachable tensor with requires_grad.
// Gradients add across multiple uses and across repeated calls.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables tape recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Op-author interface. Validates finiteness of `data`, then records a tape
// node if gradients are enabled and any input requires them. The backward
// callback reads out.grad() and accumulates into inputs' mutable_grad().
Tensor make_op_result(const char* op, Shape shape, std::vector<double> data,
                      std::vector<Tensor> inputs,
                      std::function<void(const Tensor& out)> backward);

}  // namespace dualdec

#endif  // DUALDEC_TENSOR_H_
