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

#include "dualdec/optim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dualdec {

void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads,
               AdamState& state) {
  if (grads.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(grads.size()) +
                         " gradients for " + std::to_string(params.size()) + " parameters");
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.numel(), 0.0);
      state.second_moment.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto n = static_cast<std::size_t>(params[p].numel());
    if (state.first_moment[p].size() != n || state.second_moment[p].size() != n ||
        (!grads[p].empty() && grads[p].size() != n)) {
      throw DimensionError("adam_step: moment/gradient size mismatch for parameter " +
                           std::to_string(p) + " of shape " +
                           shape_string(params[p].shape()));
    }
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto theta = params[p].mutable_data();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grads[p].empty() ? 0.0 : grads[p][i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) {
    if (p.has_grad()) {
      grads.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      grads.emplace_back();
    }
  }
  adam_step(params, grads, state);
}

PlateauScheduler::PlateauScheduler(double factor, int patience, double min_lr)
    : factor_(factor),
      patience_(patience),
      min_lr_(min_lr),
      best_(std::numeric_limits<double>::infinity()) {}

double PlateauScheduler::observe(double metric, double current_lr) {
  if (metric < best_) {
    best_ = metric;
    bad_epochs_ = 0;
    return current_lr;
  }
  if (++bad_epochs_ > patience_) {
    bad_epochs_ = 0;
    return std::max(min_lr_, current_lr * factor_);
  }
  return current_lr;
}

}  // namespace dualdec
