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

#include "dualdec/params.h"

#include <cmath>

#include "dualdec/errors.h"

namespace dualdec {

Tensor ParamStore::insert(NamedTensors& list, const std::string& name, Tensor value) {
  if (contains(name)) throw UsageError("duplicate parameter name '" + name + "'");
  index_[name] = {&list == &buffers_, list.size()};
  list.emplace_back(name, value);
  return value;
}

Tensor ParamStore::add(const std::string& name, Tensor value) {
  value.set_requires_grad(true);
  return insert(params_, name, std::move(value));
}

Tensor ParamStore::add_buffer(const std::string& name, Tensor value) {
  value.set_requires_grad(false);
  return insert(buffers_, name, std::move(value));
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  const auto [is_buffer, pos] = it->second;
  return (is_buffer ? buffers_ : params_)[pos].second;
}

std::vector<Tensor> ParamStore::trainable() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

NamedTensors ParamStore::state() const {
  NamedTensors out = params_;
  out.insert(out.end(), buffers_.begin(), buffers_.end());
  return out;
}

void ParamStore::load_state(const NamedTensors& state) {
  if (state.size() != params_.size() + buffers_.size()) {
    throw DataError("checkpoint holds " + std::to_string(state.size()) + " tensors, model expects " +
                    std::to_string(params_.size() + buffers_.size()));
  }
  for (const auto& [name, value] : state) {
    if (!contains(name)) throw DataError("checkpoint tensor '" + name + "' is not in the model");
    Tensor target = get(name);
    if (target.shape() != value.shape()) {
      throw DataError("checkpoint tensor '" + name + "' has shape " + shape_string(value.shape()) +
                      ", model expects " + shape_string(target.shape()));
    }
    auto src = value.data();
    auto dst = target.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

Index ParamStore::num_parameters() const {
  Index n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() const {
  for (const auto& [name, t] : params_) t.zero_grad();
}

Tensor uniform_init(Shape shape, Index fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data), true);
}

Tensor normal_init(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data), true);
}

}  // namespace dualdec
