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

#ifndef DUALDEC_PARAMS_H_
#define DUALDEC_PARAMS_H_

#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dualdec/checkpoint.h"
#include "dualdec/tensor.h"

namespace dualdec {

// Named parameters and non-trainable buffers of a model, in registration
// order. Names are unique across both.
class ParamStore {
 public:
  Tensor add(const std::string& name, Tensor value);
  // Saved with the checkpoint but never updated by the optimizer.
  Tensor add_buffer(const std::string& name, Tensor value);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  const NamedTensors& params() const { return params_; }
  const NamedTensors& buffers() const { return buffers_; }
  std::vector<Tensor> trainable() const;
  // Parameters followed by buffers.
  NamedTensors state() const;
  // Copies values from `state`, which must hold exactly the same names and
  // shapes.
  void load_state(const NamedTensors& state);

  Index num_parameters() const;
  void zero_grad() const;

 private:
  Tensor insert(NamedTensors& list, const std::string& name, Tensor value);

  NamedTensors params_;
  NamedTensors buffers_;
  // name -> (is_buffer, position)
  std::map<std::string, std::pair<bool, std::size_t>> index_;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], requires_grad set.
Tensor uniform_init(Shape shape, Index fan_in, std::mt19937_64& rng);
// Standard normal scaled by `stddev`, requires_grad set.
Tensor normal_init(Shape shape, double stddev, std::mt19937_64& rng);

}  // namespace dualdec

#endif  // DUALDEC_PARAMS_H_
