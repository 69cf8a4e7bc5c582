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

#ifndef DUALDEC_TESTS_TEST_UTIL_H_
#define DUALDEC_TESTS_TEST_UTIL_H_

#include <random>
#include <vector>

#include "dualdec/gradcheck.h"
#include "dualdec/ops.h"
#include "dualdec/tensor.h"

namespace dualdec::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0, bool requires_grad = true) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

// Reduces an op's output to a scalar with fixed random weights so that every
// output entry contributes a distinct coefficient to the gradient.
inline Tensor weighted_readout(const Tensor& y, const Tensor& weights) {
  return dot(y, weights);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dualdec::testing

#endif  // DUALDEC_TESTS_TEST_UTIL_H_
