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

#ifndef DUALDEC_GRADCHECK_H_
#define DUALDEC_GRADCHECK_H_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dualdec/tensor.h"

namespace dualdec {

using NamedTensor = std::pair<std::string, Tensor>;

struct ParamGradCheck {
  std::string name;
  double max_rel_error = 0.0;
  Index worst_index = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  Index checked = 0;
  Index flagged = 0;
};

struct GradCheckReport {
  std::vector<ParamGradCheck> params;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error <= tolerance; }
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor so that vanishing gradients compare absolutely.
  double abs_floor = 1e-5;
  // 0 checks every entry; otherwise an evenly spaced subset per parameter.
  Index max_entries_per_param = 0;
};

// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

// Compares backward() against central differences (f(p+h) - f(p-h)) / 2h for
// every entry of every listed parameter. build_loss must be deterministic
// and must not mutate the parameters.
GradCheckReport check_gradients(const std::function<Tensor()>& build_loss,
                                const std::vector<NamedTensor>& params,
                                const GradCheckOptions& options = {});

}  // namespace dualdec

#endif  // DUALDEC_GRADCHECK_H_
