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

#include "dualdec/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace dualdec {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(const std::function<Tensor()>& build_loss,
                                const std::vector<NamedTensor>& params,
                                const GradCheckOptions& options) {
  std::vector<NamedTensor> targets = params;
  for (auto& [name, t] : targets) t.zero_grad();
  {
    Tensor loss = build_loss();
    backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(targets.size());
  for (auto& [name, t] : targets) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.numel(), 0.0);
    }
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  NoGradGuard no_grad;
  for (std::size_t p = 0; p < targets.size(); ++p) {
    auto& [name, t] = targets[p];
    ParamGradCheck entry;
    entry.name = name;
    const Index n = t.numel();
    Index stride = 1;
    if (options.max_entries_per_param > 0 && n > options.max_entries_per_param) {
      stride = (n + options.max_entries_per_param - 1) / options.max_entries_per_param;
    }
    auto values = t.mutable_data();
    for (Index i = 0; i < n; i += stride) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = build_loss().item();
      values[i] = saved - options.step;
      const double down = build_loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(analytic[p][i], numeric, options.abs_floor);
      ++entry.checked;
      if (err > options.tolerance) ++entry.flagged;
      if (err > entry.max_rel_error || entry.worst_index < 0) {
        entry.max_rel_error = err;
        entry.worst_index = i;
        entry.analytic_at_worst = analytic[p][i];
        entry.numeric_at_worst = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace dualdec
