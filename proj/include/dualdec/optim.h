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

#ifndef DUALDEC_OPTIM_H_
#define DUALDEC_OPTIM_H_

#include <span>
#include <vector>

#include "dualdec/tensor.h"

namespace dualdec {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Index step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient (missing gradients count as zero). Moment buffers are created on
// the first call and must shape-match afterwards.
void adam_step(std::span<Tensor> params, AdamState& state);

// Same update with gradients supplied explicitly.
void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads,
               AdamState& state);

// Reduce-on-plateau: after more than `patience` epochs without improvement
// of the monitored value, multiply the rate by `factor` (never below min_lr).
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, int patience, double min_lr);

  // Returns the learning rate to use for the next epoch.
  double observe(double metric, double current_lr);

  double best() const { return best_; }

 private:
  double factor_;
  int patience_;
  double min_lr_;
  double best_;
  int bad_epochs_ = 0;
};

}  // namespace dualdec

#endif  // DUALDEC_OPTIM_H_
