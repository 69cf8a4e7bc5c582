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

#ifndef DUALDEC_LOSSES_H_
#define DUALDEC_LOSSES_H_

#include <span>
#include <vector>

#include "dualdec/tensor.h"

namespace dualdec {

// Minimum number of frames a CTC target needs: one per label plus a blank
// between each pair of equal neighbours.
Index ctc_min_frames(std::span<const Index> target);

// Negative log-likelihood of `target` under per-frame log-probabilities
// log_probs[t * num_classes + k], t < num_frames, blank id 0. When grad is
// non-null it receives d(nll)/d(log_probs), the negated state occupancy,
// sized num_frames * num_classes. Throws NumericalError when the target
// cannot be aligned in num_frames frames.
double ctc_nll(std::span<const double> log_probs, Index num_frames,
               Index num_classes, std::span<const Index> target,
               std::vector<double>* grad = nullptr);

// log_probs is [B, T, V]; utterance b uses its first input_lengths[b] frames.
// Returns the batch mean of per-utterance negative log-likelihoods.
Tensor ctc_loss(const Tensor& log_probs, std::span<const Index> input_lengths,
                std::span<const std::vector<Index>> targets);

// logits [B, U, V], targets B*U ids with pad_id marking ignored positions.
// Mean over non-pad positions of the (optionally smoothed) cross-entropy.
Tensor seq_cross_entropy(const Tensor& logits, std::span<const Index> targets,
                         Index pad_id = -1, double label_smoothing = 0.0);

struct MultiTaskLossConfig {
  double lambda = 0.3;
  double alpha = 0.6;
};

void validate(const MultiTaskLossConfig& cfg);

struct LossBreakdown {
  double l_ctc = 0.0;
  double l_pr = 0.0;
  double l_gr = 0.0;
  double l_total = 0.0;
};

struct MultiTaskLoss {
  Tensor total;
  LossBreakdown breakdown;
};

// total = lambda * l_ctc + (1 - lambda) * l_gr + alpha * l_pr.
double multitask_total(double l_ctc, double l_gr, double l_pr,
                       const MultiTaskLossConfig& cfg);
MultiTaskLoss multitask_loss(const Tensor& l_ctc, const Tensor& l_gr,
                             const Tensor& l_pr, const MultiTaskLossConfig& cfg);

}  // namespace dualdec

#endif  // DUALDEC_LOSSES_H_
