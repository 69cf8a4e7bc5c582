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

#include "dualdec/losses.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "dualdec/errors.h"
#include "dualdec/ops.h"

namespace dualdec {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

Index ctc_min_frames(std::span<const Index> target) {
  Index n = static_cast<Index>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

double ctc_nll(std::span<const double> log_probs, Index num_frames,
               Index num_classes, std::span<const Index> target,
               std::vector<double>* grad) {
  if (num_frames < 0 || static_cast<Index>(log_probs.size()) < num_frames * num_classes) {
    throw DimensionError("ctc: log_probs too small for " + std::to_string(num_frames) + " frames");
  }
  for (Index id : target) {
    if (id <= 0 || id >= num_classes) {
      throw DimensionError("ctc: target id " + std::to_string(id) + " is blank or out of range");
    }
  }
  if (ctc_min_frames(target) > num_frames || num_frames == 0) {
    throw NumericalError("ctc: target unalignable (" + std::to_string(target.size()) +
                         " labels in " + std::to_string(num_frames) + " frames)");
  }
  const Index S = 2 * static_cast<Index>(target.size()) + 1;
  const Index T = num_frames;
  auto label = [&](Index s) { return s % 2 == 0 ? Index{0} : target[s / 2]; };
  auto lp = [&](Index t, Index s) { return log_probs[t * num_classes + label(s)]; };
  // A state may skip its predecessor when it is a label differing from the
  // label two states back.
  auto can_skip = [&](Index s) { return s % 2 == 1 && s >= 2 && label(s) != label(s - 2); };

  std::vector<double> alpha(T * S, kNegInf);
  alpha[0] = lp(0, 0);
  if (S > 1) alpha[1] = lp(0, 1);
  for (Index t = 1; t < T; ++t) {
    const double* prev = &alpha[(t - 1) * S];
    double* cur = &alpha[t * S];
    for (Index s = 0; s < S; ++s) {
      double a = prev[s];
      if (s >= 1) a = log_add(a, prev[s - 1]);
      if (can_skip(s)) a = log_add(a, prev[s - 2]);
      cur[s] = a == kNegInf ? kNegInf : a + lp(t, s);
    }
  }
  const double* last = &alpha[(T - 1) * S];
  const double log_z = S > 1 ? log_add(last[S - 1], last[S - 2]) : last[0];
  if (!std::isfinite(log_z)) throw NumericalError("ctc: total alignment probability is zero");

  if (grad != nullptr) {
    // beta[t, s]: log-probability of frames t+1..T-1 given state s at frame t.
    std::vector<double> beta(T * S, kNegInf);
    beta[(T - 1) * S + S - 1] = 0.0;
    if (S > 1) beta[(T - 1) * S + S - 2] = 0.0;
    for (Index t = T - 2; t >= 0; --t) {
      const double* next = &beta[(t + 1) * S];
      double* cur = &beta[t * S];
      for (Index s = 0; s < S; ++s) {
        double b = next[s] + lp(t + 1, s);
        if (s + 1 < S) b = log_add(b, next[s + 1] + lp(t + 1, s + 1));
        if (s + 2 < S && can_skip(s + 2)) b = log_add(b, next[s + 2] + lp(t + 1, s + 2));
        cur[s] = b;
      }
    }
    grad->assign(static_cast<std::size_t>(T * num_classes), 0.0);
    for (Index t = 0; t < T; ++t) {
      for (Index s = 0; s < S; ++s) {
        const double v = alpha[t * S + s] + beta[t * S + s];
        if (v == kNegInf) continue;
        (*grad)[t * num_classes + label(s)] -= std::exp(v - log_z);
      }
    }
  }
  return -log_z;
}

Tensor ctc_loss(const Tensor& log_probs, std::span<const Index> input_lengths,
                std::span<const std::vector<Index>> targets) {
  if (log_probs.rank() != 3) {
    throw DimensionError("ctc_loss: expected [B, T, V], got " + shape_string(log_probs.shape()));
  }
  const Index B = log_probs.dim(0), T = log_probs.dim(1), V = log_probs.dim(2);
  if (static_cast<Index>(input_lengths.size()) != B || static_cast<Index>(targets.size()) != B) {
    throw DimensionError("ctc_loss: batch size mismatch");
  }
  auto data = log_probs.data();
  std::vector<double> grads(static_cast<std::size_t>(B * T * V), 0.0);
  double total = 0.0;
  const bool want_grad = grad_enabled() && log_probs.requires_grad();
  std::vector<double> g;
  for (Index b = 0; b < B; ++b) {
    if (input_lengths[b] < 0 || input_lengths[b] > T) {
      throw DimensionError("ctc_loss: input length " + std::to_string(input_lengths[b]) +
                           " exceeds " + std::to_string(T));
    }
    total += ctc_nll(data.subspan(b * T * V, T * V), input_lengths[b], V, targets[b],
                     want_grad ? &g : nullptr);
    if (want_grad) std::copy(g.begin(), g.end(), grads.begin() + b * T * V);
  }
  const double inv_b = 1.0 / static_cast<double>(B);
  return make_op_result("ctc_loss", {}, {total * inv_b}, {log_probs},
                        [log_probs, grads = std::move(grads), inv_b](const Tensor& o) {
                          const double go = o.grad()[0] * inv_b;
                          auto gx = log_probs.mutable_grad();
                          for (std::size_t i = 0; i < grads.size(); ++i) gx[i] += go * grads[i];
                        });
}

Tensor seq_cross_entropy(const Tensor& logits, std::span<const Index> targets,
                         Index pad_id, double label_smoothing) {
  if (logits.rank() != 3 || static_cast<Index>(targets.size()) != logits.dim(0) * logits.dim(1)) {
    throw DimensionError("seq_cross_entropy: logits " + shape_string(logits.shape()) +
                         " do not match " + std::to_string(targets.size()) + " targets");
  }
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw UsageError("seq_cross_entropy: label_smoothing must be in [0, 1)");
  }
  const Index V = logits.dim(2);
  const Index rows = static_cast<Index>(targets.size());
  auto x = logits.data();
  Index count = 0;
  for (Index id : targets) {
    if (id == pad_id) continue;
    if (id < 0 || id >= V) throw std::out_of_range("seq_cross_entropy: target id out of range");
    ++count;
  }
  if (count == 0) throw DataError("seq_cross_entropy: every position is padding");

  // Per-row softmax is kept for the backward pass.
  std::vector<double> probs(static_cast<std::size_t>(rows * V), 0.0);
  const double off = label_smoothing / static_cast<double>(V);
  double total = 0.0;
  for (Index r = 0; r < rows; ++r) {
    if (targets[r] == pad_id) continue;
    const double* row = &x[r * V];
    const double hi = *std::max_element(row, row + V);
    double z = 0.0;
    for (Index k = 0; k < V; ++k) z += std::exp(row[k] - hi);
    const double log_z = hi + std::log(z);
    double loss = -(1.0 - label_smoothing) * (row[targets[r]] - log_z);
    if (label_smoothing > 0.0) {
      double s = 0.0;
      for (Index k = 0; k < V; ++k) s += row[k] - log_z;
      loss -= off * s;
    }
    total += loss;
    for (Index k = 0; k < V; ++k) probs[r * V + k] = std::exp(row[k] - log_z);
  }
  const double inv_n = 1.0 / static_cast<double>(count);
  std::vector<Index> tgt(targets.begin(), targets.end());
  return make_op_result(
      "seq_cross_entropy", {}, {total * inv_n}, {logits},
      [logits, probs = std::move(probs), tgt = std::move(tgt), pad_id, label_smoothing, off, V,
       inv_n](const Tensor& o) {
        const double go = o.grad()[0] * inv_n;
        auto gx = logits.mutable_grad();
        for (std::size_t r = 0; r < tgt.size(); ++r) {
          if (tgt[r] == pad_id) continue;
          for (Index k = 0; k < V; ++k) {
            double q = off;
            if (k == tgt[r]) q += 1.0 - label_smoothing;
            gx[r * V + k] += go * (probs[r * V + k] - q);
          }
        }
      });
}

void validate(const MultiTaskLossConfig& cfg) {
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) {
    throw UsageError("lambda must lie in [0, 1], got " + std::to_string(cfg.lambda));
  }
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) {
    throw UsageError("alpha must be a finite value >= 0, got " + std::to_string(cfg.alpha));
  }
}

double multitask_total(double l_ctc, double l_gr, double l_pr, const MultiTaskLossConfig& cfg) {
  return cfg.lambda * l_ctc + (1.0 - cfg.lambda) * l_gr + cfg.alpha * l_pr;
}

MultiTaskLoss multitask_loss(const Tensor& l_ctc, const Tensor& l_gr, const Tensor& l_pr,
                             const MultiTaskLossConfig& cfg) {
  validate(cfg);
  const std::array<Tensor, 3> terms = {l_ctc, l_gr, l_pr};
  const std::array<double, 3> weights = {cfg.lambda, 1.0 - cfg.lambda, cfg.alpha};
  MultiTaskLoss out;
  out.total = weighted_sum(terms, weights);
  out.breakdown.l_ctc = l_ctc.item();
  out.breakdown.l_gr = l_gr.item();
  out.breakdown.l_pr = l_pr.item();
  out.breakdown.l_total = out.total.item();
  return out;
}

}  // namespace dualdec
