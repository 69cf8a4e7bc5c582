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

#ifndef DUALDEC_OPS_H_
#define DUALDEC_OPS_H_

#include <random>
#include <span>
#include <vector>

#include "dualdec/tensor.h"

namespace dualdec {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
// Adds `bias` (numel == last dim of x) to every row of x.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// Left-to-right sum of weights[i] * terms[i]; all terms share one shape.
Tensor weighted_sum(std::span<const Tensor> terms, std::span<const double> weights);

Tensor matmul(const Tensor& a, const Tensor& b);
// x[..., in] * weight[in, out] + bias[out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor reshape(const Tensor& x, Shape shape);

Tensor softmax(const Tensor& x, int axis = -1);
Tensor log_softmax(const Tensor& x, int axis = -1);
Tensor sigmoid(const Tensor& x);
Tensor swish(const Tensor& x);
// First half of the last axis gated by sigmoid of the second half.
Tensor glu(const Tensor& x);

// Normalizes over the last axis. Constant rows normalize to exactly zero,
// so the output there equals beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double epsilon = 1e-5);

// x is [T, C] or [B, T, C]; kernel is [K, C] with K odd. Zero "same"
// padding along T, channels never mix.
Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel);

// Inverted dropout. rate 0 returns x unchanged.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor dot(const Tensor& a, const Tensor& b);

// Rows of weight[V, d] picked by ids; result [ids.size(), d].
Tensor embedding(const Tensor& weight, std::span<const Index> ids);

// Multiplies row r (rows taken over the last axis) by row_mask[r].
Tensor mask_rows(const Tensor& x, std::span<const double> row_mask);

// x is [B, H, W, C]. Returns [B, H', W', kh*kw*C] with
// H' = (H - kh) / stride + 1, patch layout (i, j, c). Followed by a linear
// map, this is a 2-D convolution without padding.
Tensor extract_patches2d(const Tensor& x, Index kernel_h, Index kernel_w,
                         Index stride);

// Batch normalization over the rows of x[..., C] whose row_mask is nonzero.
// Masked-out rows produce zero and receive no gradient. The biased batch
// statistics are written to mean_out/var_out when given.
Tensor masked_batch_norm(const Tensor& x, std::span<const double> row_mask,
                         const Tensor& gamma, const Tensor& beta,
                         double epsilon, std::vector<double>* mean_out = nullptr,
                         std::vector<double>* var_out = nullptr);

// Inference-mode batch normalization with fixed statistics.
Tensor batch_norm_fixed(const Tensor& x, std::span<const double> row_mask,
                        std::span<const double> running_mean,
                        std::span<const double> running_var,
                        const Tensor& gamma, const Tensor& beta, double epsilon);

}  // namespace dualdec

#endif  // DUALDEC_OPS_H_
