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

#ifndef DUALDEC_ATTENTION_H_
#define DUALDEC_ATTENTION_H_

#include <span>
#include <vector>

#include "dualdec/tensor.h"

namespace dualdec {

struct AttentionDims {
  Index batch = 1;
  Index query_len = 1;
  Index key_len = 1;
  Index heads = 1;
};

// Multi-head scaled dot-product attention core (projections excluded).
//
// q holds batch*query_len rows and k, v hold batch*key_len rows, each row
// being heads*d_head wide. Keys at positions >= key_lengths[b] and, when
// `causal`, keys after the query position receive zero weight. A query row
// with no visible key outputs zeros. When `weights_out` is given it receives
// the [batch, heads, query_len, key_len] attention probabilities.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const AttentionDims& dims,
                            std::span<const Index> key_lengths, bool causal,
                            std::vector<double>* weights_out = nullptr);

}  // namespace dualdec

#endif  // DUALDEC_ATTENTION_H_
