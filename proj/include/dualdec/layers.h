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

#ifndef DUALDEC_LAYERS_H_
#define DUALDEC_LAYERS_H_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "dualdec/ops.h"
#include "dualdec/params.h"
#include "dualdec/tensor.h"

namespace dualdec {

// Training mode enables dropout and batch-norm statistic updates.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
};

Tensor maybe_dropout(const Tensor& x, const ForwardContext& ctx);

// 1 for the first lengths[b] of max_len rows of each batch entry, else 0.
std::vector<double> length_mask(std::span<const Index> lengths, Index max_len);

// Fixed sinusoidal table [length, d_model]:
// pe(t, 2i) = sin(t / 10000^(2i/d)), pe(t, 2i+1) = cos(t / 10000^(2i/d)).
Tensor sinusoidal_table(Index length, Index d_model);
// Adds the table to every batch entry of x[B, T, d].
Tensor add_positional_encoding(const Tensor& x);

struct Linear {
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, Index in, Index out, std::mt19937_64& rng,
         bool bias = true);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }

  Tensor weight;
  Tensor bias;
};

struct LayerNorm {
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, Index dim);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }

  Tensor gamma;
  Tensor beta;
};

// Pre-norm position-wise feed-forward: LN, linear, swish, linear. Returns
// the residual branch only.
struct FeedForward {
  FeedForward() = default;
  FeedForward(ParamStore& store, const std::string& name, Index d_model, Index hidden,
              std::mt19937_64& rng);
  Tensor operator()(const Tensor& x, const ForwardContext& ctx) const;

  LayerNorm norm;
  Linear in;
  Linear out;
};

// Multi-head attention with separate query/key/value/output projections.
struct MultiHeadAttention {
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, Index d_model, Index heads,
                     std::mt19937_64& rng);

  // query [B, Tq, d] attends over memory [B, Tk, d]; keys at or beyond
  // key_lengths[b] are masked.
  Tensor operator()(const Tensor& query, const Tensor& memory, std::span<const Index> key_lengths,
                    bool causal, std::vector<double>* weights_out = nullptr) const;
  // Same computation on already projected keys and values.
  Tensor attend(const Tensor& query, const Tensor& keys, const Tensor& values,
                std::span<const Index> key_lengths, bool causal,
                std::vector<double>* weights_out = nullptr) const;

  Index heads = 1;
  Linear q;
  Linear k;
  Linear v;
  Linear o;
};

}  // namespace dualdec

#endif  // DUALDEC_LAYERS_H_
