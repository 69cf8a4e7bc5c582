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

#include "dualdec/layers.h"

#include <cmath>

#include "dualdec/attention.h"
#include "dualdec/errors.h"
#include "dualdec/ops.h"

namespace dualdec {

Tensor maybe_dropout(const Tensor& x, const ForwardContext& ctx) {
  if (!ctx.training || ctx.dropout <= 0.0) return x;
  if (ctx.rng == nullptr) throw UsageError("dropout requested without a random generator");
  return dropout(x, ctx.dropout, *ctx.rng);
}

std::vector<double> length_mask(std::span<const Index> lengths, Index max_len) {
  std::vector<double> mask(lengths.size() * max_len, 0.0);
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    for (Index t = 0; t < std::min(lengths[b], max_len); ++t) mask[b * max_len + t] = 1.0;
  }
  return mask;
}

Tensor sinusoidal_table(Index length, Index d_model) {
  if (d_model % 2 != 0) throw DimensionError("positional encoding needs an even d_model");
  std::vector<double> pe(length * d_model);
  for (Index t = 0; t < length; ++t) {
    for (Index i = 0; i < d_model / 2; ++i) {
      const double angle =
          static_cast<double>(t) / std::pow(10000.0, 2.0 * i / static_cast<double>(d_model));
      pe[t * d_model + 2 * i] = std::sin(angle);
      pe[t * d_model + 2 * i + 1] = std::cos(angle);
    }
  }
  return Tensor({length, d_model}, std::move(pe));
}

Tensor add_positional_encoding(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("positional encoding expects [B, T, d]");
  const Index B = x.dim(0), T = x.dim(1), d = x.dim(2);
  Tensor table = sinusoidal_table(T, d);
  std::vector<double> tiled(B * T * d);
  for (Index b = 0; b < B; ++b) {
    std::copy(table.data().begin(), table.data().end(), tiled.begin() + b * T * d);
  }
  return add(x, Tensor(x.shape(), std::move(tiled)));
}

Linear::Linear(ParamStore& store, const std::string& name, Index in, Index out,
               std::mt19937_64& rng, bool with_bias) {
  weight = store.add(name + "/weight", uniform_init({in, out}, in, rng));
  if (with_bias) bias = store.add(name + "/bias", Tensor::zeros({out}));
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, Index dim) {
  gamma = store.add(name + "/gamma", Tensor::full({dim}, 1.0));
  beta = store.add(name + "/beta", Tensor::zeros({dim}));
}

FeedForward::FeedForward(ParamStore& store, const std::string& name, Index d_model, Index hidden,
                         std::mt19937_64& rng)
    : norm(store, name + "/ln", d_model),
      in(store, name + "/linear1", d_model, hidden, rng),
      out(store, name + "/linear2", hidden, d_model, rng) {}

Tensor FeedForward::operator()(const Tensor& x, const ForwardContext& ctx) const {
  Tensor h = maybe_dropout(swish(in(norm(x))), ctx);
  return maybe_dropout(out(h), ctx);
}

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& name, Index d_model,
                                       Index num_heads, std::mt19937_64& rng)
    : heads(num_heads),
      q(store, name + "/query", d_model, d_model, rng),
      k(store, name + "/key", d_model, d_model, rng),
      v(store, name + "/value", d_model, d_model, rng),
      o(store, name + "/out", d_model, d_model, rng) {
  if (d_model % num_heads != 0) {
    throw UsageError("d_model " + std::to_string(d_model) + " is not divisible by " +
                     std::to_string(num_heads) + " heads");
  }
}

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& memory,
                                      std::span<const Index> key_lengths, bool causal,
                                      std::vector<double>* weights_out) const {
  return attend(query, k(memory), v(memory), key_lengths, causal, weights_out);
}

Tensor MultiHeadAttention::attend(const Tensor& query, const Tensor& keys, const Tensor& values,
                                  std::span<const Index> key_lengths, bool causal,
                                  std::vector<double>* weights_out) const {
  if (query.rank() != 3 || keys.rank() != 3 || query.dim(0) != keys.dim(0)) {
    throw DimensionError("attention: query " + shape_string(query.shape()) + " and memory " +
                         shape_string(keys.shape()) + " disagree");
  }
  AttentionDims dims{query.dim(0), query.dim(1), keys.dim(1), heads};
  return o(scaled_dot_attention(q(query), keys, values, dims, key_lengths, causal, weights_out));
}

}  // namespace dualdec
