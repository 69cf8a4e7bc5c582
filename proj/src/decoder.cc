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

#include "dualdec/decoder.h"

#include <algorithm>

#include "dualdec/errors.h"
#include "dualdec/ops.h"

namespace dualdec {

void validate(const DecoderConfig& cfg) {
  if (cfg.num_layers <= 0 || cfg.d_model <= 0 || cfg.num_heads <= 0 || cfg.ff_hidden <= 0) {
    throw UsageError("decoder sizes must be positive");
  }
  if (cfg.d_model % cfg.num_heads != 0 || cfg.d_model % 2 != 0) {
    throw UsageError("decoder d_model must be even and divisible by num_heads");
  }
  if (cfg.vocab_size <= 0) throw UsageError("decoder vocab_size must be positive");
}

std::vector<unsigned char> causal_mask(Index n) {
  if (n <= 0) throw UsageError("causal_mask: n must be at least 1");
  std::vector<unsigned char> mask(n * n, 0);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) mask[i * n + j] = 1;
  }
  return mask;
}

DecoderLayer::DecoderLayer(ParamStore& store, const std::string& name, const DecoderConfig& cfg,
                           std::mt19937_64& rng)
    : self_norm(store, name + "/self_attn/ln", cfg.d_model),
      self_attention(store, name + "/self_attn", cfg.d_model, cfg.num_heads, rng),
      cross_norm(store, name + "/cross_attn/ln", cfg.d_model),
      cross_attention(store, name + "/cross_attn", cfg.d_model, cfg.num_heads, rng),
      ffn(store, name + "/ffn", cfg.d_model, cfg.ff_hidden, rng) {}

TransformerDecoder::TransformerDecoder(const DecoderConfig& cfg, ParamStore& store,
                                       std::mt19937_64& rng, const std::string& prefix)
    : cfg_(cfg) {
  validate(cfg);
  embedding_ = store.add(prefix + "/embedding", normal_init({cfg.vocab_size, cfg.d_model}, 1.0, rng));
  for (Index i = 0; i < cfg.num_layers; ++i) {
    layers_.emplace_back(store, prefix + "/layer" + std::to_string(i), cfg, rng);
  }
  final_norm_ = LayerNorm(store, prefix + "/final_ln", cfg.d_model);
  output_ = Linear(store, prefix + "/output", cfg.d_model, cfg.vocab_size, rng);
}

Tensor TransformerDecoder::forward(std::span<const Index> tokens, Index length,
                                   const Tensor& enc_hidden, std::span<const Index> enc_lengths,
                                   const ForwardContext& ctx) const {
  if (length <= 0 || tokens.size() % length != 0) {
    throw DimensionError("decoder: " + std::to_string(tokens.size()) +
                         " tokens do not split into rows of " + std::to_string(length));
  }
  const Index B = static_cast<Index>(tokens.size()) / length;
  if (enc_hidden.rank() != 3 || enc_hidden.dim(0) != B ||
      static_cast<Index>(enc_lengths.size()) != B || enc_hidden.dim(2) != cfg_.d_model) {
    throw DimensionError("decoder: batch of " + std::to_string(B) + " token rows vs encoder " +
                         shape_string(enc_hidden.shape()));
  }
  Tensor x = reshape(embedding(embedding_, tokens), {B, length, cfg_.d_model});
  x = maybe_dropout(add_positional_encoding(x), ctx);
  const std::vector<Index> self_lengths(B, length);
  for (const auto& layer : layers_) {
    Tensor h = layer.self_norm(x);
    x = add(x, maybe_dropout(layer.self_attention(h, h, self_lengths, true), ctx));
    h = layer.cross_norm(x);
    x = add(x, maybe_dropout(layer.cross_attention(h, enc_hidden, enc_lengths, false), ctx));
    x = add(x, layer.ffn(x, ctx));
  }
  return output_(final_norm_(x));
}

DecoderState TransformerDecoder::start(const Tensor& enc_hidden,
                                       std::span<const Index> enc_lengths, Index b) const {
  if (enc_hidden.rank() != 3 || b < 0 || b >= enc_hidden.dim(0) ||
      static_cast<Index>(enc_lengths.size()) != enc_hidden.dim(0)) {
    throw DimensionError("decoder start: utterance index out of range");
  }
  NoGradGuard no_grad;
  const Index T = enc_hidden.dim(1), d = cfg_.d_model;
  auto src = enc_hidden.data().subspan(b * T * d, T * d);
  Tensor row({1, T, d}, std::vector<double>(src.begin(), src.end()));
  auto memory = std::make_shared<DecoderState::CrossMemory>();
  memory->length = enc_lengths[b];
  for (const auto& layer : layers_) {
    memory->keys.push_back(layer.cross_attention.k(row));
    memory->values.push_back(layer.cross_attention.v(row));
  }
  DecoderState state;
  state.self_keys.resize(layers_.size());
  state.self_values.resize(layers_.size());
  state.memory = std::move(memory);
  return state;
}

std::vector<double> TransformerDecoder::step(DecoderState& state, Index token) const {
  const Index d = cfg_.d_model;
  const Index pos = static_cast<Index>(state.prefix.size());
  if (state.memory == nullptr || state.self_keys.size() != layers_.size()) {
    throw UsageError("decoder step: state was not created by start()");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (static_cast<Index>(state.self_keys[l].size()) != pos * d ||
        state.self_values[l].size() != state.self_keys[l].size()) {
      throw UsageError("decoder step: cache length does not match the prefix length");
    }
  }
  NoGradGuard no_grad;
  const Index ids[1] = {token};
  Tensor x = reshape(embedding(embedding_, ids), {1, 1, d});
  Tensor pe = sinusoidal_table(pos + 1, d);
  x = add(x, Tensor({1, 1, d}, std::vector<double>(pe.data().end() - d, pe.data().end())));
  const Index self_len[1] = {pos + 1};
  const Index cross_len[1] = {state.memory->length};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Tensor h = layer.self_norm(x);
    const Tensor k_new = layer.self_attention.k(h);
    const Tensor v_new = layer.self_attention.v(h);
    state.self_keys[l].insert(state.self_keys[l].end(), k_new.data().begin(), k_new.data().end());
    state.self_values[l].insert(state.self_values[l].end(), v_new.data().begin(),
                                v_new.data().end());
    Tensor keys({1, pos + 1, d}, state.self_keys[l]);
    Tensor values({1, pos + 1, d}, state.self_values[l]);
    x = add(x, layer.self_attention.attend(h, keys, values, self_len, false));
    h = layer.cross_norm(x);
    x = add(x, layer.cross_attention.attend(h, state.memory->keys[l], state.memory->values[l],
                                            cross_len, false));
    x = add(x, layer.ffn(x, ForwardContext{}));
  }
  state.prefix.push_back(token);
  const Tensor logits = output_(final_norm_(x));
  return std::vector<double>(logits.data().begin(), logits.data().end());
}

}  // namespace dualdec
