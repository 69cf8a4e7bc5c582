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

#ifndef DUALDEC_DECODER_H_
#define DUALDEC_DECODER_H_

#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dualdec/layers.h"
#include "dualdec/params.h"
#include "dualdec/tensor.h"

namespace dualdec {

struct DecoderConfig {
  Index num_layers = 1;
  Index d_model = 64;
  Index num_heads = 4;
  Index ff_hidden = 128;
  Index vocab_size = 0;
};

void validate(const DecoderConfig& cfg);

// Row-major n x n, 1 where position i may attend to j (j <= i).
std::vector<unsigned char> causal_mask(Index n);

struct DecoderLayer {
  DecoderLayer() = default;
  DecoderLayer(ParamStore& store, const std::string& name, const DecoderConfig& cfg,
               std::mt19937_64& rng);

  LayerNorm self_norm;
  MultiHeadAttention self_attention;
  LayerNorm cross_norm;
  MultiHeadAttention cross_attention;
  FeedForward ffn;
};

// Incremental decoding state for one utterance. Copies are independent
// except for the shared, immutable projected encoder memory.
struct DecoderState {
  struct CrossMemory {
    std::vector<Tensor> keys;    // per layer [1, T, d]
    std::vector<Tensor> values;  // per layer [1, T, d]
    Index length = 0;
  };

  std::vector<Index> prefix;
  // Per layer, prefix.size() rows of projected self-attention keys/values.
  std::vector<std::vector<double>> self_keys;
  std::vector<std::vector<double>> self_values;
  std::shared_ptr<const CrossMemory> memory;
};

// One parameterized pre-norm transformer decoder; the phoneme and grapheme
// decoders are two instances.
class TransformerDecoder {
 public:
  TransformerDecoder(const DecoderConfig& cfg, ParamStore& store, std::mt19937_64& rng,
                     const std::string& prefix);

  // tokens holds B rows of U ids; enc_hidden is [B, T, d] with valid
  // lengths enc_lengths. Returns logits [B, U, vocab_size].
  Tensor forward(std::span<const Index> tokens, Index length, const Tensor& enc_hidden,
                 std::span<const Index> enc_lengths, const ForwardContext& ctx) const;

  // Starts decoding utterance `b` of an encoded batch. No tokens consumed.
  DecoderState start(const Tensor& enc_hidden, std::span<const Index> enc_lengths, Index b) const;
  // Feeds one token and returns the logits for the following position.
  std::vector<double> step(DecoderState& state, Index token) const;

  const DecoderConfig& config() const { return cfg_; }

 private:
  DecoderConfig cfg_;
  Tensor embedding_;
  std::vector<DecoderLayer> layers_;
  LayerNorm final_norm_;
  Linear output_;
};

}  // namespace dualdec

#endif  // DUALDEC_DECODER_H_
