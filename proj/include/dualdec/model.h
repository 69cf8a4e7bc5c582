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

#ifndef DUALDEC_MODEL_H_
#define DUALDEC_MODEL_H_

#include <cstdint>
#include <memory>
#include <string>

#include "dualdec/corpus.h"
#include "dualdec/decoder.h"
#include "dualdec/encoder.h"
#include "dualdec/layers.h"
#include "dualdec/losses.h"
#include "dualdec/params.h"

namespace dualdec {

struct ModelConfig {
  EncoderConfig encoder;
  Index decoder_layers = 1;
  Index decoder_heads = 4;
  Index decoder_ff_hidden = 128;
  Index grapheme_vocab = 0;
  Index phoneme_vocab = 0;
  double label_smoothing = 0.0;
};

void validate(const ModelConfig& cfg);

struct BranchLosses {
  Tensor ctc;
  Tensor grapheme;
  Tensor phoneme;
};

// Shared conformer encoder feeding a CTC projection and two parallel
// decoders (phoneme and grapheme).
class DualDecoderModel {
 public:
  DualDecoderModel(const ModelConfig& cfg, std::uint64_t seed);

  PaddedBatch encode(const PaddedBatch& batch, const ForwardContext& ctx);
  // Log-softmax of the CTC projection, [B, T', grapheme_vocab].
  Tensor ctc_log_probs(const PaddedBatch& encoded) const;
  BranchLosses branch_losses(const Batch& batch, const ForwardContext& ctx);
  MultiTaskLoss loss(const Batch& batch, const MultiTaskLossConfig& weights,
                     const ForwardContext& ctx);

  void save(const std::string& path) const;
  void load(const std::string& path);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& store() { return *store_; }
  const ParamStore& store() const { return *store_; }
  ConformerEncoder& encoder() { return *encoder_; }
  const TransformerDecoder& phoneme_decoder() const { return *phoneme_decoder_; }
  const TransformerDecoder& grapheme_decoder() const { return *grapheme_decoder_; }

 private:
  ModelConfig cfg_;
  std::unique_ptr<ParamStore> store_;
  std::unique_ptr<ConformerEncoder> encoder_;
  Linear ctc_projection_;
  std::unique_ptr<TransformerDecoder> phoneme_decoder_;
  std::unique_ptr<TransformerDecoder> grapheme_decoder_;
};

}  // namespace dualdec

#endif  // DUALDEC_MODEL_H_
