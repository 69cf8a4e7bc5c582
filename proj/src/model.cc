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

#include "dualdec/model.h"

#include <random>

#include "dualdec/checkpoint.h"
#include "dualdec/errors.h"
#include "dualdec/ops.h"

namespace dualdec {

void validate(const ModelConfig& cfg) {
  validate(cfg.encoder);
  if (cfg.grapheme_vocab <= kNumSpecials || cfg.phoneme_vocab <= kNumSpecials) {
    throw UsageError("vocabularies must hold more than the special tokens");
  }
  if (cfg.label_smoothing < 0.0 || cfg.label_smoothing >= 1.0) {
    throw UsageError("label_smoothing must lie in [0, 1)");
  }
}

DualDecoderModel::DualDecoderModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), store_(std::make_unique<ParamStore>()) {
  validate(cfg);
  std::mt19937_64 rng(seed);
  encoder_ = std::make_unique<ConformerEncoder>(cfg.encoder, *store_, rng, "enc");
  ctc_projection_ = Linear(*store_, "ctc/output", cfg.encoder.d_model, cfg.grapheme_vocab, rng);
  DecoderConfig dec{cfg.decoder_layers, cfg.encoder.d_model, cfg.decoder_heads,
                    cfg.decoder_ff_hidden, cfg.phoneme_vocab};
  phoneme_decoder_ = std::make_unique<TransformerDecoder>(dec, *store_, rng, "dec_phn");
  dec.vocab_size = cfg.grapheme_vocab;
  grapheme_decoder_ = std::make_unique<TransformerDecoder>(dec, *store_, rng, "dec_grp");
}

PaddedBatch DualDecoderModel::encode(const PaddedBatch& batch, const ForwardContext& ctx) {
  return encoder_->encode(batch, ctx);
}

Tensor DualDecoderModel::ctc_log_probs(const PaddedBatch& encoded) const {
  return log_softmax(ctc_projection_(encoded.hidden), -1);
}

BranchLosses DualDecoderModel::branch_losses(const Batch& batch, const ForwardContext& ctx) {
  PaddedBatch enc = encode(batch.inputs, ctx);
  BranchLosses out;
  out.ctc = ctc_loss(ctc_log_probs(enc), enc.out_lengths, batch.ctc_targets);
  Tensor grp = grapheme_decoder_->forward(batch.grapheme_in, batch.grapheme_len, enc.hidden,
                                          enc.out_lengths, ctx);
  out.grapheme = seq_cross_entropy(grp, batch.grapheme_out, kPadId, cfg_.label_smoothing);
  Tensor phn = phoneme_decoder_->forward(batch.phoneme_in, batch.phoneme_len, enc.hidden,
                                         enc.out_lengths, ctx);
  out.phoneme = seq_cross_entropy(phn, batch.phoneme_out, kPadId, cfg_.label_smoothing);
  return out;
}

MultiTaskLoss DualDecoderModel::loss(const Batch& batch, const MultiTaskLossConfig& weights,
                                     const ForwardContext& ctx) {
  BranchLosses b = branch_losses(batch, ctx);
  return multitask_loss(b.ctc, b.grapheme, b.phoneme, weights);
}

void DualDecoderModel::save(const std::string& path) const { save_tensors(path, store_->state()); }

void DualDecoderModel::load(const std::string& path) { store_->load_state(load_tensors(path)); }

}  // namespace dualdec
