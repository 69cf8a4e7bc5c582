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

#ifndef DUALDEC_ENCODER_H_
#define DUALDEC_ENCODER_H_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "dualdec/layers.h"
#include "dualdec/params.h"
#include "dualdec/tensor.h"

namespace dualdec {

enum class ConvNorm { kBatch, kLayer };

struct EncoderConfig {
  Index num_blocks = 2;
  Index d_model = 64;
  Index num_heads = 4;
  Index ff_hidden = 128;
  Index conv_kernel = 15;
  Index conv_expansion = 2;
  Index input_dim = 40;
  // Layer norm replaces batch norm in the convolution module, useful for
  // batches smaller than 4.
  ConvNorm conv_norm = ConvNorm::kBatch;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
};

void validate(const EncoderConfig& cfg);

// Frames left after one 3-wide, stride-2 convolution without padding.
Index conv_out_length(Index length);
// Frames left after both subsampling convolutions. Throws DataError for
// lengths below 11.
Index subsampled_length(Index length);
inline constexpr Index kMinEncoderFrames = 11;

struct PaddedBatch {
  Tensor features;            // [B, T_max, 40], padded cells zero
  std::vector<Index> lengths;
  Tensor hidden;              // [B, T'_max, d_model] after encoding
  std::vector<Index> out_lengths;

  Index batch_size() const { return static_cast<Index>(lengths.size()); }
};

// Zero-pads a list of [T_i, F] feature matrices into a batch.
PaddedBatch pad_features(std::span<const Tensor> frames);

struct ConvModule {
  ConvModule() = default;
  ConvModule(ParamStore& store, const std::string& name, const EncoderConfig& cfg,
             std::mt19937_64& rng);
  // hidden [B, T, d]; frame_mask has B*T entries.
  Tensor operator()(const Tensor& hidden, std::span<const double> frame_mask,
                    const ForwardContext& ctx);

  ConvNorm norm_kind = ConvNorm::kBatch;
  double momentum = 0.1;
  double epsilon = 1e-5;
  LayerNorm norm;
  Linear pointwise_in;
  Tensor depthwise_kernel;  // [K, d]
  Tensor bn_gamma;
  Tensor bn_beta;
  Tensor running_mean;
  Tensor running_var;
  LayerNorm conv_ln;  // used when norm_kind is kLayer
  Linear pointwise_out;
};

struct ConformerBlock {
  ConformerBlock() = default;
  ConformerBlock(ParamStore& store, const std::string& name, const EncoderConfig& cfg,
                 std::mt19937_64& rng);
  Tensor operator()(const Tensor& hidden, std::span<const Index> lengths,
                    std::span<const double> frame_mask, const ForwardContext& ctx);
  // Self-attention residual branch (pre-norm).
  Tensor mhsa(const Tensor& hidden, std::span<const Index> lengths, const ForwardContext& ctx,
              std::vector<double>* weights_out = nullptr) const;

  FeedForward ffn1;
  LayerNorm attn_norm;
  MultiHeadAttention attention;
  ConvModule conv;
  FeedForward ffn2;
  LayerNorm final_norm;
};

class ConformerEncoder {
 public:
  ConformerEncoder(const EncoderConfig& cfg, ParamStore& store, std::mt19937_64& rng,
                   const std::string& prefix = "enc");

  // features [B, T, F] -> [B, T', d_model] with swish between the two
  // convolutions; padded output frames are zeroed.
  Tensor subsample(const Tensor& features, std::span<const Index> out_lengths) const;
  PaddedBatch encode(const PaddedBatch& batch, const ForwardContext& ctx);

  const EncoderConfig& config() const { return cfg_; }
  std::vector<ConformerBlock>& blocks() { return blocks_; }

 private:
  EncoderConfig cfg_;
  Linear conv1_;
  Linear conv2_;
  Linear project_;
  std::vector<ConformerBlock> blocks_;
};

}  // namespace dualdec

#endif  // DUALDEC_ENCODER_H_
