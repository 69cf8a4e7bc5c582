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

#include "dualdec/encoder.h"

#include <algorithm>

#include "dualdec/errors.h"
#include "dualdec/ops.h"

namespace dualdec {

void validate(const EncoderConfig& cfg) {
  if (cfg.num_blocks < 0 || cfg.d_model <= 0 || cfg.num_heads <= 0 || cfg.ff_hidden <= 0) {
    throw UsageError("encoder sizes must be positive");
  }
  if (cfg.d_model % cfg.num_heads != 0) {
    throw UsageError("d_model " + std::to_string(cfg.d_model) + " is not divisible by " +
                     std::to_string(cfg.num_heads) + " heads");
  }
  if (cfg.d_model % 2 != 0) throw UsageError("d_model must be even");
  if (cfg.conv_kernel <= 0 || cfg.conv_kernel % 2 == 0) {
    throw UsageError("conv_kernel must be odd, got " + std::to_string(cfg.conv_kernel));
  }
  if (cfg.conv_expansion != 2) throw UsageError("conv_expansion must be 2 (GLU halves it)");
  if (cfg.input_dim < 7) throw UsageError("input_dim too small for two 3x3 stride-2 convolutions");
}

Index conv_out_length(Index length) { return (length - 3) / 2 + 1; }

Index subsampled_length(Index length) {
  if (length < kMinEncoderFrames) {
    throw DataError("utterance too short after subsampling: " + std::to_string(length) +
                    " frames, need at least " + std::to_string(kMinEncoderFrames));
  }
  return conv_out_length(conv_out_length(length));
}

PaddedBatch pad_features(std::span<const Tensor> frames) {
  if (frames.empty()) throw DataError("empty batch");
  const Index feat = frames[0].dim(1);
  Index t_max = 0;
  PaddedBatch batch;
  for (const auto& f : frames) {
    if (f.rank() != 2 || f.dim(1) != feat) {
      throw DimensionError("pad_features: inconsistent frame shape " + shape_string(f.shape()));
    }
    batch.lengths.push_back(f.dim(0));
    t_max = std::max(t_max, f.dim(0));
  }
  const Index B = static_cast<Index>(frames.size());
  std::vector<double> data(B * t_max * feat, 0.0);
  for (Index b = 0; b < B; ++b) {
    auto src = frames[b].data();
    std::copy(src.begin(), src.end(), data.begin() + b * t_max * feat);
  }
  batch.features = Tensor({B, t_max, feat}, std::move(data));
  return batch;
}

ConvModule::ConvModule(ParamStore& store, const std::string& name, const EncoderConfig& cfg,
                       std::mt19937_64& rng)
    : norm_kind(cfg.conv_norm),
      momentum(cfg.bn_momentum),
      epsilon(cfg.bn_epsilon),
      norm(store, name + "/ln", cfg.d_model),
      pointwise_in(store, name + "/pointwise1", cfg.d_model, cfg.conv_expansion * cfg.d_model, rng) {
  depthwise_kernel =
      store.add(name + "/depthwise/kernel", uniform_init({cfg.conv_kernel, cfg.d_model},
                                                         cfg.conv_kernel, rng));
  if (norm_kind == ConvNorm::kBatch) {
    bn_gamma = store.add(name + "/bn/gamma", Tensor::full({cfg.d_model}, 1.0));
    bn_beta = store.add(name + "/bn/beta", Tensor::zeros({cfg.d_model}));
    running_mean = store.add_buffer(name + "/bn/running_mean", Tensor::zeros({cfg.d_model}));
    running_var = store.add_buffer(name + "/bn/running_var", Tensor::full({cfg.d_model}, 1.0));
  } else {
    conv_ln = LayerNorm(store, name + "/conv_ln", cfg.d_model);
  }
  pointwise_out = Linear(store, name + "/pointwise2", cfg.d_model, cfg.d_model, rng);
}

Tensor ConvModule::operator()(const Tensor& hidden, std::span<const double> frame_mask,
                              const ForwardContext& ctx) {
  Tensor h = glu(pointwise_in(norm(hidden)));
  h = depthwise_conv1d(mask_rows(h, frame_mask), depthwise_kernel);
  if (norm_kind == ConvNorm::kLayer) {
    h = conv_ln(h);
  } else if (ctx.training) {
    std::vector<double> mean, var;
    h = masked_batch_norm(h, frame_mask, bn_gamma, bn_beta, epsilon, &mean, &var);
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    for (std::size_t c = 0; c < mean.size(); ++c) {
      rm[c] = (1.0 - momentum) * rm[c] + momentum * mean[c];
      rv[c] = (1.0 - momentum) * rv[c] + momentum * var[c];
    }
  } else {
    h = batch_norm_fixed(h, frame_mask, running_mean.data(), running_var.data(), bn_gamma,
                         bn_beta, epsilon);
  }
  h = maybe_dropout(pointwise_out(swish(h)), ctx);
  return mask_rows(h, frame_mask);
}

ConformerBlock::ConformerBlock(ParamStore& store, const std::string& name,
                               const EncoderConfig& cfg, std::mt19937_64& rng)
    : ffn1(store, name + "/ffn1", cfg.d_model, cfg.ff_hidden, rng),
      attn_norm(store, name + "/mhsa/ln", cfg.d_model),
      attention(store, name + "/mhsa", cfg.d_model, cfg.num_heads, rng),
      conv(store, name + "/conv", cfg, rng),
      ffn2(store, name + "/ffn2", cfg.d_model, cfg.ff_hidden, rng),
      final_norm(store, name + "/final_ln", cfg.d_model) {}

Tensor ConformerBlock::mhsa(const Tensor& hidden, std::span<const Index> lengths,
                            const ForwardContext& ctx, std::vector<double>* weights_out) const {
  Tensor x = attn_norm(hidden);
  return maybe_dropout(attention(x, x, lengths, false, weights_out), ctx);
}

Tensor ConformerBlock::operator()(const Tensor& hidden, std::span<const Index> lengths,
                                  std::span<const double> frame_mask, const ForwardContext& ctx) {
  Tensor x = add(hidden, scale(ffn1(hidden, ctx), 0.5));
  x = add(x, mhsa(x, lengths, ctx));
  x = add(x, conv(x, frame_mask, ctx));
  x = add(x, scale(ffn2(x, ctx), 0.5));
  return final_norm(x);
}

ConformerEncoder::ConformerEncoder(const EncoderConfig& cfg, ParamStore& store,
                                   std::mt19937_64& rng, const std::string& prefix)
    : cfg_(cfg) {
  validate(cfg);
  const Index d = cfg.d_model;
  const Index f2 = conv_out_length(conv_out_length(cfg.input_dim));
  conv1_ = Linear(store, prefix + "/subsample/conv1", 9, d, rng);
  conv2_ = Linear(store, prefix + "/subsample/conv2", 9 * d, d, rng);
  project_ = Linear(store, prefix + "/subsample/project", f2 * d, d, rng);
  for (Index i = 0; i < cfg.num_blocks; ++i) {
    blocks_.emplace_back(store, prefix + "/block" + std::to_string(i), cfg, rng);
  }
}

Tensor ConformerEncoder::subsample(const Tensor& features,
                                   std::span<const Index> out_lengths) const {
  if (features.rank() != 3 || features.dim(2) != cfg_.input_dim) {
    throw DimensionError("subsample: expected [B, T, " + std::to_string(cfg_.input_dim) +
                         "], got " + shape_string(features.shape()));
  }
  const Index B = features.dim(0), T = features.dim(1), F = features.dim(2);
  // Time x frequency image with one input channel, channel-last.
  Tensor x = reshape(features, {B, T, F, 1});
  x = swish(conv1_(extract_patches2d(x, 3, 3, 2)));
  x = conv2_(extract_patches2d(x, 3, 3, 2));
  const Index t2 = x.dim(1);
  x = project_(reshape(x, {B, t2, x.dim(2) * x.dim(3)}));
  return mask_rows(x, length_mask(out_lengths, t2));
}

PaddedBatch ConformerEncoder::encode(const PaddedBatch& batch, const ForwardContext& ctx) {
  const Index B = batch.batch_size();
  if (batch.features.rank() != 3 || batch.features.dim(0) != B) {
    throw DimensionError("encode: features " + shape_string(batch.features.shape()) +
                         " do not match " + std::to_string(B) + " lengths");
  }
  PaddedBatch out = batch;
  out.out_lengths.clear();
  for (Index len : batch.lengths) {
    if (len > batch.features.dim(1)) throw DimensionError("encode: length exceeds T_max");
    out.out_lengths.push_back(subsampled_length(len));
  }
  Tensor h = subsample(batch.features, out.out_lengths);
  h = maybe_dropout(add_positional_encoding(h), ctx);
  const auto mask = length_mask(out.out_lengths, h.dim(1));
  for (auto& block : blocks_) h = block(h, out.out_lengths, mask, ctx);
  out.hidden = mask_rows(h, mask);
  return out;
}

}  // namespace dualdec
