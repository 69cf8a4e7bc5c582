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

#include "dualdec/attention.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dualdec {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Stride = Eigen::OuterStride<>;
using Block = Eigen::Map<RowMat, 0, Stride>;
using ConstBlock = Eigen::Map<const RowMat, 0, Stride>;

}  // namespace

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const AttentionDims& dims,
                            std::span<const Index> key_lengths, bool causal,
                            std::vector<double>* weights_out) {
  const Index width = q.dim(-1);
  if (k.dim(-1) != width || v.dim(-1) != width || width % dims.heads != 0) {
    throw DimensionError("attention: q/k/v widths " + shape_string(q.shape()) + ", " +
                         shape_string(k.shape()) + ", " + shape_string(v.shape()) +
                         " incompatible with " + std::to_string(dims.heads) + " heads");
  }
  if (q.numel() != dims.batch * dims.query_len * width ||
      k.numel() != dims.batch * dims.key_len * width || k.numel() != v.numel()) {
    throw DimensionError("attention: tensor sizes do not match batch/length dims");
  }
  if (static_cast<Index>(key_lengths.size()) != dims.batch) {
    throw DimensionError("attention: need one key length per batch entry");
  }
  const Index d_head = width / dims.heads;
  const Index tq = dims.query_len, tk = dims.key_len;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));

  std::vector<double> probs(dims.batch * dims.heads * tq * tk, 0.0);
  std::vector<double> out(q.numel(), 0.0);
  std::vector<Index> lengths(key_lengths.begin(), key_lengths.end());
  const Stride stride(width);

  for (Index b = 0; b < dims.batch; ++b) {
    const Index visible_keys = std::clamp<Index>(lengths[b], 0, tk);
    for (Index h = 0; h < dims.heads; ++h) {
      ConstBlock qb(q.data().data() + b * tq * width + h * d_head, tq, d_head, stride);
      ConstBlock kb(k.data().data() + b * tk * width + h * d_head, tk, d_head, stride);
      ConstBlock vb(v.data().data() + b * tk * width + h * d_head, tk, d_head, stride);
      Eigen::Map<RowMat> p(probs.data() + (b * dims.heads + h) * tq * tk, tq, tk);
      p.noalias() = (qb * kb.transpose()) * inv_sqrt;
      for (Index i = 0; i < tq; ++i) {
        const Index visible = causal ? std::min(visible_keys, i + 1) : visible_keys;
        if (visible <= 0) {
          p.row(i).setZero();
          continue;
        }
        const double mx = p.row(i).head(visible).maxCoeff();
        double z = 0.0;
        for (Index j = 0; j < visible; ++j) {
          p(i, j) = std::exp(p(i, j) - mx);
          z += p(i, j);
        }
        for (Index j = 0; j < visible; ++j) p(i, j) /= z;
        for (Index j = visible; j < tk; ++j) p(i, j) = 0.0;
      }
      Block ob(out.data() + b * tq * width + h * d_head, tq, d_head, stride);
      ob.noalias() = p * vb;
    }
  }
  if (weights_out) *weights_out = probs;

  return make_op_result(
      "scaled_dot_attention", q.shape(), std::move(out), {q, k, v},
      [q, k, v, dims, width, d_head, inv_sqrt,
       probs = std::move(probs)](const Tensor& o) mutable {
        const Index tq = dims.query_len, tk = dims.key_len;
        const Stride stride(width);
        std::span<double> gq, gk, gv;
        if (q.requires_grad()) gq = q.mutable_grad();
        if (k.requires_grad()) gk = k.mutable_grad();
        if (v.requires_grad()) gv = v.mutable_grad();
        RowMat dp(tq, tk), ds(tq, tk);
        for (Index b = 0; b < dims.batch; ++b) {
          for (Index h = 0; h < dims.heads; ++h) {
            const Index off_q = b * tq * width + h * d_head;
            const Index off_k = b * tk * width + h * d_head;
            ConstBlock go(o.grad().data() + off_q, tq, d_head, stride);
            ConstBlock qb(q.data().data() + off_q, tq, d_head, stride);
            ConstBlock kb(k.data().data() + off_k, tk, d_head, stride);
            ConstBlock vb(v.data().data() + off_k, tk, d_head, stride);
            Eigen::Map<const RowMat> p(probs.data() + (b * dims.heads + h) * tq * tk, tq, tk);
            if (!gv.empty()) {
              Block(gv.data() + off_k, tk, d_head, stride).noalias() += p.transpose() * go;
            }
            dp.noalias() = go * vb.transpose();
            for (Index i = 0; i < tq; ++i) {
              const double row_dot = p.row(i).dot(dp.row(i));
              ds.row(i) = p.row(i).cwiseProduct(dp.row(i).array().matrix()) -
                          p.row(i) * row_dot;
            }
            ds *= inv_sqrt;
            if (!gq.empty()) {
              Block(gq.data() + off_q, tq, d_head, stride).noalias() += ds * kb;
            }
            if (!gk.empty()) {
              Block(gk.data() + off_k, tk, d_head, stride).noalias() += ds.transpose() * qb;
            }
          }
        }
      });
}

}  // namespace dualdec
