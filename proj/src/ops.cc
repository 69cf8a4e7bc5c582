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

#include "dualdec/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace dualdec {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

Index last_dim(const Tensor& x) { return x.rank() == 0 ? 1 : x.dim(-1); }

inline double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Splits an axis into (outer, length, inner) strides for reductions.
struct AxisSplit {
  Index outer = 1, length = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, int axis) {
  const int r = static_cast<int>(shape.size());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " invalid for " +
                         shape_string(shape));
  }
  AxisSplit s;
  for (int i = 0; i < a; ++i) s.outer *= shape[i];
  s.length = shape[a];
  for (int i = a + 1; i < r; ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  return make_op_result("add", a.shape(), std::move(out), {a, b},
                        [a, b](const Tensor& o) mutable {
                          auto g = o.grad();
                          for (const Tensor* t : {&a, &b}) {
                            if (!t->requires_grad()) continue;
                            auto gt = t->mutable_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
                          }
                        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
  return make_op_result("sub", a.shape(), std::move(out), {a, b},
                        [a, b](const Tensor& o) mutable {
                          auto g = o.grad();
                          if (a.requires_grad()) {
                            auto ga = a.mutable_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                          }
                          if (b.requires_grad()) {
                            auto gb = b.mutable_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                          }
                        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  auto ad = a.data();
  auto bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return make_op_result("mul", a.shape(), std::move(out), {a, b},
                        [a, b](const Tensor& o) mutable {
                          auto g = o.grad();
                          if (a.requires_grad()) {
                            auto ga = a.mutable_grad();
                            auto bd = b.data();
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bd[i];
                          }
                          if (b.requires_grad()) {
                            auto gb = b.mutable_grad();
                            auto ad = a.data();
                            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ad[i];
                          }
                        });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= factor;
  return make_op_result("scale", x.shape(), std::move(out), {x},
                        [x, factor](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto gx = x.mutable_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
                        });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const Index cols = last_dim(x);
  if (bias.numel() != cols) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) +
                         " does not match last dim of " + shape_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  auto bd = bias.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i % cols];
  return make_op_result("add_bias", x.shape(), std::move(out), {x, bias},
                        [x, bias, cols](const Tensor& o) mutable {
                          auto g = o.grad();
                          if (x.requires_grad()) {
                            auto gx = x.mutable_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                          }
                          if (bias.requires_grad()) {
                            auto gb = bias.mutable_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += g[i];
                          }
                        });
}

Tensor weighted_sum(std::span<const Tensor> terms, std::span<const double> weights) {
  if (terms.empty() || terms.size() != weights.size()) {
    throw DimensionError("weighted_sum: need equal, nonzero counts of terms and weights");
  }
  for (const auto& t : terms) require_same_shape("weighted_sum", terms[0], t);
  const std::size_t n = terms[0].data().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = weights[0] * terms[0].data()[i];
    for (std::size_t k = 1; k < terms.size(); ++k) acc = acc + weights[k] * terms[k].data()[i];
    out[i] = acc;
  }
  std::vector<Tensor> inputs(terms.begin(), terms.end());
  std::vector<double> w(weights.begin(), weights.end());
  return make_op_result("weighted_sum", terms[0].shape(), std::move(out), inputs,
                        [inputs, w](const Tensor& o) mutable {
                          auto g = o.grad();
                          for (std::size_t k = 0; k < inputs.size(); ++k) {
                            if (!inputs[k].requires_grad()) continue;
                            auto gt = inputs[k].mutable_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) gt[i] += w[k] * g[i];
                          }
                        });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) +
                         " by " + shape_string(b.shape()));
  }
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  MatMap(out.data(), m, n).noalias() =
      ConstMatMap(a.data().data(), m, k) * ConstMatMap(b.data().data(), k, n);
  return make_op_result(
      "matmul", {m, n}, std::move(out), {a, b}, [a, b, m, k, n](const Tensor& o) mutable {
        ConstMatMap g(o.grad().data(), m, n);
        if (a.requires_grad()) {
          MatMap(a.mutable_grad().data(), m, k).noalias() +=
              g * ConstMatMap(b.data().data(), k, n).transpose();
        }
        if (b.requires_grad()) {
          MatMap(b.mutable_grad().data(), k, n).noalias() +=
              ConstMatMap(a.data().data(), m, k).transpose() * g;
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const Index in = last_dim(x);
  if (weight.rank() != 2 || weight.dim(0) != in) {
    throw DimensionError("linear: input " + shape_string(x.shape()) +
                         " incompatible with weight " + shape_string(weight.shape()));
  }
  const Index out_dim = weight.dim(1);
  if (bias.defined() && bias.numel() != out_dim) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) +
                         " does not match weight " + shape_string(weight.shape()));
  }
  const Index rows = x.numel() / std::max<Index>(in, 1);
  std::vector<double> out(rows * out_dim);
  MatMap y(out.data(), rows, out_dim);
  y.noalias() = ConstMatMap(x.data().data(), rows, in) *
                ConstMatMap(weight.data().data(), in, out_dim);
  if (bias.defined()) {
    y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data().data(), out_dim);
  }
  Shape shape = x.shape();
  shape.back() = out_dim;
  return make_op_result(
      "linear", std::move(shape), std::move(out), {x, weight, bias},
      [x, weight, bias, rows, in, out_dim](const Tensor& o) mutable {
        ConstMatMap g(o.grad().data(), rows, out_dim);
        if (x.requires_grad()) {
          MatMap(x.mutable_grad().data(), rows, in).noalias() +=
              g * ConstMatMap(weight.data().data(), in, out_dim).transpose();
        }
        if (weight.requires_grad()) {
          MatMap(weight.mutable_grad().data(), in, out_dim).noalias() +=
              ConstMatMap(x.data().data(), rows, in).transpose() * g;
        }
        if (bias.defined() && bias.requires_grad()) {
          Eigen::Map<Eigen::RowVectorXd>(bias.mutable_grad().data(), out_dim) +=
              g.colwise().sum();
        }
      });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_op_result("reshape", std::move(shape), std::move(out), {x},
                        [x](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto gx = x.mutable_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                        });
}

namespace {

// Writes softmax (or log-softmax) of each slice along the split axis.
void softmax_kernel(std::span<const double> in, std::vector<double>& out,
                    const AxisSplit& s, bool log_space) {
  for (Index o = 0; o < s.outer; ++o) {
    for (Index i = 0; i < s.inner; ++i) {
      const Index base = o * s.length * s.inner + i;
      double mx = in[base];
      for (Index l = 1; l < s.length; ++l) mx = std::max(mx, in[base + l * s.inner]);
      double z = 0.0;
      for (Index l = 0; l < s.length; ++l) z += std::exp(in[base + l * s.inner] - mx);
      const double log_z = std::log(z) + mx;
      for (Index l = 0; l < s.length; ++l) {
        const Index idx = base + l * s.inner;
        out[idx] = log_space ? in[idx] - log_z : std::exp(in[idx] - log_z);
      }
    }
  }
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<double> out(x.numel());
  softmax_kernel(x.data(), out, s, false);
  return make_op_result("softmax", x.shape(), std::move(out), {x},
                        [x, s](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto y = o.data();
                          auto gx = x.mutable_grad();
                          for (Index a = 0; a < s.outer; ++a) {
                            for (Index i = 0; i < s.inner; ++i) {
                              const Index base = a * s.length * s.inner + i;
                              double dotp = 0.0;
                              for (Index l = 0; l < s.length; ++l) {
                                dotp += g[base + l * s.inner] * y[base + l * s.inner];
                              }
                              for (Index l = 0; l < s.length; ++l) {
                                const Index idx = base + l * s.inner;
                                gx[idx] += y[idx] * (g[idx] - dotp);
                              }
                            }
                          }
                        });
}

Tensor log_softmax(const Tensor& x, int axis) {
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<double> out(x.numel());
  softmax_kernel(x.data(), out, s, true);
  return make_op_result("log_softmax", x.shape(), std::move(out), {x},
                        [x, s](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto y = o.data();
                          auto gx = x.mutable_grad();
                          for (Index a = 0; a < s.outer; ++a) {
                            for (Index i = 0; i < s.inner; ++i) {
                              const Index base = a * s.length * s.inner + i;
                              double gsum = 0.0;
                              for (Index l = 0; l < s.length; ++l) gsum += g[base + l * s.inner];
                              for (Index l = 0; l < s.length; ++l) {
                                const Index idx = base + l * s.inner;
                                gx[idx] += g[idx] - std::exp(y[idx]) * gsum;
                              }
                            }
                          }
                        });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(xd[i]);
  return make_op_result("sigmoid", x.shape(), std::move(out), {x},
                        [x](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto y = o.data();
                          auto gx = x.mutable_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
                        });
}

Tensor swish(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * sigmoid_scalar(xd[i]);
  return make_op_result("swish", x.shape(), std::move(out), {x},
                        [x](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto xd = x.data();
                          auto gx = x.mutable_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const double s = sigmoid_scalar(xd[i]);
                            gx[i] += g[i] * (s + xd[i] * s * (1.0 - s));
                          }
                        });
}

Tensor glu(const Tensor& x) {
  const Index cols = last_dim(x);
  if (x.rank() == 0 || cols % 2 != 0) {
    throw DimensionError("glu: last dimension must be even, got " + shape_string(x.shape()));
  }
  const Index half = cols / 2;
  const Index rows = x.numel() / cols;
  auto xd = x.data();
  std::vector<double> out(rows * half);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < half; ++c) {
      out[r * half + c] = xd[r * cols + c] * sigmoid_scalar(xd[r * cols + half + c]);
    }
  }
  Shape shape = x.shape();
  shape.back() = half;
  return make_op_result("glu", std::move(shape), std::move(out), {x},
                        [x, rows, cols, half](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto xd = x.data();
                          auto gx = x.mutable_grad();
                          for (Index r = 0; r < rows; ++r) {
                            for (Index c = 0; c < half; ++c) {
                              const double a = xd[r * cols + c];
                              const double s = sigmoid_scalar(xd[r * cols + half + c]);
                              const double gv = g[r * half + c];
                              gx[r * cols + c] += gv * s;
                              gx[r * cols + half + c] += gv * a * s * (1.0 - s);
                            }
                          }
                        });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double epsilon) {
  const Index cols = last_dim(x);
  if (gamma.numel() != cols || beta.numel() != cols) {
    throw DimensionError("layer_norm: gamma/beta " + shape_string(gamma.shape()) +
                         " do not match last dim of " + shape_string(x.shape()));
  }
  const Index rows = x.numel() / cols;
  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(rows);
  for (Index r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * cols;
    bool constant = true;
    double mu = 0.0;
    for (Index c = 0; c < cols; ++c) {
      mu += row[c];
      constant = constant && row[c] == row[0];
    }
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (Index c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + epsilon);
    for (Index c = 0; c < cols; ++c) {
      const double h = constant ? 0.0 : (row[c] - mu) * inv_std[r];
      xhat[r * cols + c] = h;
      out[r * cols + c] = gd[c] * h + bd[c];
    }
  }
  return make_op_result(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, rows, cols, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](const Tensor& o) mutable {
        auto g = o.grad();
        auto gd = gamma.data();
        if (gamma.requires_grad()) {
          auto gg = gamma.mutable_grad();
          for (Index i = 0; i < rows * cols; ++i) gg[i % cols] += g[i] * xhat[i];
        }
        if (beta.requires_grad()) {
          auto gb = beta.mutable_grad();
          for (Index i = 0; i < rows * cols; ++i) gb[i % cols] += g[i];
        }
        if (!x.requires_grad()) return;
        auto gx = x.mutable_grad();
        const double n = static_cast<double>(cols);
        for (Index r = 0; r < rows; ++r) {
          double mean_g = 0.0, mean_gx = 0.0;
          for (Index c = 0; c < cols; ++c) {
            const double gh = g[r * cols + c] * gd[c];
            mean_g += gh;
            mean_gx += gh * xhat[r * cols + c];
          }
          mean_g /= n;
          mean_gx /= n;
          for (Index c = 0; c < cols; ++c) {
            const double gh = g[r * cols + c] * gd[c];
            gx[r * cols + c] += inv_std[r] * (gh - mean_g - xhat[r * cols + c] * mean_gx);
          }
        }
      });
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel) {
  if (x.rank() != 2 && x.rank() != 3) {
    throw DimensionError("depthwise_conv1d: expected [T, C] or [B, T, C], got " +
                         shape_string(x.shape()));
  }
  const Index channels = x.dim(-1);
  const Index steps = x.dim(-2);
  const Index batch = x.rank() == 3 ? x.dim(0) : 1;
  if (kernel.rank() != 2 || kernel.dim(1) != channels) {
    throw DimensionError("depthwise_conv1d: kernel " + shape_string(kernel.shape()) +
                         " does not match input " + shape_string(x.shape()));
  }
  const Index width = kernel.dim(0);
  if (width % 2 == 0) {
    throw DimensionError("depthwise_conv1d: kernel size must be odd, got " +
                         std::to_string(width));
  }
  const Index pad = width / 2;
  auto xd = x.data();
  auto kd = kernel.data();
  std::vector<double> out(x.numel(), 0.0);
  for (Index b = 0; b < batch; ++b) {
    const Index off = b * steps * channels;
    for (Index t = 0; t < steps; ++t) {
      double* y = out.data() + off + t * channels;
      for (Index k = 0; k < width; ++k) {
        const Index src = t + k - pad;
        if (src < 0 || src >= steps) continue;
        const double* xin = xd.data() + off + src * channels;
        const double* w = kd.data() + k * channels;
        for (Index c = 0; c < channels; ++c) y[c] += w[c] * xin[c];
      }
    }
  }
  return make_op_result(
      "depthwise_conv1d", x.shape(), std::move(out), {x, kernel},
      [x, kernel, batch, steps, channels, width, pad](const Tensor& o) mutable {
        auto g = o.grad();
        auto xd = x.data();
        auto kd = kernel.data();
        std::span<double> gx, gk;
        if (x.requires_grad()) gx = x.mutable_grad();
        if (kernel.requires_grad()) gk = kernel.mutable_grad();
        for (Index b = 0; b < batch; ++b) {
          const Index off = b * steps * channels;
          for (Index t = 0; t < steps; ++t) {
            const double* gy = g.data() + off + t * channels;
            for (Index k = 0; k < width; ++k) {
              const Index src = t + k - pad;
              if (src < 0 || src >= steps) continue;
              for (Index c = 0; c < channels; ++c) {
                if (!gx.empty()) gx[off + src * channels + c] += gy[c] * kd[k * channels + c];
                if (!gk.empty()) gk[k * channels + c] += gy[c] * xd[off + src * channels + c];
              }
            }
          }
        }
      });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw UsageError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return mul(x, Tensor(x.shape(), std::move(mask)));
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_op_result("sum", {}, {s}, {x}, [x](const Tensor& o) mutable {
    const double g = o.grad()[0];
    for (double& gx : x.mutable_grad()) gx += g;
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

Tensor embedding(const Tensor& weight, std::span<const Index> ids) {
  if (weight.rank() != 2) {
    throw DimensionError("embedding: weight must be 2-D, got " + shape_string(weight.shape()));
  }
  const Index vocab = weight.dim(0), width = weight.dim(1);
  std::vector<Index> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * width);
  auto wd = weight.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= vocab) {
      throw std::out_of_range("embedding: token id " + std::to_string(idx[i]) +
                              " outside vocabulary of size " + std::to_string(vocab));
    }
    std::copy_n(wd.data() + idx[i] * width, width, out.data() + i * width);
  }
  return make_op_result("embedding", {static_cast<Index>(idx.size()), width}, std::move(out),
                        {weight}, [weight, idx, width](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto gw = weight.mutable_grad();
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            for (Index c = 0; c < width; ++c) {
                              gw[idx[i] * width + c] += g[i * width + c];
                            }
                          }
                        });
}

Tensor mask_rows(const Tensor& x, std::span<const double> row_mask) {
  const Index cols = last_dim(x);
  const Index rows = x.numel() / std::max<Index>(cols, 1);
  if (static_cast<Index>(row_mask.size()) != rows) {
    throw DimensionError("mask_rows: " + std::to_string(row_mask.size()) +
                         " mask entries for " + std::to_string(rows) + " rows");
  }
  std::vector<double> m(row_mask.begin(), row_mask.end());
  std::vector<double> out(x.data().begin(), x.data().end());
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) out[r * cols + c] *= m[r];
  }
  return make_op_result("mask_rows", x.shape(), std::move(out), {x},
                        [x, m, cols](const Tensor& o) mutable {
                          auto g = o.grad();
                          auto gx = x.mutable_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * m[i / cols];
                        });
}

Tensor extract_patches2d(const Tensor& x, Index kernel_h, Index kernel_w, Index stride) {
  if (x.rank() != 4) {
    throw DimensionError("extract_patches2d: expected [B, H, W, C], got " +
                         shape_string(x.shape()));
  }
  const Index batch = x.dim(0), height = x.dim(1), width = x.dim(2), chans = x.dim(3);
  if (height < kernel_h || width < kernel_w || stride < 1) {
    throw DimensionError("extract_patches2d: input " + shape_string(x.shape()) +
                         " smaller than kernel");
  }
  const Index out_h = (height - kernel_h) / stride + 1;
  const Index out_w = (width - kernel_w) / stride + 1;
  const Index patch = kernel_h * kernel_w * chans;
  auto xd = x.data();
  std::vector<double> out(batch * out_h * out_w * patch);
  auto src_index = [=](Index b, Index h, Index w) {
    return ((b * height + h) * width + w) * chans;
  };
  for (Index b = 0; b < batch; ++b)
    for (Index i = 0; i < out_h; ++i)
      for (Index j = 0; j < out_w; ++j) {
        double* dst = out.data() + ((b * out_h + i) * out_w + j) * patch;
        for (Index ki = 0; ki < kernel_h; ++ki)
          for (Index kj = 0; kj < kernel_w; ++kj) {
            const double* src = xd.data() + src_index(b, i * stride + ki, j * stride + kj);
            std::copy_n(src, chans, dst + (ki * kernel_w + kj) * chans);
          }
      }
  return make_op_result(
      "extract_patches2d", {batch, out_h, out_w, patch}, std::move(out), {x},
      [=](const Tensor& o) mutable {
        Tensor input = x;
        auto g = o.grad();
        auto gx = input.mutable_grad();
        for (Index b = 0; b < batch; ++b)
          for (Index i = 0; i < out_h; ++i)
            for (Index j = 0; j < out_w; ++j) {
              const double* gsrc = g.data() + ((b * out_h + i) * out_w + j) * patch;
              for (Index ki = 0; ki < kernel_h; ++ki)
                for (Index kj = 0; kj < kernel_w; ++kj) {
                  double* dst = gx.data() + src_index(b, i * stride + ki, j * stride + kj);
                  const double* gp = gsrc + (ki * kernel_w + kj) * chans;
                  for (Index c = 0; c < chans; ++c) dst[c] += gp[c];
                }
            }
      });
}

Tensor masked_batch_norm(const Tensor& x, std::span<const double> row_mask,
                         const Tensor& gamma, const Tensor& beta, double epsilon,
                         std::vector<double>* mean_out, std::vector<double>* var_out) {
  const Index cols = last_dim(x);
  const Index rows = x.numel() / cols;
  if (static_cast<Index>(row_mask.size()) != rows || gamma.numel() != cols ||
      beta.numel() != cols) {
    throw DimensionError("masked_batch_norm: mask/affine sizes do not match " +
                         shape_string(x.shape()));
  }
  std::vector<double> m(row_mask.begin(), row_mask.end());
  double count = 0.0;
  for (double v : m) count += v != 0.0 ? 1.0 : 0.0;
  auto xd = x.data();
  std::vector<double> mu(cols, 0.0), var(cols, 0.0), inv(cols, 0.0);
  if (count > 0) {
    for (Index r = 0; r < rows; ++r) {
      if (m[r] == 0.0) continue;
      for (Index c = 0; c < cols; ++c) mu[c] += xd[r * cols + c];
    }
    for (double& v : mu) v /= count;
    for (Index r = 0; r < rows; ++r) {
      if (m[r] == 0.0) continue;
      for (Index c = 0; c < cols; ++c) {
        const double d = xd[r * cols + c] - mu[c];
        var[c] += d * d;
      }
    }
    for (double& v : var) v /= count;
  }
  for (Index c = 0; c < cols; ++c) inv[c] = 1.0 / std::sqrt(var[c] + epsilon);
  auto gd = gamma.data();
  auto bd = beta.data();
  std::vector<double> xhat(x.numel(), 0.0), out(x.numel(), 0.0);
  for (Index r = 0; r < rows; ++r) {
    if (m[r] == 0.0) continue;
    for (Index c = 0; c < cols; ++c) {
      const Index i = r * cols + c;
      xhat[i] = var[c] == 0.0 ? 0.0 : (xd[i] - mu[c]) * inv[c];
      out[i] = gd[c] * xhat[i] + bd[c];
    }
  }
  if (mean_out) *mean_out = mu;
  if (var_out) *var_out = var;
  return make_op_result(
      "masked_batch_norm", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, m, rows, cols, count, inv = std::move(inv),
       xhat = std::move(xhat)](const Tensor& o) mutable {
        auto g = o.grad();
        auto gd = gamma.data();
        std::vector<double> sum_g(cols, 0.0), sum_gx(cols, 0.0);
        for (Index r = 0; r < rows; ++r) {
          if (m[r] == 0.0) continue;
          for (Index c = 0; c < cols; ++c) {
            sum_g[c] += g[r * cols + c];
            sum_gx[c] += g[r * cols + c] * xhat[r * cols + c];
          }
        }
        if (gamma.requires_grad()) {
          auto gg = gamma.mutable_grad();
          for (Index c = 0; c < cols; ++c) gg[c] += sum_gx[c];
        }
        if (beta.requires_grad()) {
          auto gb = beta.mutable_grad();
          for (Index c = 0; c < cols; ++c) gb[c] += sum_g[c];
        }
        if (!x.requires_grad() || count == 0) return;
        auto gx = x.mutable_grad();
        for (Index r = 0; r < rows; ++r) {
          if (m[r] == 0.0) continue;
          for (Index c = 0; c < cols; ++c) {
            const Index i = r * cols + c;
            gx[i] += gd[c] * inv[c] / count *
                     (count * g[i] - sum_g[c] - xhat[i] * sum_gx[c]);
          }
        }
      });
}

Tensor batch_norm_fixed(const Tensor& x, std::span<const double> row_mask,
                        std::span<const double> running_mean,
                        std::span<const double> running_var, const Tensor& gamma,
                        const Tensor& beta, double epsilon) {
  const Index cols = last_dim(x);
  const Index rows = x.numel() / cols;
  if (static_cast<Index>(row_mask.size()) != rows ||
      static_cast<Index>(running_mean.size()) != cols ||
      static_cast<Index>(running_var.size()) != cols) {
    throw DimensionError("batch_norm_fixed: statistics do not match " +
                         shape_string(x.shape()));
  }
  std::vector<double> m(row_mask.begin(), row_mask.end());
  std::vector<double> mu(running_mean.begin(), running_mean.end());
  std::vector<double> inv(cols);
  for (Index c = 0; c < cols; ++c) inv[c] = 1.0 / std::sqrt(running_var[c] + epsilon);
  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  std::vector<double> out(x.numel(), 0.0);
  for (Index r = 0; r < rows; ++r) {
    if (m[r] == 0.0) continue;
    for (Index c = 0; c < cols; ++c) {
      const Index i = r * cols + c;
      out[i] = gd[c] * (xd[i] - mu[c]) * inv[c] + bd[c];
    }
  }
  return make_op_result(
      "batch_norm_fixed", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, m, mu, inv, rows, cols](const Tensor& o) mutable {
        auto g = o.grad();
        auto xd = x.data();
        auto gd = gamma.data();
        std::span<double> gx, gg, gb;
        if (x.requires_grad()) gx = x.mutable_grad();
        if (gamma.requires_grad()) gg = gamma.mutable_grad();
        if (beta.requires_grad()) gb = beta.mutable_grad();
        for (Index r = 0; r < rows; ++r) {
          if (m[r] == 0.0) continue;
          for (Index c = 0; c < cols; ++c) {
            const Index i = r * cols + c;
            const double h = (xd[i] - mu[c]) * inv[c];
            if (!gx.empty()) gx[i] += g[i] * gd[c] * inv[c];
            if (!gg.empty()) gg[c] += g[i] * h;
            if (!gb.empty()) gb[c] += g[i];
          }
        }
      });
}

}  // namespace dualdec
