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

#include <cmath>
#include <functional>
#include <bit>
#include <cstring>
#include <random>

#include "doctest.h"
#include "dualdec/attention.h"
#include "dualdec/checkpoint.h"
#include "dualdec/gradcheck.h"
#include "dualdec/ops.h"
#include "dualdec/optim.h"
#include "test_util.h"

namespace dualdec {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

// Central-difference check of a unary-or-more op through a random readout.
void expect_op_gradients(const std::vector<NamedTensor>& inputs,
                         const std::function<Tensor()>& op, std::uint64_t seed,
                         double tol = 1e-4) {
  std::mt19937_64 rng(seed);
  Tensor probe;
  {
    NoGradGuard ng;
    probe = op();
  }
  Tensor readout = random_tensor(probe.shape(), rng, -1, 1, false);
  auto report = check_gradients([&] { return dot(op(), readout); }, inputs,
                                {.step = 1e-5, .tolerance = tol});
  for (const auto& p : report.params) {
    INFO(p.name << " worst " << p.max_rel_error << " analytic " << p.analytic_at_worst
                << " numeric " << p.numeric_at_worst);
    CHECK(p.max_rel_error <= tol);
  }
}

TEST_CASE("matmul identity and hand arithmetic") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor m({2, 2}, {1, 2, 3, 4});
  auto r = matmul(eye, m);
  CHECK(std::vector<double>(r.data().begin(), r.data().end()) == std::vector<double>{1, 2, 3, 4});
  Tensor b({2, 2}, {5, 6, 7, 8});
  auto p = matmul(m, b);
  CHECK(std::vector<double>(p.data().begin(), p.data().end()) ==
        std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("matmul matches triple loop") {
  std::mt19937_64 rng(11);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({4, 2}, rng);
  auto c = matmul(a, b);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a.data()[i * 4 + k] * b.data()[k * 2 + j];
      CHECK(std::abs(c.data()[i * 2 + j] - s) <= 1e-12);
    }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("softmax basics") {
  auto y = softmax(Tensor({3}, {0, 0, 0}));
  for (double v : y.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Tensor x({3}, {1, 2, 3});
  auto s = softmax(x);
  long double z = std::exp(1.0L) + std::exp(2.0L) + std::exp(3.0L);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(s.data()[i] - static_cast<double>(std::exp(static_cast<long double>(i + 1)) / z)) <= 1e-12);
  }
  Tensor shifted({3}, {1 + 7.5, 2 + 7.5, 3 + 7.5});
  CHECK(max_abs_diff(softmax(shifted).data(), s.data()) <= 1e-15);
}

TEST_CASE("softmax rows sum to one and log_softmax agrees") {
  std::mt19937_64 rng(3);
  for (int axis : {0, 1, -1}) {
    auto x = random_tensor({4, 5, 3}, rng, -20, 20);
    auto s = softmax(x, axis);
    auto ls = log_softmax(x, axis);
    for (std::size_t i = 0; i < s.data().size(); ++i) {
      CHECK(std::abs(std::log(s.data()[i]) - ls.data()[i]) <= 1e-9);
      CHECK(s.data()[i] > 0.0);
      CHECK(s.data()[i] < 1.0);
    }
  }
  auto x = random_tensor({6, 7}, rng, -5, 5);
  auto s = softmax(x);
  for (int r = 0; r < 6; ++r) {
    double t = 0.0;
    for (int c = 0; c < 7; ++c) t += s.data()[r * 7 + c];
    CHECK(std::abs(t - 1.0) <= 1e-9);
  }
}

TEST_CASE("layer_norm") {
  Tensor ones = Tensor::full({3}, 1.0), zeros = Tensor::zeros({3});
  auto c = layer_norm(Tensor({3}, {0.1, 0.1, 0.1}), ones, zeros);
  for (double v : c.data()) CHECK(v == 0.0);

  Tensor beta({3}, {0.5, -1, 2});
  auto cb = layer_norm(Tensor({1, 3}, {4, 4, 4}), ones, beta);
  CHECK(std::vector<double>(cb.data().begin(), cb.data().end()) ==
        std::vector<double>{0.5, -1, 2});

  auto y = layer_norm(Tensor({3}, {1, 2, 3}), ones, zeros, 0.0);
  double m = (y.data()[0] + y.data()[1] + y.data()[2]) / 3;
  double v = 0;
  for (double e : y.data()) v += (e - m) * (e - m);
  CHECK(std::abs(m) <= 1e-10);
  CHECK(std::abs(v / 3 - 1.0) <= 1e-10);

  std::mt19937_64 rng(5);
  auto x = random_tensor({1, 9}, rng, -3, 3);
  auto gamma = random_tensor({9}, rng);
  auto bt = random_tensor({9}, rng);
  auto out = layer_norm(x, gamma, bt, 1e-5);
  double mu = 0;
  for (double e : x.data()) mu += e;
  mu /= 9;
  double var = 0;
  for (double e : x.data()) var += (e - mu) * (e - mu);
  var /= 9;
  for (int i = 0; i < 9; ++i) {
    const double expect = gamma.data()[i] * (x.data()[i] - mu) / std::sqrt(var + 1e-5) + bt.data()[i];
    CHECK(std::abs(out.data()[i] - expect) <= 1e-10);
  }
}

TEST_CASE("depthwise_conv1d") {
  Tensor delta({3, 2}, {0, 0, 1, 1, 0, 0});
  std::mt19937_64 rng(9);
  auto x = random_tensor({5, 2}, rng);
  CHECK(max_abs_diff(depthwise_conv1d(x, delta).data(), x.data()) == 0.0);

  Tensor ones_in = Tensor::full({4, 1}, 1.0);
  auto y = depthwise_conv1d(ones_in, Tensor::full({3, 1}, 1.0));
  CHECK(std::vector<double>(y.data().begin(), y.data().end()) == std::vector<double>{2, 3, 3, 2});

  CHECK_THROWS_AS(depthwise_conv1d(x, Tensor::zeros({4, 2})), DimensionError);

  auto xb = random_tensor({2, 7, 3}, rng);
  auto k = random_tensor({5, 3}, rng);
  auto out = depthwise_conv1d(xb, k);
  for (int b = 0; b < 2; ++b)
    for (int t = 0; t < 7; ++t)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int j = -2; j <= 2; ++j) {
          if (t + j < 0 || t + j >= 7) continue;
          s += k.data()[(j + 2) * 3 + c] * xb.data()[(b * 7 + t + j) * 3 + c];
        }
        CHECK(std::abs(out.data()[(b * 7 + t) * 3 + c] - s) <= 1e-12);
      }
}

TEST_CASE("glu and swish") {
  Tensor x({1, 4}, {3, -2, 0, 0});
  auto g = glu(x);
  CHECK(g.data()[0] == doctest::Approx(1.5));
  CHECK(g.data()[1] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(glu(Tensor::zeros({2, 3})), DimensionError);

  CHECK(swish(Tensor::scalar(0.0)).item() == 0.0);
  auto s = swish(Tensor({2}, {-1, 1}));
  for (int i = 0; i < 2; ++i) {
    const double v = i == 0 ? -1.0 : 1.0;
    CHECK(std::abs(s.data()[i] - v / (1.0 + std::exp(-v))) <= 1e-12);
  }
}

TEST_CASE("backward simple cases") {
  Tensor x({4}, {1, 2, 3, 4}, true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);

  Tensor a({3}, {1, 2, 3}, true), b({3}, {-4, 5, 0.5}, true);
  backward(dot(a, b));
  CHECK(std::vector<double>(a.grad().begin(), a.grad().end()) ==
        std::vector<double>(b.data().begin(), b.data().end()));

  CHECK_THROWS_AS(backward(mul(a, b)), DimensionError);
}

TEST_CASE("shared tensor gradients add across uses") {
  std::mt19937_64 rng(21);
  auto x = random_tensor({3, 3}, rng);
  auto w1 = random_tensor({3, 3}, rng, -1, 1, false);
  auto w2 = random_tensor({3, 3}, rng, -1, 1, false);
  backward(add(dot(swish(x), w1), dot(softmax(x), w2)));
  std::vector<double> both(x.grad().begin(), x.grad().end());
  x.zero_grad();
  backward(dot(swish(x), w1));
  std::vector<double> first(x.grad().begin(), x.grad().end());
  x.zero_grad();
  backward(dot(softmax(x), w2));
  for (std::size_t i = 0; i < both.size(); ++i) {
    CHECK(std::abs(both[i] - (first[i] + x.grad()[i])) <= 1e-12);
  }
}

TEST_CASE("repeated backward accumulates into leaves only once per call") {
  Tensor x({2}, {1, 2}, true);
  auto loss = sum(scale(x, 3.0));
  backward(loss);
  backward(loss);
  CHECK(x.grad()[0] == 6.0);
}

TEST_CASE("no-grad mode records no tape") {
  Tensor x({2}, {1, 2}, true);
  NoGradGuard ng;
  auto y = scale(x, 2.0);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("non-finite outputs are an error") {
  Tensor x({1}, {1e300});
  CHECK_THROWS_AS(mul(x, x), NumericalError);
}

TEST_CASE("finite-difference gradients for every op") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 rng(seed);
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({4, 2}, rng);
    auto c = random_tensor({3, 4}, rng);
    auto bias = random_tensor({4}, rng);
    auto w = random_tensor({4, 5}, rng);
    auto wb = random_tensor({5}, rng);
    auto gam = random_tensor({4}, rng, 0.5, 1.5);
    auto bet = random_tensor({4}, rng);
    auto x3 = random_tensor({2, 5, 4}, rng);
    auto kern = random_tensor({3, 4}, rng);
    auto img = random_tensor({2, 7, 6, 2}, rng);

    expect_op_gradients({{"a", a}, {"b", b}}, [&] { return matmul(a, b); }, seed);
    expect_op_gradients({{"a", a}, {"c", c}}, [&] { return mul(add(a, c), sub(a, c)); }, seed);
    expect_op_gradients({{"a", a}, {"bias", bias}}, [&] { return add_bias(scale(a, 1.7), bias); }, seed);
    expect_op_gradients({{"x", x3}, {"w", w}, {"wb", wb}}, [&] { return linear(x3, w, wb); }, seed);
    expect_op_gradients({{"x", x3}}, [&] { return softmax(x3, 1); }, seed);
    expect_op_gradients({{"x", x3}}, [&] { return log_softmax(x3, -1); }, seed);
    expect_op_gradients({{"a", a}}, [&] { return sigmoid(a); }, seed);
    expect_op_gradients({{"a", a}}, [&] { return swish(scale(a, 3.0)); }, seed);
    expect_op_gradients({{"x", x3}}, [&] { return glu(x3); }, seed);
    expect_op_gradients({{"x", x3}, {"g", gam}, {"b", bet}},
                        [&] { return layer_norm(x3, gam, bet); }, seed);
    expect_op_gradients({{"x", x3}, {"k", kern}}, [&] { return depthwise_conv1d(x3, kern); }, seed);
    expect_op_gradients({{"img", img}}, [&] { return extract_patches2d(img, 3, 3, 2); }, seed);
    expect_op_gradients({{"x", x3}}, [&] { return reshape(x3, {10, 4}); }, seed);
    expect_op_gradients({{"w", w}}, [&] {
      const std::vector<Index> ids = {3, 0, 3, 1};
      return embedding(w, ids);
    }, seed);
    const std::vector<double> rmask = {1, 1, 0, 1, 0, 1, 1, 1, 0, 1};
    expect_op_gradients({{"x", x3}}, [&] { return mask_rows(x3, rmask); }, seed);
    expect_op_gradients({{"x", x3}, {"g", gam}, {"b", bet}},
                        [&] { return masked_batch_norm(x3, rmask, gam, bet, 1e-5); }, seed);
    const std::vector<double> rm = {0.1, -0.2, 0.3, 0.0}, rv = {1.0, 0.5, 2.0, 0.1};
    expect_op_gradients({{"x", x3}, {"g", gam}, {"b", bet}},
                        [&] { return batch_norm_fixed(x3, rmask, rm, rv, gam, bet, 1e-5); }, seed);
    const std::vector<Tensor> terms = {sum(a), sum(c), dot(a, c)};
    expect_op_gradients({{"a", a}, {"c", c}}, [&] {
      const std::vector<Tensor> t = {sum(a), sum(c), dot(a, c)};
      const std::vector<double> wts = {0.3, 0.7, 0.6};
      return weighted_sum(t, wts);
    }, seed);
    expect_op_gradients({{"a", a}}, [&] { return mean(a); }, seed);
  }
}

TEST_CASE("attention op gradients with padding and causal masks") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const AttentionDims dims{.batch = 2, .query_len = 3, .key_len = 4, .heads = 2};
    auto q = random_tensor({6, 4}, rng);
    auto k = random_tensor({8, 4}, rng);
    auto v = random_tensor({8, 4}, rng);
    const std::vector<Index> lens = {4, 2};
    expect_op_gradients({{"q", q}, {"k", k}, {"v", v}},
                        [&] { return scaled_dot_attention(q, k, v, dims, lens, false); }, seed);
    const AttentionDims self{.batch = 2, .query_len = 4, .key_len = 4, .heads = 2};
    auto qs = random_tensor({8, 4}, rng);
    expect_op_gradients({{"q", qs}, {"k", k}, {"v", v}},
                        [&] { return scaled_dot_attention(qs, k, v, self, lens, true); }, seed);
  }
}

TEST_CASE("check_gradients driver") {
  // Quadratic: central differences are exact up to rounding.
  Tensor theta({3}, {0.5, -1.5, 2.0}, true);
  auto rep = check_gradients([&] { return dot(theta, theta); }, {{"theta", theta}});
  CHECK(rep.passed());
  CHECK(rep.max_rel_error <= 1e-9);

  Tensor zero({3}, {0, 0, 0}, true);
  backward(dot(zero, zero));
  for (double g : zero.grad()) CHECK(g == 0.0);

  // A wrong gradient is flagged.
  Tensor p({2}, {0.3, 0.7}, true);
  auto bad = [&] {
    auto y = sum(mul(p, p));
    return make_op_result("bogus", {}, {y.item()}, {y}, [y](const Tensor& o) mutable {
      y.mutable_grad()[0] += 2.0 * o.grad()[0];
    });
  };
  auto rbad = check_gradients(bad, {{"p", p}});
  CHECK_FALSE(rbad.passed());
  CHECK(rbad.params[0].flagged == 2);
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(4);
  Tensor x = Tensor::full({1000}, 1.0);
  auto same = dropout(x, 0.0, rng);
  CHECK(same.same_storage(x));
  auto d = dropout(x, 0.5, rng);
  double s = 0.0;
  for (double v : d.data()) {
    CHECK((v == 0.0 || v == 2.0));
    s += v;
  }
  CHECK(s / 1000 == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("no op overflows on bounded finite inputs") {
  std::mt19937_64 rng(77);
  auto x = random_tensor({4, 6}, rng, -1e3, 1e3, false);
  auto ones = Tensor::full({6}, 1.0), zeros = Tensor::zeros({6});
  CHECK_NOTHROW(softmax(x));
  CHECK_NOTHROW(log_softmax(x));
  CHECK_NOTHROW(sigmoid(x));
  CHECK_NOTHROW(swish(x));
  CHECK_NOTHROW(glu(x));
  CHECK_NOTHROW(layer_norm(x, ones, zeros));
}

TEST_CASE("adam first step and zero gradient") {
  Tensor theta({2}, {1.0, -2.0});
  std::vector<Tensor> params = {theta};
  AdamState st;
  std::vector<std::vector<double>> grads = {{0.5, -0.5}};
  adam_step(params, grads, st);
  CHECK(st.step_count == 1);
  CHECK(std::abs(theta.data()[0] - (1.0 - 0.001)) <= 1e-10);
  CHECK(std::abs(theta.data()[1] - (-2.0 + 0.001)) <= 1e-10);

  Tensor still({2}, {1.0, -2.0});
  std::vector<Tensor> p2 = {still};
  AdamState st2;
  std::vector<std::vector<double>> g0 = {{0.0, 0.0}};
  for (int i = 0; i < 5; ++i) adam_step(p2, g0, st2);
  CHECK(still.data()[0] == 1.0);
  CHECK(still.data()[1] == -2.0);

  std::vector<std::vector<double>> wrong = {{1.0}};
  CHECK_THROWS_AS(adam_step(p2, wrong, st2), DimensionError);
}

TEST_CASE("adam converges on a scalar quadratic") {
  Tensor theta({1}, {0.0}, true);
  std::vector<Tensor> params = {theta};
  AdamState st;
  st.learning_rate = 0.1;
  std::vector<double> dist;
  for (int i = 0; i < 100; ++i) {
    theta.zero_grad();
    auto diff = add_bias(theta, Tensor({1}, {-3.0}));
    backward(dot(diff, diff));
    adam_step(params, st);
    dist.push_back(std::abs(theta.data()[0] - 3.0));
  }
  CHECK(dist.back() < 0.5);
  // The first 30 steps approach 3 from below without overshoot.
  for (int i = 1; i < 30; ++i) CHECK(dist[i] <= dist[i - 1]);
}

TEST_CASE("plateau scheduler halves after patience") {
  PlateauScheduler s(0.5, 2, 1e-5);
  double lr = 1e-3;
  lr = s.observe(1.0, lr);
  lr = s.observe(1.1, lr);
  lr = s.observe(1.1, lr);
  CHECK(lr == 1e-3);
  lr = s.observe(1.2, lr);
  CHECK(lr == 5e-4);
  for (int i = 0; i < 100; ++i) lr = s.observe(2.0, lr);
  CHECK(lr == 1e-5);
}

TEST_CASE("tensor container round trip is bit exact") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    NamedTensors ts;
    const int n = static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      Shape shape;
      const int rank = static_cast<int>(rng() % 4);
      for (int r = 0; r < rank; ++r) shape.push_back(static_cast<Index>(rng() % 4));
      std::vector<double> data(shape_numel(shape));
      for (double& v : data) v = std::bit_cast<double>(rng() & 0x7fefffffffffffffULL);
      ts.emplace_back("t/" + std::to_string(i) + "/\xce\xb1", Tensor(shape, data));
    }
    const std::string bytes = encode_tensors(ts);
    CHECK(bytes.substr(0, 5) == "DDCF1");
    auto back = decode_tensors(bytes);
    REQUIRE(back.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      CHECK(back[i].first == ts[i].first);
      CHECK(back[i].second.shape() == ts[i].second.shape());
      CHECK(std::memcmp(back[i].second.data().data(), ts[i].second.data().data(),
                        ts[i].second.data().size() * sizeof(double)) == 0);
    }
    CHECK(encode_tensors(back) == bytes);
  }
  CHECK_THROWS_AS(decode_tensors("DDCF0"), DataError);
  CHECK_THROWS_AS(decode_tensors(encode_tensors({{"x", Tensor({2}, {1, 2})}}).substr(0, 20)),
                  DataError);
}

TEST_CASE("container layout is little-endian u64 records") {
  const std::string bytes = encode_tensors({{"ab", Tensor({1}, {1.0})}});
  // magic(5) + name_len(8) + "ab"(2) + rank(8) + dim(8) + value(8)
  REQUIRE(bytes.size() == 39);
  CHECK(static_cast<unsigned char>(bytes[5]) == 2);
  CHECK(bytes.substr(13, 2) == "ab");
  CHECK(static_cast<unsigned char>(bytes[15]) == 1);
  CHECK(static_cast<unsigned char>(bytes[23]) == 1);
  // 1.0 = 0x3ff0000000000000
  CHECK(static_cast<unsigned char>(bytes[38]) == 0x3f);
  CHECK(static_cast<unsigned char>(bytes[37]) == 0xf0);
}

}  // namespace
}  // namespace dualdec
