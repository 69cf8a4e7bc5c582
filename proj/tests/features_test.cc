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
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dualdec/features.h"

namespace dualdec {
namespace {

Waveform tone(double hz, Index n, double amp = 0.5) {
  Waveform w;
  w.samples.resize(n);
  for (Index i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / kSampleRate);
  }
  return w;
}

TEST_CASE("frame count formula") {
  Waveform w;
  w.samples.assign(16000, 0.0);
  CHECK(compute_log_mel(w).frames.dim(0) == 98);
  CHECK(compute_log_mel(w).valid_length == 98);

  std::mt19937_64 rng(1);
  std::vector<Index> lengths = {400, 401, 559, 560, 64000};
  for (int i = 0; i < 60; ++i) lengths.push_back(std::uniform_int_distribution<Index>(400, 64000)(rng));
  for (Index n : lengths) {
    Waveform x;
    x.samples.assign(n, 0.01);
    CHECK(compute_log_mel(x).frames.dim(0) == 1 + (n - 400) / 160);
  }
}

TEST_CASE("silence hits the log floor") {
  Waveform w;
  w.samples.assign(800, 0.0);
  auto f = compute_log_mel(w);
  for (double v : f.frames.data()) CHECK(v == std::log(1e-10));
}

TEST_CASE("too-short input is rejected") {
  Waveform w;
  w.samples.assign(399, 0.1);
  try {
    compute_log_mel(w);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("shorter than one window") != std::string::npos);
  }
}

TEST_CASE("pure tone peaks in the filter centred nearest its frequency") {
  // Centres from the mel formula directly, independent of the filterbank code.
  const double mel_hi = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  int nearest = -1;
  double best = 1e9;
  for (int m = 0; m < 40; ++m) {
    const double mel = mel_hi * (m + 1) / 41.0;
    const double hz = 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    if (std::abs(hz - 1000.0) < best) {
      best = std::abs(hz - 1000.0);
      nearest = m;
    }
  }
  auto f = compute_log_mel(tone(1000.0, 16000));
  auto d = f.frames.data();
  for (Index t = 0; t < f.frames.dim(0); ++t) {
    int arg = 0;
    for (int m = 1; m < 40; ++m)
      if (d[t * 40 + m] > d[t * 40 + arg]) arg = m;
    CHECK(arg == nearest);
  }
}

TEST_CASE("log-mel is scale covariant") {
  auto base = tone(440.0, 4000);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (double& s : base.samples) s += noise(rng);
  auto scaled = base;
  const double c = 0.37;
  for (double& s : scaled.samples) s *= c;
  auto a = compute_log_mel(base), b = compute_log_mel(scaled);
  for (std::size_t i = 0; i < a.frames.data().size(); ++i) {
    if (b.frames.data()[i] <= std::log(1e-10) + 1.0) continue;
    CHECK(std::abs(b.frames.data()[i] - a.frames.data()[i] - 2.0 * std::log(c)) <= 1e-6);
  }
  auto again = compute_log_mel(base);
  CHECK(std::equal(a.frames.data().begin(), a.frames.data().end(), again.frames.data().begin()));
}

TEST_CASE("speed perturbation") {
  auto w = tone(300.0, 9000);
  auto same = speed_perturb(w, 1.0);
  CHECK(same.samples == w.samples);
  CHECK(speed_perturb(w, 0.9).samples.size() == 10000);
  CHECK(speed_perturb(w, 1.1).samples.size() == 8182);
  CHECK_THROWS_AS(speed_perturb(w, 1.2), UsageError);

  Waveform ramp;
  const Index n = 1000;
  for (Index i = 0; i < n; ++i) ramp.samples.push_back(static_cast<double>(i) / n);
  auto fast = speed_perturb(ramp, 1.1);
  for (std::size_t i = 0; i < fast.samples.size(); ++i) {
    const double expect = std::min(static_cast<double>(i) * 1.1, static_cast<double>(n - 1)) / n;
    CHECK(std::abs(fast.samples[i] - expect) <= 1e-9);
  }
}

FeatureSequence random_features(Index frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(frames * 40);
  for (double& x : v) x = d(rng);
  FeatureSequence fs;
  fs.frames = Tensor({frames, 40}, std::move(v));
  fs.valid_length = frames;
  return fs;
}

TEST_CASE("spec_augment") {
  auto f = random_features(50, 3);
  SpecAugmentConfig none{.num_freq_masks = 0, .num_time_masks = 0};
  auto same = spec_augment(f, none);
  CHECK(std::equal(f.frames.data().begin(), f.frames.data().end(), same.frames.data().begin()));

  SpecAugmentConfig full{.num_freq_masks = 1, .max_freq_width = 40, .min_freq_width = 40,
                         .num_time_masks = 0};
  auto masked = spec_augment(f, full);
  double mu = 0.0;
  for (double v : f.frames.data()) mu += v;
  mu /= static_cast<double>(f.frames.numel());
  for (double v : masked.frames.data()) CHECK(v == doctest::Approx(mu).epsilon(1e-12));

  SpecAugmentConfig seeded{.num_freq_masks = 2, .max_freq_width = 10, .num_time_masks = 2,
                           .max_time_width = 20, .seed = 7};
  auto a = spec_augment(f, seeded), b = spec_augment(f, seeded);
  CHECK(std::equal(a.frames.data().begin(), a.frames.data().end(), b.frames.data().begin()));

  CHECK_THROWS_AS(spec_augment(f, SpecAugmentConfig{.max_freq_width = 41}), UsageError);
}

TEST_CASE("spec_augment preserves shape and finiteness") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto f = random_features(5 + static_cast<Index>(seed), seed);
    SpecAugmentConfig cfg{.num_freq_masks = 3, .max_freq_width = 27, .num_time_masks = 3,
                          .max_time_width = 40, .seed = seed};
    auto g = spec_augment(f, cfg);
    CHECK(g.frames.shape() == f.frames.shape());
    for (double v : g.frames.data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("wav round trip") {
  const auto path = std::filesystem::temp_directory_path() / "dualdec_features_test.wav";
  auto w = tone(1000.0, 1234, 0.8);
  write_wav(path.string(), w);
  auto r = read_wav(path.string());
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_wav("/nonexistent/x.wav"), DataError);
}

TEST_CASE("feature normalization") {
  std::vector<FeatureSequence> corpus = {random_features(30, 1), random_features(20, 2)};
  for (auto& fs : corpus) {
    for (double& v : fs.frames.mutable_data()) v = 3.0 * v + 5.0;
  }
  auto stats = compute_feature_stats(corpus);
  for (auto& fs : corpus) normalize_features(fs, stats);
  auto again = compute_feature_stats(corpus);
  for (int f = 0; f < 40; ++f) {
    CHECK(std::abs(again.mean[f]) <= 1e-9);
    CHECK(std::abs(again.stddev[f] - 1.0) <= 1e-9);
  }
}

}  // namespace
}  // namespace dualdec
