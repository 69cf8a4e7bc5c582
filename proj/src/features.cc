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

#include "dualdec/features.h"

#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

namespace dualdec {

namespace {

std::uint32_t read_le(const std::string& b, std::size_t pos, int bytes) {
  std::uint32_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
  }
  return v;
}

void write_le(std::ofstream& f, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) f.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::vector<double> periodic_hann() {
  std::vector<double> w(kWindowLength);
  for (Index n = 0; n < kWindowLength; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kWindowLength);
  }
  return w;
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open audio file " + path);
  const std::string b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) {
    throw DataError(path + ": not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  Waveform wave;
  while (pos + 8 <= b.size()) {
    const std::string id = b.substr(pos, 4);
    const std::size_t size = read_le(b, pos + 4, 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw DataError(path + ": truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw DataError(path + ": short fmt chunk");
      const auto format = read_le(b, body, 2);
      const auto channels = read_le(b, body + 2, 2);
      const auto rate = read_le(b, body + 4, 4);
      const auto bits = read_le(b, body + 14, 2);
      if (format != 1 || channels != 1 || bits != 16) {
        throw DataError(path + ": expected mono 16-bit PCM");
      }
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        throw DataError(path + ": expected 16000 Hz audio, got " + std::to_string(rate));
      }
      wave.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError(path + ": data chunk before fmt chunk");
      wave.samples.resize(size / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_le(b, body + 2 * i, 2));
        wave.samples[i] = raw / 32768.0;
      }
      return wave;
    }
    pos = body + size + (size & 1);
  }
  throw DataError(path + ": no data chunk");
}

void write_wav(const std::string& path, const Waveform& wave) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  f.write("RIFF", 4);
  write_le(f, 36 + data_bytes, 4);
  f.write("WAVEfmt ", 8);
  write_le(f, 16, 4);
  write_le(f, 1, 2);
  write_le(f, 1, 2);
  write_le(f, static_cast<std::uint32_t>(wave.sample_rate), 4);
  write_le(f, static_cast<std::uint32_t>(wave.sample_rate * 2), 4);
  write_le(f, 2, 2);
  write_le(f, 16, 2);
  f.write("data", 4);
  write_le(f, data_bytes, 4);
  for (double s : wave.samples) {
    const double clipped = std::clamp(s, -1.0, 32767.0 / 32768.0);
    const auto v = static_cast<std::int16_t>(std::lround(clipped * 32768.0));
    write_le(f, static_cast<std::uint16_t>(v), 2);
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies() {
  const double lo = hz_to_mel(kMelLowHz), hi = hz_to_mel(kMelHighHz);
  std::vector<double> centers(kNumMelBins);
  for (Index m = 0; m < kNumMelBins; ++m) {
    centers[m] = mel_to_hz(lo + (hi - lo) * static_cast<double>(m + 1) / (kNumMelBins + 1));
  }
  return centers;
}

const std::vector<double>& mel_filterbank() {
  static const std::vector<double> bank = [] {
    const Index bins = kFftLength / 2 + 1;
    const double lo = hz_to_mel(kMelLowHz), hi = hz_to_mel(kMelHighHz);
    std::vector<double> edges(kNumMelBins + 2);
    for (Index i = 0; i < kNumMelBins + 2; ++i) {
      edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (kNumMelBins + 1));
    }
    std::vector<double> w(bins * kNumMelBins, 0.0);
    for (Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kFftLength;
      for (Index m = 0; m < kNumMelBins; ++m) {
        const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
        double v = 0.0;
        if (f > left && f <= center) {
          v = (f - left) / (center - left);
        } else if (f > center && f < right) {
          v = (right - f) / (right - center);
        }
        w[k * kNumMelBins + m] = v;
      }
    }
    return w;
  }();
  return bank;
}

Index num_frames(Index num_samples) {
  if (num_samples < kWindowLength) return 0;
  return 1 + (num_samples - kWindowLength) / kFrameShift;
}

FeatureSequence compute_log_mel(const Waveform& wave) {
  if (wave.sample_rate != kSampleRate) {
    throw DataError("expected 16000 Hz audio, got " + std::to_string(wave.sample_rate));
  }
  const Index n = static_cast<Index>(wave.samples.size());
  if (n < kWindowLength) {
    throw DataError("utterance shorter than one window (" + std::to_string(n) +
                    " samples < " + std::to_string(kWindowLength) + ")");
  }
  const Index frames = num_frames(n);
  const Index bins = kFftLength / 2 + 1;
  static const std::vector<double> window = periodic_hann();
  const auto& bank = mel_filterbank();

  Eigen::FFT<double> fft;
  std::vector<double> buffer(kFftLength);
  std::vector<std::complex<double>> spectrum;
  std::vector<double> power(bins);
  std::vector<double> out(frames * kNumMelBins);
  for (Index t = 0; t < frames; ++t) {
    std::fill(buffer.begin(), buffer.end(), 0.0);
    for (Index i = 0; i < kWindowLength; ++i) {
      buffer[i] = wave.samples[t * kFrameShift + i] * window[i];
    }
    fft.fwd(spectrum, buffer);
    for (Index k = 0; k < bins; ++k) power[k] = std::norm(spectrum[k]);
    for (Index m = 0; m < kNumMelBins; ++m) {
      double e = 0.0;
      for (Index k = 0; k < bins; ++k) e += bank[k * kNumMelBins + m] * power[k];
      out[t * kNumMelBins + m] = std::log(std::max(e, kLogFloor));
    }
  }
  FeatureSequence fs;
  fs.frames = Tensor({frames, kNumMelBins}, std::move(out));
  fs.valid_length = frames;
  return fs;
}

Waveform speed_perturb(const Waveform& wave, double factor) {
  const bool allowed = std::abs(factor - 0.9) < 1e-12 || std::abs(factor - 1.0) < 1e-12 ||
                       std::abs(factor - 1.1) < 1e-12;
  if (!allowed) {
    throw UsageError("speed perturbation factor must be 0.9, 1.0 or 1.1, got " +
                     std::to_string(factor));
  }
  if (std::abs(factor - 1.0) < 1e-12) return wave;
  const Index n = static_cast<Index>(wave.samples.size());
  const Index m = std::llround(static_cast<double>(n) / factor);
  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.resize(m);
  for (Index i = 0; i < m; ++i) {
    const double pos = static_cast<double>(i) * factor;
    const Index lo = static_cast<Index>(std::floor(pos));
    if (lo >= n - 1) {
      out.samples[i] = wave.samples[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(lo);
    out.samples[i] = (1.0 - frac) * wave.samples[lo] + frac * wave.samples[lo + 1];
  }
  return out;
}

void validate(const SpecAugmentConfig& cfg) {
  if (cfg.num_freq_masks < 0 || cfg.num_time_masks < 0 || cfg.min_freq_width < 0 ||
      cfg.min_time_width < 0 || cfg.max_freq_width < cfg.min_freq_width ||
      cfg.max_time_width < cfg.min_time_width || cfg.max_freq_width > kNumMelBins) {
    throw UsageError("invalid SpecAugment configuration");
  }
}

FeatureSequence spec_augment(const FeatureSequence& features, const SpecAugmentConfig& cfg) {
  validate(cfg);
  FeatureSequence out = features;
  out.frames = features.frames.detach();
  if (cfg.num_freq_masks == 0 && cfg.num_time_masks == 0) return out;
  const Index dim = features.frames.dim(1);
  const Index frames = features.valid_length;
  if (frames == 0) return out;
  auto data = out.frames.mutable_data();
  double fill = 0.0;
  for (Index i = 0; i < frames * dim; ++i) fill += data[i];
  fill /= static_cast<double>(frames * dim);

  std::mt19937_64 rng(cfg.seed);
  for (int k = 0; k < cfg.num_freq_masks; ++k) {
    const Index w = std::uniform_int_distribution<Index>(cfg.min_freq_width,
                                                         std::min(cfg.max_freq_width, dim))(rng);
    const Index start = std::uniform_int_distribution<Index>(0, dim - w)(rng);
    for (Index t = 0; t < frames; ++t)
      for (Index f = start; f < start + w; ++f) data[t * dim + f] = fill;
  }
  for (int k = 0; k < cfg.num_time_masks; ++k) {
    const Index hi = std::min(cfg.max_time_width, frames);
    const Index w = std::uniform_int_distribution<Index>(std::min(cfg.min_time_width, hi), hi)(rng);
    const Index start = std::uniform_int_distribution<Index>(0, frames - w)(rng);
    for (Index t = start; t < start + w; ++t)
      for (Index f = 0; f < dim; ++f) data[t * dim + f] = fill;
  }
  return out;
}

FeatureStats compute_feature_stats(const std::vector<FeatureSequence>& corpus) {
  FeatureStats stats;
  stats.mean.assign(kNumMelBins, 0.0);
  stats.stddev.assign(kNumMelBins, 1.0);
  std::vector<double> sq(kNumMelBins, 0.0);
  double count = 0.0;
  for (const auto& fs : corpus) {
    auto d = fs.frames.data();
    const Index dim = fs.frames.dim(1);
    if (dim != kNumMelBins) throw DimensionError("feature dimension must be 40");
    for (Index t = 0; t < fs.valid_length; ++t) {
      for (Index f = 0; f < dim; ++f) {
        stats.mean[f] += d[t * dim + f];
        sq[f] += d[t * dim + f] * d[t * dim + f];
      }
    }
    count += static_cast<double>(fs.valid_length);
  }
  if (count == 0) return stats;
  for (Index f = 0; f < kNumMelBins; ++f) {
    stats.mean[f] /= count;
    const double var = std::max(0.0, sq[f] / count - stats.mean[f] * stats.mean[f]);
    stats.stddev[f] = std::max(std::sqrt(var), 1e-8);
  }
  return stats;
}

void normalize_features(FeatureSequence& features, const FeatureStats& stats) {
  const Index dim = features.frames.dim(1);
  if (static_cast<Index>(stats.mean.size()) != dim ||
      static_cast<Index>(stats.stddev.size()) != dim) {
    throw DimensionError("feature statistics do not match feature dimension");
  }
  features.frames = features.frames.detach();
  auto d = features.frames.mutable_data();
  for (Index t = 0; t < features.frames.dim(0); ++t)
    for (Index f = 0; f < dim; ++f) d[t * dim + f] = (d[t * dim + f] - stats.mean[f]) / stats.stddev[f];
}

}  // namespace dualdec
