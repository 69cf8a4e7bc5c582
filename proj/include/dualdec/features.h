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

#ifndef DUALDEC_FEATURES_H_
#define DUALDEC_FEATURES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dualdec/tensor.h"

namespace dualdec {

inline constexpr int kSampleRate = 16000;
inline constexpr Index kWindowLength = 400;   // 25 ms
inline constexpr Index kFrameShift = 160;     // 10 ms
inline constexpr Index kFftLength = 512;
inline constexpr Index kNumMelBins = 40;
inline constexpr double kMelLowHz = 0.0;
inline constexpr double kMelHighHz = 8000.0;
inline constexpr double kLogFloor = 1e-10;

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = kSampleRate;
};

struct FeatureSequence {
  Tensor frames;  // [T, 40]
  Index valid_length = 0;
  std::string utterance_id;
  std::string language;
};

// Mono 16-bit PCM, 16 kHz.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& wave);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Row-major [kFftLength/2 + 1, kNumMelBins] triangular filter weights.
const std::vector<double>& mel_filterbank();
// Center frequency (Hz) of each filter.
std::vector<double> mel_center_frequencies();

Index num_frames(Index num_samples);

// 40-dim log-Mel: periodic Hann window, 512-point power spectrum, triangular
// filters on the HTK mel scale between 0 and 8 kHz, natural log floored at
// 1e-10.
FeatureSequence compute_log_mel(const Waveform& wave);

// Linear-interpolation resampling to round(N / factor) samples;
// factor must be one of 0.9, 1.0, 1.1.
Waveform speed_perturb(const Waveform& wave, double factor);

struct SpecAugmentConfig {
  int num_freq_masks = 2;
  Index max_freq_width = 8;
  Index min_freq_width = 0;
  int num_time_masks = 2;
  Index max_time_width = 10;
  Index min_time_width = 0;
  std::uint64_t seed = 0;
};

void validate(const SpecAugmentConfig& cfg);

// Frequency and time masking (no time warping). Masked cells take the mean of
// the utterance's valid frames. Same seed, same masks.
FeatureSequence spec_augment(const FeatureSequence& features, const SpecAugmentConfig& cfg);

// Global per-dimension mean/std used for corpus-level normalization.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

FeatureStats compute_feature_stats(const std::vector<FeatureSequence>& corpus);
void normalize_features(FeatureSequence& features, const FeatureStats& stats);

}  // namespace dualdec

#endif  // DUALDEC_FEATURES_H_
