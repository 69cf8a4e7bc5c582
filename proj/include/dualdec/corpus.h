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

#ifndef DUALDEC_CORPUS_H_
#define DUALDEC_CORPUS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dualdec/checkpoint.h"
#include "dualdec/encoder.h"
#include "dualdec/features.h"
#include "dualdec/manifest.h"
#include "dualdec/vocab.h"

namespace dualdec {

struct SynthConfig {
  int num_languages = 3;
  int phones_shared = 10;
  // Each language writes a seeded subset of this many shared phones, one
  // grapheme per phone from its own script.
  int graphemes_per_language = 8;
  int utterances_per_language = 60;
  int dev_utterances_per_language = 20;
  int min_phones = 4;
  int max_phones = 10;
  // Probability of a word boundary between two phones.
  double word_break_prob = 0.25;
  int frames_per_phone = 8;
  double noise_std = 0.05;
  // Scale of the per-language offset added to every template.
  double language_offset_std = 0.5;
  // Require every language to cover all shared phones.
  bool full_phone_inventory = false;
  // Render tones to 16 kHz audio and compute log-mel features instead of
  // drawing features directly.
  bool waveform = false;
  std::uint64_t seed = 42;
};

void validate(const SynthConfig& cfg);

struct SynthCorpus {
  Manifest train;
  Manifest dev;
  // "feat/<utt_id>" -> [T, 40]; unnormalized.
  NamedTensors features;
  // utt_id -> audio, waveform mode only.
  std::vector<std::pair<std::string, Waveform>> waves;
  // [language][phone] noise-free 40-dim frame; index phones_shared is the
  // word-gap template.
  std::vector<std::vector<std::vector<double>>> templates;
  // Per language, (phone, grapheme) pairs of the injective map.
  std::vector<std::vector<std::pair<int, char32_t>>> grapheme_maps;
};

std::string synth_phone_name(int phone);
SynthCorpus generate_corpus(const SynthConfig& cfg);
// Writes train.tsv, dev.tsv and feats.ddcf (or wav/ files) into dir.
void write_corpus(const SynthCorpus& corpus, const std::string& dir);

struct Utterance {
  FeatureSequence features;  // normalized when the manifest carries stats
  TargetBundle targets;
  std::string text;
};

struct Dataset {
  std::vector<Utterance> utterances;
  OovStats oov;
};

// Loads features for every row (tensor container entry or WAV file) and
// encodes its targets. With speed_perturb, WAV rows are also added at speed
// factors 0.9 and 1.1 under ids "sp0.9-<id>" and "sp1.1-<id>".
Dataset load_dataset(const Manifest& manifest, const VocabPair& vocabs, bool speed_perturb = false);

// Drops utterances the encoder or CTC cannot handle (too short, or a CTC
// target longer than the subsampled input). Returns the number removed.
Index drop_untrainable(Dataset& data, std::vector<std::string>* warnings = nullptr);

struct Batch {
  PaddedBatch inputs;
  std::vector<Index> indices;  // into Dataset::utterances
  std::vector<std::vector<Index>> ctc_targets;
  // Teacher forcing: inputs are the id sequence without its final eos and
  // outputs the sequence without its leading sos. Inputs pad with eos,
  // outputs with kPadId; both are row-major [B, *_len].
  Index grapheme_len = 0;
  std::vector<Index> grapheme_in;
  std::vector<Index> grapheme_out;
  Index phoneme_len = 0;
  std::vector<Index> phoneme_in;
  std::vector<Index> phoneme_out;

  Index size() const { return static_cast<Index>(indices.size()); }
};

// Collates utterances, sorted by descending feature length.
Batch collate(const Dataset& data, std::vector<Index> indices);

// Shuffles with `shuffle_seed` (manifest order when absent), cuts batches of
// batch_size and sorts each by length. Utterances shorter than the encoder
// minimum are skipped with a warning.
std::vector<Batch> make_batches(const Dataset& data, Index batch_size,
                                std::optional<std::uint64_t> shuffle_seed,
                                std::vector<std::string>* warnings = nullptr);

struct SplitRequest {
  // Per language, either a fraction of utterances or hours of audio.
  double fraction = 0.0;
  double hours = 0.0;
};

// Stratified random split into (train, valid). Hours need frame counts,
// one per row, at 100 frames per second.
std::pair<Manifest, Manifest> split_train_valid(const Manifest& manifest,
                                                const SplitRequest& request, std::uint64_t seed,
                                                std::span<const Index> frame_counts = {});

}  // namespace dualdec

#endif  // DUALDEC_CORPUS_H_
