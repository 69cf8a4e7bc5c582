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

#include <filesystem>
#include <set>

#include "doctest.h"
#include "dualdec/corpus.h"
#include "dualdec/errors.h"
#include "dualdec/utf8.h"

namespace dualdec {
namespace {

namespace fs = std::filesystem;

SynthConfig small_synth() {
  SynthConfig cfg;
  cfg.utterances_per_language = 15;
  cfg.dev_utterances_per_language = 4;
  return cfg;
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("dualdec_corpus_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST_CASE("generation is a pure function of the seed") {
  auto a = generate_corpus(small_synth());
  auto b = generate_corpus(small_synth());
  CHECK(format_manifest(a.train) == format_manifest(b.train));
  CHECK(format_manifest(a.dev) == format_manifest(b.dev));
  CHECK(encode_tensors(a.features) == encode_tensors(b.features));
  SynthConfig other = small_synth();
  other.seed = 43;
  CHECK(encode_tensors(generate_corpus(other).features) != encode_tensors(a.features));
  CHECK(a.train.rows.size() == 45);
  CHECK(a.dev.rows.size() == 12);
}

TEST_CASE("length arithmetic and noise-free templates") {
  SynthConfig cfg = small_synth();
  cfg.min_phones = cfg.max_phones = 5;
  cfg.word_break_prob = 0.0;
  cfg.noise_std = 0.0;
  auto c = generate_corpus(cfg);
  for (const auto& [name, t] : c.features) CHECK(t.dim(0) == 40);
  // Each 8-frame block equals the template of its phone.
  const auto& row = c.train.rows[0];
  auto phones = split_phonemes(row.phonemes);
  REQUIRE(phones.size() == 5);
  auto frames = c.features[0].second.data();
  for (int k = 0; k < 5; ++k) {
    int p = 0;
    while (synth_phone_name(p) != phones[k]) ++p;
    for (int r = 0; r < 8; ++r)
      for (int f = 0; f < 40; ++f) CHECK(frames[(k * 8 + r) * 40 + f] == c.templates[0][p][f]);
  }
}

TEST_CASE("per-language maps are injective over disjoint scripts") {
  auto c = generate_corpus(small_synth());
  std::set<char32_t> seen;
  for (const auto& map : c.grapheme_maps) {
    CHECK(map.size() == 8);
    std::set<char32_t> own;
    for (const auto& [phone, g] : map) {
      CHECK(own.insert(g).second);
      CHECK(seen.count(g) == 0);
    }
    seen.insert(own.begin(), own.end());
  }
  for (const auto& r : c.train.rows) {
    const int l = r.language[2] - '1';
    for (char32_t ch : utf8_decode(r.text)) {
      if (ch == U' ') continue;
      bool found = false;
      for (const auto& [p, g] : c.grapheme_maps[l]) found |= g == ch;
      CHECK(found);
    }
  }
  SynthConfig strict = small_synth();
  strict.full_phone_inventory = true;
  CHECK_THROWS_AS(generate_corpus(strict), UsageError);
  strict.graphemes_per_language = 10;
  CHECK_NOTHROW(generate_corpus(strict));
}

TEST_CASE("written corpus loads into batches") {
  auto c = generate_corpus(small_synth());
  auto dir = scratch("batches");
  write_corpus(c, dir.string());
  Manifest train = load_manifest((dir / "train.tsv").string());
  REQUIRE(train.stats.has_value());
  auto vocabs = build_vocabs(train);
  CHECK(vocabs.grapheme.size() == 4 + 3 + 24);
  Dataset data = load_dataset(train, vocabs);
  REQUIRE(data.utterances.size() == 45);
  CHECK(data.oov.graphemes == 0);

  auto batches = make_batches(data, 20, 7);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 20);
  CHECK(batches[1].size() == 20);
  CHECK(batches[2].size() == 5);
  auto again = make_batches(data, 20, 7);
  auto other = make_batches(data, 20, 8);
  CHECK(again[0].indices == batches[0].indices);
  CHECK(other[0].indices != batches[0].indices);

  std::set<Index> covered;
  for (const auto& b : batches) {
    for (Index i = 0; i < b.size(); ++i) {
      CHECK(covered.insert(b.indices[i]).second);
      if (i > 0) CHECK(b.inputs.lengths[i] <= b.inputs.lengths[i - 1]);
      // The output row ends with eos, then padding.
      Index last = -1;
      for (Index t = 0; t < b.grapheme_len; ++t) {
        if (b.grapheme_out[i * b.grapheme_len + t] != kPadId) last = t;
      }
      CHECK(b.grapheme_out[i * b.grapheme_len + last] == kSosEosId);
      CHECK(b.grapheme_in[i * b.grapheme_len] == kSosEosId);
      CHECK(vocabs.grapheme.is_language_label(b.grapheme_out[i * b.grapheme_len]));
    }
  }
  CHECK(covered.size() == 45);
  fs::remove_all(dir);
}

TEST_CASE("short utterances are skipped with a warning") {
  Dataset data;
  for (Index len : {30, 8, 12}) {
    Utterance u;
    u.features.frames = Tensor::zeros({len, 40});
    u.features.valid_length = len;
    u.features.utterance_id = "u" + std::to_string(len);
    u.targets.grapheme_ids = {3, 4, 3};
    u.targets.phoneme_ids = {3, 3};
    data.utterances.push_back(u);
  }
  std::vector<std::string> warnings;
  auto batches = make_batches(data, 20, std::nullopt, &warnings);
  REQUIRE(batches.size() == 1);
  CHECK(batches[0].indices == std::vector<Index>{0, 2});
  CHECK(warnings.size() == 1);
}

TEST_CASE("stratified train/valid split") {
  SynthConfig cfg = small_synth();
  cfg.utterances_per_language = 100;
  auto c = generate_corpus(cfg);
  auto [train, valid] = split_train_valid(c.train, {.fraction = 0.1}, 3);
  CHECK(valid.rows.size() == 30);
  CHECK(train.rows.size() == 270);
  std::set<std::string> ids;
  for (const auto& r : train.rows) ids.insert(r.utt_id);
  for (const auto& r : valid.rows) CHECK(ids.insert(r.utt_id).second);
  CHECK(ids.size() == 300);
  for (const auto& label : c.train.language_labels()) {
    CHECK(filter_languages(valid, {label}).rows.size() == 10);
  }
  std::vector<Index> frames(300, 360000);  // one hour each
  auto [th, vh] = split_train_valid(c.train, {.hours = 2.0}, 3, frames);
  CHECK(vh.rows.size() == 6);
  CHECK_THROWS_AS(split_train_valid(c.train, {.hours = 200.0}, 3, frames), DataError);
  CHECK_THROWS_AS(split_train_valid(c.train, {.fraction = 1.5}, 3), UsageError);
}

TEST_CASE("waveform mode runs through the log-mel front end") {
  SynthConfig cfg = small_synth();
  cfg.utterances_per_language = 2;
  cfg.dev_utterances_per_language = 1;
  cfg.waveform = true;
  auto c = generate_corpus(cfg);
  CHECK(c.waves.size() == 9);
  auto dir = scratch("wave");
  write_corpus(c, dir.string());
  Manifest m = load_manifest((dir / "train.tsv").string());
  auto vocabs = build_vocabs(m);
  Dataset data = load_dataset(m, vocabs);
  const auto& first = data.utterances[0].features;
  const auto units = split_phonemes(m.rows[0].phonemes).size();
  CHECK(first.valid_length == static_cast<Index>(units) * cfg.frames_per_phone);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace dualdec
