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

#include "dualdec/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>

#include "dualdec/errors.h"
#include "dualdec/losses.h"
#include "dualdec/utf8.h"

namespace dualdec {
namespace {

// First letters of the Latin, Greek and Cyrillic lowercase alphabets.
constexpr char32_t kScriptStart[] = {U'a', U'α', U'а'};
constexpr int kScriptSize = 24;
const char* const kPhoneNames[] = {"a", "i", "u", "k", "g", "t", "d", "n", "m", "s"};

std::string utt_name(int lang, const char* split, int i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "l%d_%s_%04d", lang + 1, split, i);
  return buf;
}

bool is_wav(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".wav") == 0;
}

double tone_hz(int phone) { return 250.0 + 300.0 * phone; }
double language_tone_hz(int lang) { return 7600.0 - 300.0 * lang; }

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.num_languages < 1 || cfg.num_languages > 3) {
    throw UsageError("num_languages must be 1, 2 or 3");
  }
  if (cfg.phones_shared < 2 || cfg.graphemes_per_language < 2 ||
      cfg.graphemes_per_language > kScriptSize) {
    throw UsageError("need at least 2 phones and 2..24 graphemes per language");
  }
  if (cfg.full_phone_inventory && cfg.graphemes_per_language < cfg.phones_shared) {
    throw UsageError("graphemes_per_language (" + std::to_string(cfg.graphemes_per_language) +
                     ") < phones_shared (" + std::to_string(cfg.phones_shared) +
                     "): the phone-to-grapheme map cannot be injective");
  }
  if (cfg.min_phones < 1 || cfg.max_phones < cfg.min_phones) {
    throw UsageError("need 1 <= min_phones <= max_phones");
  }
  if (cfg.frames_per_phone < 1 || cfg.min_phones * cfg.frames_per_phone < kMinEncoderFrames) {
    throw UsageError("min_phones * frames_per_phone must reach " +
                     std::to_string(kMinEncoderFrames) + " frames");
  }
  if (cfg.utterances_per_language < 0 || cfg.dev_utterances_per_language < 0) {
    throw UsageError("utterance counts must be non-negative");
  }
  if (cfg.noise_std < 0 || cfg.language_offset_std < 0 || cfg.word_break_prob < 0 ||
      cfg.word_break_prob > 1) {
    throw UsageError("noise and probability settings out of range");
  }
  if (cfg.waveform && tone_hz(cfg.phones_shared - 1) >= language_tone_hz(cfg.num_languages - 1)) {
    throw UsageError("too many phones for the waveform tone layout");
  }
}

std::string synth_phone_name(int phone) {
  if (phone < 10) return kPhoneNames[phone];
  return "p" + std::to_string(phone);
}

SynthCorpus generate_corpus(const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int P = cfg.phones_shared;
  SynthCorpus corpus;

  std::vector<std::vector<double>> base(P + 1, std::vector<double>(kNumMelBins));
  for (auto& row : base)
    for (double& v : row) v = normal(rng);
  corpus.templates.resize(cfg.num_languages);
  for (int l = 0; l < cfg.num_languages; ++l) {
    std::vector<double> offset(kNumMelBins);
    for (double& v : offset) v = cfg.language_offset_std * normal(rng);
    for (int p = 0; p <= P; ++p) {
      std::vector<double> t(kNumMelBins);
      for (int f = 0; f < kNumMelBins; ++f) t[f] = base[p][f] + offset[f];
      corpus.templates[l].push_back(std::move(t));
    }
  }

  std::vector<std::vector<int>> inventories(cfg.num_languages);
  std::vector<std::map<int, char32_t>> maps(cfg.num_languages);
  corpus.grapheme_maps.resize(cfg.num_languages);
  for (int l = 0; l < cfg.num_languages; ++l) {
    std::vector<int> phones(P);
    for (int p = 0; p < P; ++p) phones[p] = p;
    std::shuffle(phones.begin(), phones.end(), rng);
    phones.resize(std::min(P, cfg.graphemes_per_language));
    std::sort(phones.begin(), phones.end());
    std::vector<char32_t> letters(cfg.graphemes_per_language);
    for (int g = 0; g < cfg.graphemes_per_language; ++g) letters[g] = kScriptStart[l] + g;
    std::shuffle(letters.begin(), letters.end(), rng);
    for (std::size_t i = 0; i < phones.size(); ++i) {
      maps[l][phones[i]] = letters[i];
      corpus.grapheme_maps[l].emplace_back(phones[i], letters[i]);
    }
    inventories[l] = phones;
  }

  std::vector<FeatureSequence> train_feats;
  auto make_split = [&](Manifest& manifest, const char* split, int count, bool is_train) {
    for (int l = 0; l < cfg.num_languages; ++l) {
      const auto& inv = inventories[l];
      for (int i = 0; i < count; ++i) {
        const std::string id = utt_name(l, split, i);
        const int n = cfg.min_phones + static_cast<int>(rng() % (cfg.max_phones - cfg.min_phones + 1));
        // Units: phone ids, or P for a word gap.
        std::vector<int> units;
        int prev = -1;
        for (int k = 0; k < n; ++k) {
          if (k > 0 && std::uniform_real_distribution<double>(0, 1)(rng) < cfg.word_break_prob) {
            units.push_back(P);
          }
          int p;
          do {
            p = inv[rng() % inv.size()];
          } while (p == prev);
          units.push_back(p);
          prev = p;
        }
        std::string text, phonemes;
        for (int u : units) {
          if (!phonemes.empty()) phonemes += ' ';
          if (u == P) {
            text += ' ';
            phonemes += "<space>";
          } else {
            text += utf8_encode(maps[l][u]);
            phonemes += synth_phone_name(u);
          }
        }
        const Index frames = static_cast<Index>(units.size()) * cfg.frames_per_phone;
        FeatureSequence fs;
        fs.utterance_id = id;
        fs.valid_length = frames;
        if (cfg.waveform) {
          const Index seg = cfg.frames_per_phone * kFrameShift;
          Waveform wave;
          wave.samples.assign(frames * kFrameShift + (kWindowLength - kFrameShift), 0.0);
          const double lang_hz = language_tone_hz(l);
          for (std::size_t s = 0; s < wave.samples.size(); ++s) {
            const Index u = std::min<Index>(static_cast<Index>(s) / seg, units.size() - 1);
            const double t = static_cast<double>(s) / kSampleRate;
            double x = 0.1 * std::sin(2 * std::numbers::pi * lang_hz * t);
            if (units[u] != P) x += 0.4 * std::sin(2 * std::numbers::pi * tone_hz(units[u]) * t);
            x += 0.1 * cfg.noise_std * normal(rng);
            wave.samples[s] = std::clamp(x, -1.0, 1.0);
          }
          fs = compute_log_mel(wave);
          corpus.waves.emplace_back(id, std::move(wave));
          manifest.rows.push_back({id, "wav/" + id + ".wav", text, kSyntheticLanguageLabels[l], phonemes});
        } else {
          std::vector<double> data;
          data.reserve(frames * kNumMelBins);
          for (int u : units) {
            for (int r = 0; r < cfg.frames_per_phone; ++r) {
              for (int f = 0; f < kNumMelBins; ++f) {
                const double noise = cfg.noise_std > 0 ? cfg.noise_std * normal(rng) : 0.0;
                data.push_back(corpus.templates[l][u][f] + noise);
              }
            }
          }
          fs.frames = Tensor({frames, kNumMelBins}, std::move(data));
          corpus.features.emplace_back("feat/" + id, fs.frames);
          manifest.rows.push_back({id, "feats.ddcf", text, kSyntheticLanguageLabels[l], phonemes});
        }
        if (is_train) train_feats.push_back(std::move(fs));
      }
    }
  };
  make_split(corpus.train, "train", cfg.utterances_per_language, true);
  make_split(corpus.dev, "dev", cfg.dev_utterances_per_language, false);
  const FeatureStats stats = compute_feature_stats(train_feats);
  corpus.train.stats = stats;
  corpus.dev.stats = stats;
  return corpus;
}

void write_corpus(const SynthCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  if (!corpus.features.empty()) save_tensors((fs::path(dir) / "feats.ddcf").string(), corpus.features);
  if (!corpus.waves.empty()) {
    fs::create_directories(fs::path(dir) / "wav");
    for (const auto& [id, wave] : corpus.waves) {
      write_wav((fs::path(dir) / "wav" / (id + ".wav")).string(), wave);
    }
  }
  save_manifest((fs::path(dir) / "train.tsv").string(), corpus.train);
  save_manifest((fs::path(dir) / "dev.tsv").string(), corpus.dev);
}

Dataset load_dataset(const Manifest& manifest, const VocabPair& vocabs, bool speed_perturb) {
  Dataset data;
  std::map<std::string, std::map<std::string, Tensor>> containers;
  for (const auto& row : manifest.rows) {
    const std::string path = manifest.resolve(row.path);
    Utterance utt;
    std::optional<Waveform> wave;
    if (is_wav(path)) {
      wave = read_wav(path);
      utt.features = compute_log_mel(*wave);
    } else {
      auto it = containers.find(path);
      if (it == containers.end()) {
        std::map<std::string, Tensor> entries;
        for (auto& [name, t] : load_tensors(path)) entries.emplace(name, t);
        it = containers.emplace(path, std::move(entries)).first;
      }
      auto entry = it->second.find("feat/" + row.utt_id);
      if (entry == it->second.end()) {
        throw DataError("no features 'feat/" + row.utt_id + "' in " + path);
      }
      if (entry->second.rank() != 2 || entry->second.dim(1) != kNumMelBins) {
        throw DataError("features for " + row.utt_id + " have shape " +
                        shape_string(entry->second.shape()));
      }
      utt.features.frames = entry->second;
      utt.features.valid_length = entry->second.dim(0);
    }
    utt.features.utterance_id = row.utt_id;
    utt.features.language = row.language;
    if (manifest.stats) normalize_features(utt.features, *manifest.stats);
    utt.text = normalize_text(row.text);
    utt.targets = encode_targets(row.text, split_phonemes(row.phonemes), row.language,
                                 vocabs.grapheme, vocabs.phoneme, &data.oov);
    if (speed_perturb && wave) {
      for (const char* factor : {"0.9", "1.1"}) {
        Utterance copy = utt;
        copy.features = compute_log_mel(dualdec::speed_perturb(*wave, std::stod(factor)));
        copy.features.utterance_id = std::string("sp") + factor + "-" + row.utt_id;
        copy.features.language = row.language;
        if (manifest.stats) normalize_features(copy.features, *manifest.stats);
        data.utterances.push_back(std::move(copy));
      }
    }
    data.utterances.push_back(std::move(utt));
  }
  return data;
}

Index drop_untrainable(Dataset& data, std::vector<std::string>* warnings) {
  const auto before = data.utterances.size();
  std::erase_if(data.utterances, [&](const Utterance& u) {
    const Index len = u.features.valid_length;
    std::string reason;
    if (len < kMinEncoderFrames) {
      reason = "shorter than the subsampling minimum";
    } else if (ctc_min_frames(u.targets.ctc_ids) > subsampled_length(len)) {
      reason = "CTC target unalignable in " + std::to_string(subsampled_length(len)) + " frames";
    } else {
      return false;
    }
    if (warnings != nullptr) warnings->push_back("skipping " + u.features.utterance_id + ": " + reason);
    return true;
  });
  return static_cast<Index>(before - data.utterances.size());
}

Batch collate(const Dataset& data, std::vector<Index> indices) {
  if (indices.empty()) throw DataError("cannot collate an empty batch");
  std::stable_sort(indices.begin(), indices.end(), [&](Index a, Index b) {
    return data.utterances[a].features.valid_length > data.utterances[b].features.valid_length;
  });
  Batch batch;
  batch.indices = indices;
  std::vector<Tensor> frames;
  for (Index i : indices) {
    const auto& u = data.utterances[i];
    const auto& fs = u.features;
    if (fs.valid_length == fs.frames.dim(0)) {
      frames.push_back(fs.frames);
    } else {
      auto d = fs.frames.data().first(fs.valid_length * fs.frames.dim(1));
      frames.emplace_back(Shape{fs.valid_length, fs.frames.dim(1)},
                          std::vector<double>(d.begin(), d.end()));
    }
    batch.ctc_targets.push_back(u.targets.ctc_ids);
    batch.grapheme_len = std::max<Index>(batch.grapheme_len, u.targets.grapheme_ids.size() - 1);
    batch.phoneme_len = std::max<Index>(batch.phoneme_len, u.targets.phoneme_ids.size() - 1);
  }
  batch.inputs = pad_features(frames);
  auto teacher = [&](auto member, Index len, std::vector<Index>& in, std::vector<Index>& out) {
    in.assign(indices.size() * len, kSosEosId);
    out.assign(indices.size() * len, kPadId);
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const auto& ids = data.utterances[indices[b]].targets.*member;
      for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
        in[b * len + t] = ids[t];
        out[b * len + t] = ids[t + 1];
      }
    }
  };
  teacher(&TargetBundle::grapheme_ids, batch.grapheme_len, batch.grapheme_in, batch.grapheme_out);
  teacher(&TargetBundle::phoneme_ids, batch.phoneme_len, batch.phoneme_in, batch.phoneme_out);
  return batch;
}

std::vector<Batch> make_batches(const Dataset& data, Index batch_size,
                                std::optional<std::uint64_t> shuffle_seed,
                                std::vector<std::string>* warnings) {
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  std::vector<Index> order;
  for (Index i = 0; i < static_cast<Index>(data.utterances.size()); ++i) {
    const auto& fs = data.utterances[i].features;
    if (fs.valid_length < kMinEncoderFrames) {
      if (warnings != nullptr) {
        warnings->push_back("skipping " + fs.utterance_id + ": " + std::to_string(fs.valid_length) +
                            " frames is shorter than the subsampling minimum");
      }
      continue;
    }
    order.push_back(i);
  }
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    batches.push_back(collate(data, std::vector<Index>(order.begin() + start, order.begin() + end)));
  }
  return batches;
}

std::pair<Manifest, Manifest> split_train_valid(const Manifest& manifest,
                                                const SplitRequest& request, std::uint64_t seed,
                                                std::span<const Index> frame_counts) {
  const bool by_hours = request.hours > 0.0;
  if (by_hours == (request.fraction > 0.0)) {
    throw UsageError("split: give exactly one of a fraction or a number of hours");
  }
  if (!by_hours && request.fraction >= 1.0) throw UsageError("split: fraction must lie in (0, 1)");
  if (by_hours && frame_counts.size() != manifest.rows.size()) {
    throw UsageError("split by hours needs one frame count per manifest row");
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> in_valid(manifest.rows.size(), false);
  for (const auto& label : manifest.language_labels()) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
      if (manifest.rows[i].language == label) rows.push_back(i);
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t take = 0;
    if (by_hours) {
      double total = 0.0, needed = request.hours * 3600.0;
      for (std::size_t i : rows) total += frame_counts[i] * 0.01;
      if (needed >= total) {
        throw DataError("split: " + std::to_string(request.hours) + " h requested for " + label +
                        " but only " + std::to_string(total / 3600.0) + " h available");
      }
      double acc = 0.0;
      while (take < rows.size() && acc < needed) acc += frame_counts[rows[take++]] * 0.01;
    } else {
      take = static_cast<std::size_t>(std::lround(request.fraction * rows.size()));
      if (take >= rows.size()) {
        throw DataError("split: validation share would take every " + label + " utterance");
      }
    }
    for (std::size_t k = 0; k < take; ++k) in_valid[rows[k]] = true;
  }
  Manifest train = manifest, valid = manifest;
  train.rows.clear();
  valid.rows.clear();
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    (in_valid[i] ? valid : train).rows.push_back(manifest.rows[i]);
  }
  return {std::move(train), std::move(valid)};
}

}  // namespace dualdec
