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

#include "dualdec/vocab.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "dualdec/utf8.h"

namespace dualdec {

namespace {

bool looks_like_label(const std::string& t) {
  return t.size() >= 3 && t.front() == '[' && t.back() == ']';
}

}  // namespace

Vocab::Vocab(Kind kind, std::vector<std::string> language_labels, std::vector<std::string> units)
    : kind_(kind), labels_(std::move(language_labels)) {
  tokens_ = {std::string(kBlankToken), std::string(kUnkToken), std::string(kSpaceToken),
             std::string(kSosEosToken)};
  for (const auto& l : labels_) {
    label_ids_.push_back(static_cast<Index>(tokens_.size()));
    tokens_.push_back(l);
  }
  for (auto& u : units) tokens_.push_back(std::move(u));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<Index>(i)).second) {
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocab Vocab::from_tokens(Kind kind, const std::vector<std::string>& tokens) {
  if (tokens.size() < static_cast<std::size_t>(kNumSpecials) || tokens[0] != kBlankToken ||
      tokens[1] != kUnkToken || tokens[2] != kSpaceToken || tokens[3] != kSosEosToken) {
    throw DataError("vocabulary must start with <blank>, <unk>, <space>, <sos/eos>");
  }
  std::vector<std::string> labels, units;
  std::size_t i = kNumSpecials;
  for (; i < tokens.size() && looks_like_label(tokens[i]); ++i) labels.push_back(tokens[i]);
  for (; i < tokens.size(); ++i) units.push_back(tokens[i]);
  return Vocab(kind, std::move(labels), std::move(units));
}

Vocab Vocab::load(const std::string& path, Kind kind) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open vocabulary " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(kind, tokens);
}

void Vocab::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  for (const auto& t : tokens_) f << t << '\n';
}

const std::string& Vocab::token(Index id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(size()));
  }
  return tokens_[id];
}

std::optional<Index> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index Vocab::id_or_unk(std::string_view token) const { return find(token).value_or(kUnkId); }

bool Vocab::is_language_label(Index id) const {
  return std::find(label_ids_.begin(), label_ids_.end(), id) != label_ids_.end();
}

VocabPair build_vocabs(const Manifest& manifest) {
  if (manifest.rows.empty()) throw DataError("cannot build vocabularies from an empty manifest");
  std::set<char32_t> chars;
  std::set<std::string> phones;
  for (const auto& r : manifest.rows) {
    for (char32_t c : utf8_decode(r.text)) {
      if (c != U' ' && c != U'\t') chars.insert(c);
    }
    for (auto& p : split_phonemes(r.phonemes)) {
      if (p != kSpaceToken) phones.insert(std::move(p));
    }
  }
  std::vector<std::string> units;
  for (char32_t c : chars) units.push_back(utf8_encode(c));
  // std::set<std::string> orders UTF-8 bytewise, which is code point order.
  std::vector<std::string> phone_units(phones.begin(), phones.end());
  return {Vocab(Vocab::Kind::kPhoneme, {}, std::move(phone_units)),
          Vocab(Vocab::Kind::kGrapheme, manifest.language_labels(), std::move(units))};
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

TargetBundle encode_targets(std::string_view text, const std::vector<std::string>& phonemes,
                            std::string_view language, const Vocab& graphemes,
                            const Vocab& phonemes_vocab, OovStats* oov) {
  const auto lang = graphemes.find(language);
  if (!lang || !graphemes.is_language_label(*lang)) {
    throw DataError("language label '" + std::string(language) +
                    "' is not in the grapheme vocabulary");
  }
  TargetBundle t;
  t.grapheme_ids = {kSosEosId, *lang};
  for (char32_t c : utf8_decode(normalize_text(text))) {
    if (c == U' ') {
      t.grapheme_ids.push_back(kSpaceId);
      t.ctc_ids.push_back(kSpaceId);
      continue;
    }
    const auto id = graphemes.find(utf8_encode(c));
    if (!id || graphemes.is_special(*id) || graphemes.is_language_label(*id)) {
      t.grapheme_ids.push_back(kUnkId);
      if (oov) ++oov->graphemes;
      continue;
    }
    t.grapheme_ids.push_back(*id);
    t.ctc_ids.push_back(*id);
  }
  t.grapheme_ids.push_back(kSosEosId);

  t.phoneme_ids = {kSosEosId};
  for (const auto& p : phonemes) {
    if (p == kSpaceToken) {
      t.phoneme_ids.push_back(kSpaceId);
      continue;
    }
    const auto id = phonemes_vocab.find(p);
    if (!id || phonemes_vocab.is_special(*id)) {
      t.phoneme_ids.push_back(kUnkId);
      if (oov) ++oov->phonemes;
      continue;
    }
    t.phoneme_ids.push_back(*id);
  }
  t.phoneme_ids.push_back(kSosEosId);
  return t;
}

std::string decode_ids(std::span<const Index> ids, const Vocab& vocab) {
  std::string out;
  const bool graphemes = vocab.kind() == Vocab::Kind::kGrapheme;
  for (Index id : ids) {
    const std::string& tok = vocab.token(id);
    if (id == kSpaceId) {
      if (graphemes) {
        out.push_back(' ');
      } else {
        if (!out.empty()) out.push_back(' ');
        out += kSpaceToken;
      }
      continue;
    }
    if (vocab.is_special(id) || vocab.is_language_label(id)) continue;
    if (!graphemes && !out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

std::optional<std::string> extract_language(std::span<const Index> ids, const Vocab& graphemes) {
  for (Index id : ids) {
    graphemes.token(id);
    if (graphemes.is_language_label(id)) return graphemes.token(id);
  }
  return std::nullopt;
}

}  // namespace dualdec
