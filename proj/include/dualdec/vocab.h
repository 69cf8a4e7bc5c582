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

#ifndef DUALDEC_VOCAB_H_
#define DUALDEC_VOCAB_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualdec/manifest.h"
#include "dualdec/tensor.h"

namespace dualdec {

inline constexpr Index kBlankId = 0;
inline constexpr Index kUnkId = 1;
inline constexpr Index kSpaceId = 2;
inline constexpr Index kSosEosId = 3;
inline constexpr Index kNumSpecials = 4;
// Target padding; never a vocabulary id.
inline constexpr Index kPadId = -1;

inline constexpr std::string_view kBlankToken = "<blank>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kSpaceToken = "<space>";
inline constexpr std::string_view kSosEosToken = "<sos/eos>";

// Token inventory: the four specials, then language labels (grapheme vocab
// only), then units sorted by code point. Immutable once built.
class Vocab {
 public:
  enum class Kind { kGrapheme, kPhoneme };

  Vocab() = default;
  Vocab(Kind kind, std::vector<std::string> language_labels, std::vector<std::string> units);

  // Rebuilds from a token list as written by save(): one token per line,
  // line number = id.
  static Vocab from_tokens(Kind kind, const std::vector<std::string>& tokens);
  static Vocab load(const std::string& path, Kind kind);
  void save(const std::string& path) const;

  Kind kind() const { return kind_; }
  Index size() const { return static_cast<Index>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(Index id) const;
  std::optional<Index> find(std::string_view token) const;
  // Unknown tokens map to kUnkId.
  Index id_or_unk(std::string_view token) const;

  bool is_special(Index id) const { return id >= 0 && id < kNumSpecials; }
  bool is_language_label(Index id) const;
  const std::vector<Index>& language_label_ids() const { return label_ids_; }
  const std::vector<std::string>& language_labels() const { return labels_; }

  bool operator==(const Vocab& other) const {
    return kind_ == other.kind_ && tokens_ == other.tokens_;
  }

 private:
  Kind kind_ = Kind::kGrapheme;
  std::vector<std::string> tokens_;
  std::vector<std::string> labels_;
  std::vector<Index> label_ids_;
  std::unordered_map<std::string, Index> index_;
};

struct VocabPair {
  Vocab phoneme;
  Vocab grapheme;
};

// Graphemes are the code points of all transcripts (space excluded);
// phonemes are the whitespace-separated tokens of the phoneme column.
VocabPair build_vocabs(const Manifest& manifest);

struct TargetBundle {
  std::vector<Index> grapheme_ids;  // sos, language, characters, eos
  std::vector<Index> ctc_ids;       // characters and spaces only
  std::vector<Index> phoneme_ids;   // sos, phonemes, eos
};

struct OovStats {
  Index graphemes = 0;
  Index phonemes = 0;
};

// Collapses whitespace runs to one space and trims the ends.
std::string normalize_text(std::string_view text);

// Out-of-vocabulary characters become <unk> in grapheme_ids and are left out
// of ctc_ids; both cases are counted in `oov` when given.
TargetBundle encode_targets(std::string_view text, const std::vector<std::string>& phonemes,
                            std::string_view language, const Vocab& graphemes,
                            const Vocab& phonemes_vocab, OovStats* oov = nullptr);

// Specials and language labels are dropped; <space> becomes ' ' for
// graphemes. Phoneme tokens are joined by single spaces.
std::string decode_ids(std::span<const Index> ids, const Vocab& vocab);
std::optional<std::string> extract_language(std::span<const Index> ids, const Vocab& graphemes);

}  // namespace dualdec

#endif  // DUALDEC_VOCAB_H_
