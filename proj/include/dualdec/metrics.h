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

#ifndef DUALDEC_METRICS_H_
#define DUALDEC_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dualdec {

struct EditCounts {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long ref_length = 0;

  long errors() const { return substitutions + deletions + insertions; }
  EditCounts& operator+=(const EditCounts& o);
};

// Unit-cost Levenshtein alignment. The S/D/I split comes from one optimal
// alignment, preferring substitution (or match), then deletion, on ties.
EditCounts edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp);

// Whitespace-separated words.
std::vector<std::string> split_words(const std::string& text);
// UTF-8 code points, spaces excluded.
std::vector<std::string> split_chars(const std::string& text);

struct ErrorRate {
  double percent = 0.0;
  EditCounts counts;
};

// Corpus-level rates: summed errors over summed reference lengths, x100.
// Throws DataError when the references hold no units.
ErrorRate wer(std::span<const std::string> refs, std::span<const std::string> hyps);
ErrorRate cer(std::span<const std::string> refs, std::span<const std::string> hyps);

// Percentage of hypotheses whose language equals the reference label. A
// missing hypothesis language counts as wrong.
double language_id_accuracy(std::span<const std::optional<std::string>> hyps,
                            std::span<const std::string> refs);

struct ScoredUtterance {
  std::string utt_id;
  std::string language;  // reference label
  std::string reference;
  std::string hypothesis;
  std::optional<std::string> hyp_language;
  double log_score = 0.0;
  // The token right after sos is a language label.
  bool label_first = false;
};

struct LanguageScore {
  std::string language;  // "all" for the pooled row
  double wer = 0.0;
  double cer = 0.0;
  double lid_acc = 0.0;
  long n_utts = 0;
  long n_words = 0;
  EditCounts word_counts;
  EditCounts char_counts;
};

// One row per reference language (sorted) followed by the pooled "all" row.
std::vector<LanguageScore> score_utterances(std::span<const ScoredUtterance> utts);

// CSV columns lang,wer,cer,lid_acc,n_utts,n_words.
std::string format_score_csv(std::span<const LanguageScore> scores);
// TSV columns utt_id, language, text, log_score.
std::string format_hypotheses_tsv(std::span<const ScoredUtterance> utts);

}  // namespace dualdec

#endif  // DUALDEC_METRICS_H_
