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

#include "dualdec/metrics.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "dualdec/errors.h"
#include "dualdec/utf8.h"

namespace dualdec {
namespace {

ErrorRate corpus_rate(std::span<const std::string> refs, std::span<const std::string> hyps,
                      std::vector<std::string> (*split)(const std::string&)) {
  if (refs.size() != hyps.size()) {
    throw DataError("scoring: " + std::to_string(refs.size()) + " references vs " +
                    std::to_string(hyps.size()) + " hypotheses");
  }
  ErrorRate rate;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    rate.counts += edit_distance(split(refs[i]), split(hyps[i]));
  }
  if (rate.counts.ref_length == 0) throw DataError("scoring: empty reference corpus");
  rate.percent = 100.0 * static_cast<double>(rate.counts.errors()) /
                 static_cast<double>(rate.counts.ref_length);
  return rate;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

EditCounts& EditCounts::operator+=(const EditCounts& o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_length += o.ref_length;
  return *this;
}

EditCounts edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<long> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> long& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const long diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditCounts counts;
  counts.ref_length = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::vector<std::string> split_chars(const std::string& text) {
  std::vector<std::string> chars;
  for (char32_t c : utf8_decode(text)) {
    if (c == U' ' || c == U'\t' || c == U'\n') continue;
    chars.push_back(utf8_encode(c));
  }
  return chars;
}

ErrorRate wer(std::span<const std::string> refs, std::span<const std::string> hyps) {
  return corpus_rate(refs, hyps, &split_words);
}

ErrorRate cer(std::span<const std::string> refs, std::span<const std::string> hyps) {
  return corpus_rate(refs, hyps, &split_chars);
}

double language_id_accuracy(std::span<const std::optional<std::string>> hyps,
                            std::span<const std::string> refs) {
  if (hyps.size() != refs.size()) throw DataError("language_id_accuracy: count mismatch");
  if (refs.empty()) return 0.0;
  long correct = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (hyps[i] && *hyps[i] == refs[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(refs.size());
}

std::vector<LanguageScore> score_utterances(std::span<const ScoredUtterance> utts) {
  std::map<std::string, std::vector<const ScoredUtterance*>> groups;
  for (const auto& u : utts) {
    groups[u.language].push_back(&u);
    groups["all"];
  }
  auto score_group = [](const std::string& lang, const std::vector<const ScoredUtterance*>& g) {
    std::vector<std::string> refs, hyps, labels;
    std::vector<std::optional<std::string>> hyp_labels;
    for (const auto* u : g) {
      refs.push_back(u->reference);
      hyps.push_back(u->hypothesis);
      labels.push_back(u->language);
      hyp_labels.push_back(u->hyp_language);
    }
    LanguageScore s;
    s.language = lang;
    const ErrorRate w = wer(refs, hyps);
    const ErrorRate c = cer(refs, hyps);
    s.wer = w.percent;
    s.cer = c.percent;
    s.word_counts = w.counts;
    s.char_counts = c.counts;
    s.lid_acc = language_id_accuracy(hyp_labels, labels);
    s.n_utts = static_cast<long>(g.size());
    s.n_words = w.counts.ref_length;
    return s;
  };
  std::vector<LanguageScore> out;
  std::vector<const ScoredUtterance*> all;
  for (const auto& u : utts) all.push_back(&u);
  for (const auto& [lang, g] : groups) {
    if (lang != "all") out.push_back(score_group(lang, g));
  }
  out.push_back(score_group("all", all));
  return out;
}

std::string format_score_csv(std::span<const LanguageScore> scores) {
  std::string out = "lang,wer,cer,lid_acc,n_utts,n_words\n";
  for (const auto& s : scores) {
    out += s.language + "," + fixed(s.wer, 2) + "," + fixed(s.cer, 2) + "," + fixed(s.lid_acc, 2) +
           "," + std::to_string(s.n_utts) + "," + std::to_string(s.n_words) + "\n";
  }
  return out;
}

std::string format_hypotheses_tsv(std::span<const ScoredUtterance> utts) {
  std::string out;
  for (const auto& u : utts) {
    out += u.utt_id + "\t" + u.hyp_language.value_or("") + "\t" + u.hypothesis + "\t" +
           fixed(u.log_score, 6) + "\n";
  }
  return out;
}

}  // namespace dualdec
