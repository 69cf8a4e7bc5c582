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

#include "dualdec/search.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <utility>

#include "dualdec/errors.h"

namespace dualdec {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> log_softmax_row(std::span<const double> logits) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - hi);
  const double log_z = hi + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return out;
}

struct Candidate {
  std::size_t parent;
  Index token;
  double log_score;
};

}  // namespace

std::vector<Index> ctc_greedy(std::span<const double> log_probs, Index num_frames,
                              Index num_classes) {
  std::vector<Index> out;
  Index prev = -1;
  for (Index t = 0; t < num_frames; ++t) {
    auto row = log_probs.subspan(t * num_classes, num_classes);
    const Index best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best != prev && best != kBlankId) out.push_back(best);
    prev = best;
  }
  return out;
}

std::vector<Hypothesis> beam_search(const NextTokenScorer& scorer, const BeamOptions& options) {
  if (options.beam < 1) throw UsageError("beam must be at least 1");
  if (options.max_len < 3) {
    throw UsageError("max_len must be at least 3 to fit sos, a language label and eos");
  }
  if (options.constrain_first && options.first_tokens.empty()) {
    throw UsageError("constrain_first needs a non-empty set of first tokens");
  }
  std::vector<Hypothesis> live(1);
  live[0].token_ids = {kSosEosId};
  std::vector<Hypothesis> finished;
  double best_finished = kNegInf;
  // Extending a prefix never raises its raw log-prob, so a live hypothesis
  // scores at most log_score / (max_len - 1) once normalized.
  auto live_bound = [&] {
    double bound = kNegInf;
    for (const auto& h : live) bound = std::max(bound, h.log_score);
    return bound / static_cast<double>(options.max_len - 1);
  };
  while (!live.empty() && !(best_finished >= live_bound())) {
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const auto& prefix = live[h].token_ids;
      const std::vector<double> lp = scorer(prefix);
      const bool first = prefix.size() == 1;
      const bool last = static_cast<Index>(prefix.size()) + 1 >= options.max_len;
      auto consider = [&](Index token) {
        if (token == kBlankId || lp[token] == kNegInf) return;
        candidates.push_back({h, token, live[h].log_score + lp[token]});
      };
      if (last) {
        consider(kSosEosId);
      } else if (first && options.constrain_first) {
        for (Index token : options.first_tokens) consider(token);
      } else {
        for (Index token = 0; token < static_cast<Index>(lp.size()); ++token) consider(token);
      }
    }
    const std::size_t keep = std::min<std::size_t>(candidates.size(), options.beam);
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_score != b.log_score) return a.log_score > b.log_score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = candidates[i];
      Hypothesis h = live[c.parent];
      h.token_ids.push_back(c.token);
      h.log_score = c.log_score;
      h.score = h.log_score / static_cast<double>(h.token_ids.size() - 1);
      if (c.token == kSosEosId) best_finished = std::max(best_finished, h.score);
      (c.token == kSosEosId ? finished : next).push_back(std::move(h));
    }
    live = std::move(next);
  }
  std::stable_sort(finished.begin(), finished.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  return finished;
}

NextTokenScorer decoder_scorer(const TransformerDecoder& decoder, const Tensor& enc_hidden,
                               std::span<const Index> enc_lengths, Index utterance) {
  struct Entry {
    DecoderState state;  // after consuming the prefix
    std::vector<double> log_probs;
  };
  auto cache = std::make_shared<std::map<std::vector<Index>, Entry>>();
  (*cache)[{}] = Entry{decoder.start(enc_hidden, enc_lengths, utterance), {}};
  const TransformerDecoder* dec = &decoder;
  return [cache, dec](const std::vector<Index>& prefix) {
    auto it = cache->find(prefix);
    if (it == cache->end()) {
      if (prefix.empty()) throw UsageError("decoder scorer: empty prefix");
      auto parent = cache->find(std::vector<Index>(prefix.begin(), prefix.end() - 1));
      if (parent == cache->end()) throw UsageError("decoder scorer: prefix parent was never scored");
      Entry entry{parent->second.state, {}};
      entry.log_probs = log_softmax_row(dec->step(entry.state, prefix.back()));
      it = cache->emplace(prefix, std::move(entry)).first;
    }
    return it->second.log_probs;
  };
}

std::vector<Hypothesis> beam_search(const TransformerDecoder& decoder, const PaddedBatch& encoded,
                                    Index b, const Vocab& graphemes, const BeamOptions& options) {
  BeamOptions opts = options;
  if (opts.constrain_first && opts.first_tokens.empty()) {
    opts.first_tokens = graphemes.language_label_ids();
  }
  auto hyps = beam_search(decoder_scorer(decoder, encoded.hidden, encoded.out_lengths, b), opts);
  for (auto& h : hyps) {
    h.language = extract_language(h.token_ids, graphemes);
    h.text = decode_ids(h.token_ids, graphemes);
  }
  return hyps;
}

}  // namespace dualdec
