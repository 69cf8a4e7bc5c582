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

#ifndef DUALDEC_SEARCH_H_
#define DUALDEC_SEARCH_H_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualdec/decoder.h"
#include "dualdec/encoder.h"
#include "dualdec/vocab.h"

namespace dualdec {

// Per-frame argmax over log_probs[T, V], repeats merged, blanks dropped.
std::vector<Index> ctc_greedy(std::span<const double> log_probs, Index num_frames,
                              Index num_classes);

struct Hypothesis {
  std::vector<Index> token_ids;  // starts with sos; ends with eos when finished
  double log_score = 0.0;        // summed log-probability
  double score = 0.0;            // log_score / tokens emitted after sos
  std::optional<std::string> language;
  std::string text;
};

struct BeamOptions {
  Index beam = 4;
  Index max_len = 0;  // total tokens including sos and eos
  bool constrain_first = true;
  // Tokens allowed first when constrain_first is set.
  std::vector<Index> first_tokens;
};

// Next-token log-probabilities for a prefix that begins with sos.
using NextTokenScorer = std::function<std::vector<double>(const std::vector<Index>& prefix)>;

// Length-normalized beam search from sos. Blank is never emitted; eos is
// forced once a hypothesis reaches max_len. Results are sorted best first.
std::vector<Hypothesis> beam_search(const NextTokenScorer& scorer, const BeamOptions& options);

// Scorer over a grapheme decoder with per-prefix incremental states.
NextTokenScorer decoder_scorer(const TransformerDecoder& decoder, const Tensor& enc_hidden,
                               std::span<const Index> enc_lengths, Index utterance);

// Beam search for utterance `b` of an encoded batch; fills language and text.
std::vector<Hypothesis> beam_search(const TransformerDecoder& decoder, const PaddedBatch& encoded,
                                    Index b, const Vocab& graphemes, const BeamOptions& options);

}  // namespace dualdec

#endif  // DUALDEC_SEARCH_H_
