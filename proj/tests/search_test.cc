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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "dualdec/errors.h"
#include "dualdec/metrics.h"
#include "dualdec/search.h"
#include "oracles.h"
#include "test_util.h"

namespace dualdec {
namespace {

using testing::levenshtein;
using testing::random_tensor;
using testing::whitespace_words;

// Deterministic pseudo-random next-token table keyed by the prefix.
NextTokenScorer table_scorer(Index vocab, std::uint64_t seed) {
  return [vocab, seed](const std::vector<Index>& prefix) {
    std::uint64_t h = seed;
    for (Index t : prefix) h = h * 1000003u + static_cast<std::uint64_t>(t) + 17u;
    std::mt19937_64 rng(h);
    std::vector<double> logits(vocab);
    for (double& v : logits) v = std::normal_distribution<double>(0.0, 2.0)(rng);
    const double hi = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double v : logits) z += std::exp(v - hi);
    for (double& v : logits) v -= hi + std::log(z);
    return logits;
  };
}

std::vector<double> frames(std::initializer_list<int> argmax, int V) {
  std::vector<double> lp;
  for (int a : argmax)
    for (int k = 0; k < V; ++k) lp.push_back(k == a ? -0.1 : -3.0);
  return lp;
}

TEST_CASE("ctc greedy collapse") {
  CHECK(ctc_greedy(frames({4, 4, 0, 5, 5}, 6), 5, 6) == std::vector<Index>{4, 5});
  CHECK(ctc_greedy(frames({0, 0, 0}, 6), 3, 6).empty());
  CHECK(ctc_greedy(frames({4, 0, 4}, 6), 3, 6) == std::vector<Index>{4, 4});
}

TEST_CASE("beam of one is greedy stepping") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto scorer = table_scorer(9, seed);
    BeamOptions opts{1, 8, false, {}};
    auto hyps = beam_search(scorer, opts);
    REQUIRE(hyps.size() == 1);
    std::vector<Index> greedy = {kSosEosId};
    double total = 0;
    while (true) {
      auto lp = scorer(greedy);
      lp[kBlankId] = -INFINITY;
      Index best = std::max_element(lp.begin(), lp.end()) - lp.begin();
      if (static_cast<Index>(greedy.size()) + 1 >= 8) best = kSosEosId;
      total += lp[best];
      greedy.push_back(best);
      if (best == kSosEosId) break;
    }
    CHECK(hyps[0].token_ids == greedy);
    CHECK(hyps[0].log_score == doctest::Approx(total).epsilon(1e-14));
  }
}

TEST_CASE("beam search matches exhaustive search on a two-step decoder") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto scorer = table_scorer(5, seed);
    auto hyps = beam_search(scorer, BeamOptions{4, 3, false, {}});
    // Every sequence of at most three tokens: [sos, eos] and [sos, x, eos].
    double best = scorer({kSosEosId})[kSosEosId];
    std::vector<Index> arg = {kSosEosId, kSosEosId};
    for (Index x : {1, 2, 4}) {
      const double s = (scorer({kSosEosId})[x] + scorer({kSosEosId, x})[kSosEosId]) / 2.0;
      if (s > best) {
        best = s;
        arg = {kSosEosId, x, kSosEosId};
      }
    }
    REQUIRE(!hyps.empty());
    CHECK(hyps[0].token_ids == arg);
    CHECK(std::abs(hyps[0].score - best) < 1e-12);
  }
}

TEST_CASE("constrained first token") {
  const std::vector<Index> labels = {4, 5, 6};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto hyps = beam_search(table_scorer(12, seed), BeamOptions{3, 10, true, labels});
    REQUIRE(!hyps.empty());
    for (const auto& h : hyps) {
      REQUIRE(h.token_ids.size() >= 3);
      CHECK(std::find(labels.begin(), labels.end(), h.token_ids[1]) != labels.end());
      CHECK(h.token_ids.back() == kSosEosId);
      CHECK(h.log_score <= 0.0);
    }
    for (std::size_t i = 1; i < hyps.size(); ++i) CHECK(hyps[i - 1].score >= hyps[i].score);
  }
  CHECK_THROWS_AS(beam_search(table_scorer(12, 0), BeamOptions{3, 2, true, labels}), UsageError);
  CHECK_THROWS_AS(beam_search(table_scorer(12, 0), BeamOptions{0, 5, true, labels}), UsageError);
}

TEST_CASE("decoder-backed beam search") {
  std::mt19937_64 rng(3);
  ParamStore store;
  DecoderConfig cfg{1, 8, 2, 12, 9};
  TransformerDecoder dec(cfg, store, rng, "dec_grp");
  PaddedBatch enc;
  enc.hidden = random_tensor({2, 5, 8}, rng, -1, 1, false);
  enc.out_lengths = {5, 3};
  Vocab vocab(Vocab::Kind::kGrapheme, {"[L1]", "[L2]"}, {"a", "b", "c"});
  for (Index b = 0; b < 2; ++b) {
    auto hyps = beam_search(dec, enc, b, vocab, BeamOptions{1, 7, true, {}});
    REQUIRE(hyps.size() == 1);
    const auto& h = hyps[0];
    CHECK(vocab.is_language_label(h.token_ids[1]));
    CHECK(h.language.has_value());
    CHECK(h.text == decode_ids(h.token_ids, vocab));
    // Re-score the chosen path with full-prefix decoding.
    double total = 0.0;
    auto rows = enc.hidden.data().subspan(b * 40, 40);
    Tensor one({1, 5, 8}, std::vector<double>(rows.begin(), rows.end()));
    const Index len[1] = {enc.out_lengths[b]};
    std::vector<Index> prefix(h.token_ids.begin(), h.token_ids.end() - 1);
    Tensor logits = dec.forward(prefix, static_cast<Index>(prefix.size()), one, len, {});
    for (std::size_t t = 0; t < prefix.size(); ++t) {
      auto row = logits.data().subspan(t * 9, 9);
      double hi = *std::max_element(row.begin(), row.end()), z = 0;
      for (double v : row) z += std::exp(v - hi);
      total += row[h.token_ids[t + 1]] - hi - std::log(z);
    }
    CHECK(std::abs(total - h.log_score) < 1e-9);
  }
}

TEST_CASE("edit distance") {
  auto chars = [](const std::string& s) { return split_chars(s); };
  EditCounts k = edit_distance(chars("kitten"), chars("sitting"));
  CHECK(k.errors() == 3);
  CHECK(k.substitutions == 2);
  CHECK(k.insertions == 1);
  CHECK(edit_distance(chars("abc"), chars("abc")).errors() == 0);
  std::vector<std::string> empty;
  EditCounts ins = edit_distance(empty, chars("abcd"));
  CHECK(ins.insertions == 4);
  CHECK(ins.errors() == 4);
  // Tie: "a b" -> "c" aligns as one substitution and one deletion.
  EditCounts tie = edit_distance(whitespace_words("a b"), whitespace_words("c"));
  CHECK(tie.substitutions == 1);
  CHECK(tie.deletions == 1);

  std::mt19937_64 rng(9);
  auto rand_seq = [&] {
    std::vector<std::string> s(rng() % 8);
    for (auto& t : s) t = std::string(1, static_cast<char>('a' + rng() % 3));
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    auto a = rand_seq(), b = rand_seq(), c = rand_seq();
    const long ab = edit_distance(a, b).errors();
    CHECK(ab == edit_distance(b, a).errors());
    CHECK(edit_distance(a, c).errors() <= ab + edit_distance(b, c).errors());
    CHECK(ab == levenshtein(a, b));
  }
}

TEST_CASE("corpus error rates") {
  std::vector<std::string> ref = {"a b c"}, hyp = {"a c"};
  CHECK(wer(ref, hyp).percent == doctest::Approx(100.0 / 3.0));
  CHECK(wer(ref, ref).percent == 0.0);
  CHECK(cer(std::vector<std::string>{"ab cd"}, std::vector<std::string>{"abd"}).percent ==
        doctest::Approx(25.0));
  std::vector<std::string> blank = {""};
  CHECK_THROWS_AS(wer(blank, blank), DataError);

  std::mt19937_64 rng(10);
  auto sentence = [&] {
    std::string s;
    const int words = 1 + static_cast<int>(rng() % 5);
    for (int w = 0; w < words; ++w) {
      if (w) s += ' ';
      for (int c = 0, n = 1 + static_cast<int>(rng() % 4); c < n; ++c) s += static_cast<char>('a' + rng() % 4);
    }
    return s;
  };
  std::vector<std::string> refs, hyps;
  long word_errors = 0, words = 0, char_errors = 0, chars = 0;
  for (int i = 0; i < 1000; ++i) {
    refs.push_back(sentence());
    hyps.push_back(sentence());
    auto rw = whitespace_words(refs.back()), hw = whitespace_words(hyps.back());
    word_errors += levenshtein(rw, hw);
    words += static_cast<long>(rw.size());
    std::vector<char> rc, hc;
    for (char c : refs.back()) if (c != ' ') rc.push_back(c);
    for (char c : hyps.back()) if (c != ' ') hc.push_back(c);
    char_errors += levenshtein(rc, hc);
    chars += static_cast<long>(rc.size());
  }
  CHECK(wer(refs, hyps).counts.errors() == word_errors);
  CHECK(wer(refs, hyps).percent == 100.0 * word_errors / words);
  CHECK(cer(refs, hyps).percent == 100.0 * char_errors / chars);
  std::reverse(refs.begin(), refs.end());
  std::reverse(hyps.begin(), hyps.end());
  CHECK(wer(refs, hyps).percent == 100.0 * word_errors / words);
}

TEST_CASE("language id accuracy and reports") {
  std::vector<std::optional<std::string>> hyp = {"[L1]", std::nullopt, "[L2]", "[L3]"};
  std::vector<std::string> ref = {"[L1]", "[L1]", "[L2]", "[L2]"};
  CHECK(language_id_accuracy(hyp, ref) == 50.0);
  std::vector<std::optional<std::string>> good(ref.begin(), ref.end());
  CHECK(language_id_accuracy(good, ref) == 100.0);

  std::vector<ScoredUtterance> utts = {
      {"u1", "[L2]", "a b", "a b", "[L2]", -1.0},
      {"u2", "[L1]", "x y z", "x z", "[L1]", -2.0},
      {"u3", "[L1]", "q", "q", std::nullopt, -0.5},
  };
  auto scores = score_utterances(utts);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0].language == "[L1]");
  CHECK(scores[0].n_words == 4);
  CHECK(scores[0].wer == 25.0);
  CHECK(scores[0].lid_acc == 50.0);
  CHECK(scores[2].language == "all");
  CHECK(scores[2].n_utts == 3);
  CHECK(format_score_csv(scores) ==
        "lang,wer,cer,lid_acc,n_utts,n_words\n"
        "[L1],25.00,25.00,50.00,2,4\n"
        "[L2],0.00,0.00,100.00,1,2\n"
        "all,16.67,16.67,66.67,3,6\n");
  CHECK(format_hypotheses_tsv(utts).starts_with("u1\t[L2]\ta b\t-1.000000\n"));
}

}  // namespace
}  // namespace dualdec
