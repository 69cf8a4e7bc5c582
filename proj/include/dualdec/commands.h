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

#ifndef DUALDEC_COMMANDS_H_
#define DUALDEC_COMMANDS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dualdec/config.h"
#include "dualdec/metrics.h"
#include "dualdec/model.h"
#include "dualdec/vocab.h"

namespace dualdec {

struct EpochLog {
  int epoch = 0;
  LossBreakdown train;  // mean over the epoch's batches
  LossBreakdown valid;
  double learning_rate = 0.0;  // rate used during the epoch
  bool best = false;
};

struct TrainSummary {
  std::vector<EpochLog> epochs;
  double best_valid_loss = 0.0;
  int best_epoch = 0;
  Index skipped_utterances = 0;
  std::string checkpoint;
};

// Trains per the config and writes into cfg.out_dir: model.ddcf (best
// validation l_total), train_log.csv, valid_log.csv, grapheme.vocab,
// phoneme.vocab, feature_stats.ddcf, run.conf and, when the validation set
// is split off the training manifest, valid.tsv.
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log);

// A trained model with the files saved next to its checkpoint.
struct TrainedRun {
  RunConfig config;
  VocabPair vocabs;
  std::optional<FeatureStats> stats;
  std::unique_ptr<DualDecoderModel> model;
};

TrainedRun load_trained(const std::string& checkpoint);

struct DecodeOptions {
  Index beam = 4;
  Index max_len_extra = 4;
  bool constrain_first = true;
  Index batch_size = 20;
};

// Beam-decodes every utterance; results are ordered by utt_id.
std::vector<ScoredUtterance> decode_dataset(TrainedRun& run, const Dataset& data,
                                            const DecodeOptions& options);

struct EvalOptions {
  std::string checkpoint;
  std::string manifest;
  std::string out_dir;  // score.csv and hypotheses.tsv; nothing written when empty
  Index beam = 4;
  std::vector<std::string> langs;
  std::optional<bool> constrain_first;
};

struct EvalResult {
  std::vector<LanguageScore> scores;
  std::vector<ScoredUtterance> utterances;
};

EvalResult cmd_eval(const EvalOptions& options);

// Decodes a WAV file or every "feat/<id>" entry of a tensor container.
std::vector<ScoredUtterance> cmd_decode(const std::string& checkpoint, const std::string& input,
                                        Index beam);

struct SweepRow {
  double alpha = 0.0;
  LanguageScore score;
};

std::vector<double> default_alpha_grid();
// Trains and evaluates one model per alpha under out_dir/alpha_<a>, all
// else equal. Evaluation uses the validation manifest (or split).
std::vector<SweepRow> cmd_alpha_sweep(const RunConfig& cfg, const std::vector<double>& alphas,
                                      std::ostream& log);
// CSV columns alpha,lang,wer,cer,lid_acc,n_utts.
std::string format_sweep_csv(const std::vector<SweepRow>& rows);

struct GradCheckSummary {
  // Worst relative error per parameter group over all seeds.
  std::vector<std::pair<std::string, double>> groups;
  double max_rel_error = 0.0;
  double tolerance = 1e-4;
  bool phoneme_frozen_at_alpha0 = false;
  bool grapheme_output_frozen_at_lambda1 = false;
  bool passed() const {
    return max_rel_error <= tolerance && phoneme_frozen_at_alpha0 &&
           grapheme_output_frozen_at_lambda1;
  }
};

// Finite-difference check of the full model on a synthetic micro-batch.
GradCheckSummary cmd_gradcheck(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                               Index entries_per_param = 12);

}  // namespace dualdec

#endif  // DUALDEC_COMMANDS_H_
