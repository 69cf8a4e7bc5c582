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

#include "dualdec/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>

#include "dualdec/checkpoint.h"
#include "dualdec/errors.h"
#include "dualdec/gradcheck.h"
#include "dualdec/optim.h"
#include "dualdec/search.h"

namespace dualdec {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << contents;
}

NamedTensors stats_tensors(const FeatureStats& stats) {
  const Index n = static_cast<Index>(stats.mean.size());
  return {{"stats/mean", Tensor({n}, stats.mean)}, {"stats/std", Tensor({n}, stats.stddev)}};
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

// Paths made absolute so the manifest can live in another directory.
Manifest with_absolute_paths(Manifest m) {
  for (auto& row : m.rows) row.path = fs::absolute(m.resolve(row.path)).string();
  m.base_dir.clear();
  return m;
}

double clip_gradients(std::span<Tensor> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= s;
    }
  }
  return norm;
}

LossBreakdown& accumulate(LossBreakdown& acc, const LossBreakdown& x, double w) {
  acc.l_ctc += w * x.l_ctc;
  acc.l_pr += w * x.l_pr;
  acc.l_gr += w * x.l_gr;
  acc.l_total += w * x.l_total;
  return acc;
}

LossBreakdown validation_loss(DualDecoderModel& model, const Dataset& data, const RunConfig& cfg) {
  NoGradGuard no_grad;
  LossBreakdown acc;
  double count = 0.0;
  for (const auto& batch : make_batches(data, cfg.batch_size, std::nullopt)) {
    const MultiTaskLoss m = model.loss(batch, cfg.loss, ForwardContext{});
    accumulate(acc, m.breakdown, static_cast<double>(batch.size()));
    count += static_cast<double>(batch.size());
  }
  LossBreakdown mean;
  return accumulate(mean, acc, 1.0 / count);
}

}  // namespace

TrainSummary cmd_train(const RunConfig& cfg_in, std::ostream& log) {
  RunConfig cfg = cfg_in;
  validate(cfg);
  if (cfg.train_manifest.empty()) throw UsageError("paths.train_manifest is required");
  if (cfg.out_dir.empty()) throw UsageError("paths.out_dir is required");
  Manifest train_m = filter_languages(load_manifest(cfg.train_manifest), cfg.langs);
  Manifest valid_m;
  const bool split = cfg.valid_manifest.empty();
  if (split) {
    std::tie(train_m, valid_m) =
        split_train_valid(train_m, {.fraction = cfg.valid_fraction}, cfg.seed);
  } else {
    valid_m = filter_languages(load_manifest(cfg.valid_manifest), cfg.langs);
  }
  if (train_m.rows.empty()) throw DataError("no training utterances after the language filter");
  if (valid_m.rows.empty()) throw DataError("no validation utterances after the language filter");
  valid_m.stats = train_m.stats;

  const VocabPair vocabs = build_vocabs(train_m);
  cfg.model.grapheme_vocab = vocabs.grapheme.size();
  cfg.model.phoneme_vocab = vocabs.phoneme.size();

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  vocabs.grapheme.save((out / "grapheme.vocab").string());
  vocabs.phoneme.save((out / "phoneme.vocab").string());
  write_file(out / "run.conf", format_run_config(cfg));
  if (train_m.stats) save_tensors((out / "feature_stats.ddcf").string(), stats_tensors(*train_m.stats));
  if (split) save_manifest((out / "valid.tsv").string(), with_absolute_paths(valid_m));

  Dataset train = load_dataset(train_m, vocabs, cfg.speed_perturb);
  Dataset valid = load_dataset(valid_m, vocabs);
  std::vector<std::string> warnings;
  TrainSummary summary;
  summary.skipped_utterances = drop_untrainable(train, &warnings) + drop_untrainable(valid, &warnings);
  for (const auto& w : warnings) log << "warning: " << w << "\n";
  if (train.utterances.empty() || valid.utterances.empty()) {
    throw DataError("nothing left to train or validate on after skipping unusable utterances");
  }
  if (train.oov.graphemes + valid.oov.graphemes > 0) {
    log << "warning: " << valid.oov.graphemes << " validation graphemes are out of vocabulary\n";
  }

  DualDecoderModel model(cfg.model, cfg.seed);
  std::vector<Tensor> params = model.store().trainable();
  std::vector<Tensor> phoneme_params;
  for (const auto& [name, t] : model.store().params()) {
    if (starts_with(name, "dec_phn/")) phoneme_params.push_back(t);
  }
  AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  PlateauScheduler scheduler(cfg.plateau_factor, cfg.plateau_patience, cfg.min_lr);
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 1);

  std::ofstream train_log(out / "train_log.csv", std::ios::binary | std::ios::trunc);
  std::ofstream valid_log(out / "valid_log.csv", std::ios::binary | std::ios::trunc);
  train_log << "epoch,step,l_ctc,l_pr,l_gr,l_total,lr\n";
  valid_log << "epoch,l_ctc,l_pr,l_gr,l_total,lr,best\n";
  summary.checkpoint = (out / "model.ddcf").string();
  summary.best_valid_loss = std::numeric_limits<double>::infinity();
  if (cfg.epochs == 0) model.save(summary.checkpoint);

  long step = 0;
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const Dataset* source = &train;
    Dataset augmented;
    if (cfg.spec_augment) {
      augmented = train;
      for (std::size_t i = 0; i < augmented.utterances.size(); ++i) {
        SpecAugmentConfig sa = cfg.spec_augment_config;
        sa.seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch) * 10007ULL + i;
        augmented.utterances[i].features = spec_augment(augmented.utterances[i].features, sa);
      }
      source = &augmented;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.learning_rate = adam.learning_rate;
    const ForwardContext ctx{true, cfg.dropout, &rng};
    const auto batches = make_batches(*source, cfg.batch_size, cfg.seed + static_cast<std::uint64_t>(epoch));
    for (const auto& batch : batches) {
      ++step;
      model.store().zero_grad();
      MultiTaskLoss m;
      try {
        m = model.loss(batch, cfg.loss, ctx);
        backward(m.total);
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
                             ": " + e.what());
      }
      if (cfg.loss.alpha == 0.0) {
        for (const auto& p : phoneme_params) {
          for (double g : p.grad()) {
            if (g != 0.0) throw NumericalError("alpha is 0 but the phoneme decoder received a gradient");
          }
        }
      }
      clip_gradients(params, cfg.grad_clip);
      adam_step(params, adam);
      accumulate(entry.train, m.breakdown, 1.0 / static_cast<double>(batches.size()));
      train_log << epoch << ',' << step << ',' << num(m.breakdown.l_ctc) << ','
                << num(m.breakdown.l_pr) << ',' << num(m.breakdown.l_gr) << ','
                << num(m.breakdown.l_total) << ',' << num(adam.learning_rate) << '\n';
    }
    entry.valid = validation_loss(model, valid, cfg);
    if (!std::isfinite(entry.valid.l_total)) {
      throw NumericalError("validation loss is not finite at epoch " + std::to_string(epoch));
    }
    if (entry.valid.l_total < summary.best_valid_loss) {
      summary.best_valid_loss = entry.valid.l_total;
      summary.best_epoch = epoch;
      entry.best = true;
      since_best = 0;
      model.save(summary.checkpoint);
    } else {
      ++since_best;
    }
    adam.learning_rate = scheduler.observe(entry.valid.l_total, adam.learning_rate);
    valid_log << epoch << ',' << num(entry.valid.l_ctc) << ',' << num(entry.valid.l_pr) << ','
              << num(entry.valid.l_gr) << ',' << num(entry.valid.l_total) << ','
              << num(entry.learning_rate) << ',' << (entry.best ? 1 : 0) << '\n';
    log << "epoch " << epoch << " train " << fixed(entry.train.l_total, 4) << " valid "
        << fixed(entry.valid.l_total, 4) << " lr " << num(entry.learning_rate)
        << (entry.best ? " *" : "") << "\n";
    summary.epochs.push_back(entry);
    if (cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience) break;
  }
  return summary;
}

TrainedRun load_trained(const std::string& checkpoint) {
  const fs::path dir = fs::path(checkpoint).parent_path();
  for (const fs::path& p : {fs::path(checkpoint), dir / "run.conf"}) {
    if (!fs::exists(p)) throw DataError("missing " + p.string());
  }
  TrainedRun run;
  run.config = load_run_config((dir / "run.conf").string());
  run.vocabs.grapheme = Vocab::load((dir / "grapheme.vocab").string(), Vocab::Kind::kGrapheme);
  run.vocabs.phoneme = Vocab::load((dir / "phoneme.vocab").string(), Vocab::Kind::kPhoneme);
  run.config.model.grapheme_vocab = run.vocabs.grapheme.size();
  run.config.model.phoneme_vocab = run.vocabs.phoneme.size();
  if (fs::exists(dir / "feature_stats.ddcf")) {
    const NamedTensors t = load_tensors((dir / "feature_stats.ddcf").string());
    if (t.size() != 2) throw DataError("feature_stats.ddcf must hold mean and std");
    FeatureStats stats;
    stats.mean.assign(t[0].second.data().begin(), t[0].second.data().end());
    stats.stddev.assign(t[1].second.data().begin(), t[1].second.data().end());
    run.stats = stats;
  }
  run.model = std::make_unique<DualDecoderModel>(run.config.model, run.config.seed);
  run.model->load(checkpoint);
  return run;
}

std::vector<ScoredUtterance> decode_dataset(TrainedRun& run, const Dataset& data,
                                            const DecodeOptions& options) {
  const Vocab& graphemes = run.vocabs.grapheme;
  std::vector<ScoredUtterance> out;
  auto describe = [&](const Utterance& u) {
    ScoredUtterance s;
    s.utt_id = u.features.utterance_id;
    s.language = u.features.language;
    s.reference = u.text;
    return s;
  };
  NoGradGuard no_grad;
  for (const auto& batch : make_batches(data, options.batch_size, std::nullopt)) {
    PaddedBatch enc = run.model->encode(batch.inputs, ForwardContext{});
    for (Index b = 0; b < batch.size(); ++b) {
      BeamOptions beam{options.beam, enc.out_lengths[b] + options.max_len_extra,
                       options.constrain_first, graphemes.language_label_ids()};
      const auto hyps = beam_search(run.model->grapheme_decoder(), enc, b, graphemes, beam);
      ScoredUtterance s = describe(data.utterances[batch.indices[b]]);
      if (!hyps.empty()) {
        s.hypothesis = hyps[0].text;
        s.hyp_language = hyps[0].language;
        s.log_score = hyps[0].log_score;
        s.label_first = hyps[0].token_ids.size() > 1 && graphemes.is_language_label(hyps[0].token_ids[1]);
      }
      out.push_back(std::move(s));
    }
  }
  // Utterances too short to encode score as empty hypotheses.
  std::vector<bool> seen(data.utterances.size(), false);
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < out.size(); ++i) by_id[out[i].utt_id] = i;
  for (const auto& u : data.utterances) {
    if (!by_id.count(u.features.utterance_id)) out.push_back(describe(u));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredUtterance& a, const ScoredUtterance& b) { return a.utt_id < b.utt_id; });
  return out;
}

EvalResult cmd_eval(const EvalOptions& options) {
  if (options.checkpoint.empty() || options.manifest.empty()) {
    throw UsageError("eval needs --checkpoint and --manifest");
  }
  TrainedRun run = load_trained(options.checkpoint);
  Manifest manifest = filter_languages(load_manifest(options.manifest), options.langs);
  if (manifest.rows.empty()) throw DataError("no utterances to evaluate after the language filter");
  if (run.stats) manifest.stats = run.stats;
  const Dataset data = load_dataset(manifest, run.vocabs);
  DecodeOptions dopts;
  dopts.beam = options.beam;
  dopts.max_len_extra = run.config.max_len_extra;
  dopts.constrain_first = options.constrain_first.value_or(run.config.constrain_first);
  dopts.batch_size = run.config.batch_size;
  EvalResult result;
  result.utterances = decode_dataset(run, data, dopts);
  result.scores = score_utterances(result.utterances);
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    write_file(fs::path(options.out_dir) / "score.csv", format_score_csv(result.scores));
    write_file(fs::path(options.out_dir) / "hypotheses.tsv", format_hypotheses_tsv(result.utterances));
  }
  return result;
}

std::vector<ScoredUtterance> cmd_decode(const std::string& checkpoint, const std::string& input,
                                        Index beam) {
  TrainedRun run = load_trained(checkpoint);
  Dataset data;
  auto add = [&](FeatureSequence fs) {
    if (fs.valid_length < kMinEncoderFrames) {
      throw DataError(fs.utterance_id + ": " + std::to_string(fs.valid_length) +
                      " frames is too short to decode (need " +
                      std::to_string(kMinEncoderFrames) + ")");
    }
    if (run.stats) normalize_features(fs, *run.stats);
    Utterance u;
    u.features = std::move(fs);
    u.targets.grapheme_ids = {kSosEosId, kSosEosId};
    u.targets.phoneme_ids = {kSosEosId, kSosEosId};
    data.utterances.push_back(std::move(u));
  };
  const fs::path path(input);
  if (path.extension() == ".wav") {
    FeatureSequence fs = compute_log_mel(read_wav(input));
    fs.utterance_id = path.stem().string();
    add(std::move(fs));
  } else {
    for (auto& [name, t] : load_tensors(input)) {
      if (!starts_with(name, "feat/")) continue;
      if (t.rank() != 2 || t.dim(1) != kNumMelBins) throw DataError(name + " is not a [T, 40] matrix");
      FeatureSequence fs;
      fs.frames = t;
      fs.valid_length = t.dim(0);
      fs.utterance_id = name.substr(5);
      add(std::move(fs));
    }
    if (data.utterances.empty()) throw DataError("no feat/<id> entries in " + input);
  }
  DecodeOptions dopts;
  dopts.beam = beam;
  dopts.max_len_extra = run.config.max_len_extra;
  dopts.constrain_first = run.config.constrain_first;
  return decode_dataset(run, data, dopts);
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

std::vector<SweepRow> cmd_alpha_sweep(const RunConfig& cfg, const std::vector<double>& alphas,
                                      std::ostream& log) {
  if (alphas.empty()) throw UsageError("alpha grid is empty");
  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    RunConfig run = cfg;
    run.loss.alpha = alpha;
    run.out_dir = (fs::path(cfg.out_dir) / ("alpha_" + fixed(alpha, 1))).string();
    log << "== alpha " << fixed(alpha, 1) << "\n";
    const TrainSummary summary = cmd_train(run, log);
    EvalOptions eval;
    eval.checkpoint = summary.checkpoint;
    eval.manifest = cfg.valid_manifest.empty() ? (fs::path(run.out_dir) / "valid.tsv").string()
                                               : cfg.valid_manifest;
    eval.beam = cfg.beam;
    eval.langs = cfg.langs;
    for (auto& score : cmd_eval(eval).scores) rows.push_back({alpha, std::move(score)});
  }
  std::map<std::string, const SweepRow*> best;
  for (const auto& r : rows) {
    auto& b = best[r.score.language];
    if (b == nullptr || r.score.wer < b->score.wer) b = &r;
  }
  for (const auto& [lang, r] : best) {
    log << "best alpha for " << lang << ": " << fixed(r->alpha, 1) << " (WER "
        << fixed(r->score.wer, 2) << "); reference optimum 0.6\n";
  }
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "alpha_sweep.csv", format_sweep_csv(rows));
  }
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "alpha,lang,wer,cer,lid_acc,n_utts\n";
  for (const auto& r : rows) {
    out += fixed(r.alpha, 1) + "," + r.score.language + "," + fixed(r.score.wer, 2) + "," +
           fixed(r.score.cer, 2) + "," + fixed(r.score.lid_acc, 2) + "," +
           std::to_string(r.score.n_utts) + "\n";
  }
  return out;
}

GradCheckSummary cmd_gradcheck(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                               Index entries_per_param) {
  GradCheckSummary summary;
  std::map<std::string, double> groups;
  bool phoneme_frozen = true, grapheme_frozen = true;
  for (std::uint64_t seed : seeds) {
    SynthConfig sc = cfg.synth;
    sc.utterances_per_language = 1;
    sc.dev_utterances_per_language = 0;
    sc.min_phones = 2;
    sc.max_phones = 3;
    sc.frames_per_phone = 6;
    sc.word_break_prob = 0.5;
    sc.waveform = false;
    sc.seed = seed;
    const SynthCorpus corpus = generate_corpus(sc);
    const VocabPair vocabs = build_vocabs(corpus.train);
    Dataset data;
    for (std::size_t i = 0; i < corpus.train.rows.size(); ++i) {
      const auto& row = corpus.train.rows[i];
      Utterance u;
      u.features.frames = corpus.features[i].second;
      u.features.valid_length = u.features.frames.dim(0);
      u.features.utterance_id = row.utt_id;
      normalize_features(u.features, *corpus.train.stats);
      u.targets = encode_targets(row.text, split_phonemes(row.phonemes), row.language,
                                 vocabs.grapheme, vocabs.phoneme);
      data.utterances.push_back(std::move(u));
    }
    std::vector<Index> all(data.utterances.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
    const Batch batch = collate(data, all);

    ModelConfig mc = cfg.model;
    mc.grapheme_vocab = vocabs.grapheme.size();
    mc.phoneme_vocab = vocabs.phoneme.size();
    DualDecoderModel model(mc, seed);
    const ForwardContext ctx{true, 0.0, nullptr};
    const auto report = check_gradients([&] { return model.loss(batch, cfg.loss, ctx).total; },
                                        model.store().params(),
                                        {.max_entries_per_param = entries_per_param});
    summary.tolerance = report.tolerance;
    for (const auto& p : report.params) {
      const auto second = p.name.find('/', p.name.find('/') + 1);
      double& worst = groups[p.name.substr(0, second)];
      worst = std::max(worst, p.max_rel_error);
    }
    summary.max_rel_error = std::max(summary.max_rel_error, report.max_rel_error);

    auto grads_zero = [&](const char* prefix, const MultiTaskLossConfig& weights) {
      model.store().zero_grad();
      backward(model.loss(batch, weights, ctx).total);
      bool zero = true;
      for (const auto& [name, t] : model.store().params()) {
        if (!starts_with(name, prefix)) continue;
        for (double g : t.grad()) zero = zero && g == 0.0;
      }
      model.store().zero_grad();
      return zero;
    };
    phoneme_frozen = phoneme_frozen && grads_zero("dec_phn/", {cfg.loss.lambda, 0.0});
    grapheme_frozen = grapheme_frozen && grads_zero("dec_grp/output/", {1.0, cfg.loss.alpha});
  }
  summary.groups.assign(groups.begin(), groups.end());
  summary.phoneme_frozen_at_alpha0 = phoneme_frozen;
  summary.grapheme_output_frozen_at_lambda1 = grapheme_frozen;
  return summary;
}

}  // namespace dualdec
