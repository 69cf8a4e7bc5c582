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

// dualdec command-line driver.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualdec/commands.h"
#include "dualdec/config.h"
#include "dualdec/corpus.h"
#include "dualdec/errors.h"

namespace {

using namespace dualdec;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Flags {
  std::string config;
  std::string checkpoint;
  std::string manifest;
  std::string input;
  std::string out;
  std::string langs;
  Index beam = 4;
  std::optional<std::uint64_t> seed;
  bool unconstrained = false;
  std::vector<double> alphas;
  int seeds = 3;
};

RunConfig run_config(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.synth.seed = *f.seed;
  }
  if (!f.langs.empty()) cfg.langs = split_csv_list(f.langs);
  if (!f.out.empty()) cfg.out_dir = f.out;
  cfg.beam = f.beam;
  return cfg;
}

int run_train(const Flags& f) {
  const TrainSummary s = cmd_train(run_config(f), std::cerr);
  std::cout << "best epoch " << s.best_epoch << " valid loss " << s.best_valid_loss << "\n"
            << "skipped utterances " << s.skipped_utterances << "\n"
            << "checkpoint " << s.checkpoint << "\n";
  return kExitOk;
}

int run_eval(const Flags& f) {
  EvalOptions opts;
  opts.checkpoint = f.checkpoint;
  opts.manifest = f.manifest;
  opts.out_dir = f.out;
  opts.beam = f.beam;
  if (!f.langs.empty()) opts.langs = split_csv_list(f.langs);
  if (f.unconstrained) opts.constrain_first = false;
  const EvalResult r = cmd_eval(opts);
  std::cout << format_score_csv(r.scores);
  return kExitOk;
}

int run_decode(const Flags& f) {
  if (f.checkpoint.empty() || f.input.empty()) throw UsageError("decode needs --checkpoint and an input file");
  std::cout << format_hypotheses_tsv(cmd_decode(f.checkpoint, f.input, f.beam));
  return kExitOk;
}

int run_sweep(const Flags& f) {
  const RunConfig cfg = run_config(f);
  if (cfg.out_dir.empty()) throw UsageError("alpha-sweep needs --out or paths.out_dir");
  const auto rows = cmd_alpha_sweep(cfg, f.alphas.empty() ? default_alpha_grid() : f.alphas, std::cerr);
  std::cout << format_sweep_csv(rows);
  return kExitOk;
}

int run_gradcheck(const Flags& f) {
  const RunConfig cfg = run_config(f);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < f.seeds; ++i) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
  const GradCheckSummary s = cmd_gradcheck(cfg, seeds);
  for (const auto& [group, err] : s.groups) std::printf("%-28s %.3e\n", group.c_str(), err);
  std::printf("max relative error %.3e (tolerance %.0e)\n", s.max_rel_error, s.tolerance);
  std::printf("alpha=0 phoneme decoder frozen: %s\n", s.phoneme_frozen_at_alpha0 ? "yes" : "no");
  std::printf("lambda=1 grapheme output frozen: %s\n", s.grapheme_output_frozen_at_lambda1 ? "yes" : "no");
  return s.passed() ? kExitOk : kExitNumerical;
}

int run_gen_corpus(const Flags& f) {
  const RunConfig cfg = run_config(f);
  if (cfg.out_dir.empty()) throw UsageError("gen-corpus needs --out");
  const SynthCorpus corpus = generate_corpus(cfg.synth);
  write_corpus(corpus, cfg.out_dir);
  std::cout << corpus.train.rows.size() << " train and " << corpus.dev.rows.size()
            << " dev utterances written to " << cfg.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual speech recognition with dual phoneme and grapheme decoders"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "Run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "Random seed");
    sub->add_option("--langs", f.langs, "Comma-separated language labels to keep");
    sub->add_option("--out", f.out, "Output directory");
  };

  auto* train = app.add_subcommand("train", "Train a model");
  common(train);
  auto* eval = app.add_subcommand("eval", "Decode and score a manifest");
  eval->add_option("--checkpoint", f.checkpoint)->required();
  eval->add_option("--manifest", f.manifest)->required();
  eval->add_option("--beam", f.beam, "Beam width")->check(CLI::PositiveNumber);
  eval->add_option("--langs", f.langs, "Comma-separated language labels to keep");
  eval->add_option("--out", f.out, "Directory for score.csv and hypotheses.tsv");
  eval->add_flag("--unconstrained", f.unconstrained, "Let the decoder choose the first token freely");
  auto* decode = app.add_subcommand("decode", "Decode a wav file or feature container");
  decode->add_option("--checkpoint", f.checkpoint)->required();
  decode->add_option("input", f.input, "Input .wav or .ddcf file")->required();
  decode->add_option("--beam", f.beam, "Beam width")->check(CLI::PositiveNumber);
  auto* sweep = app.add_subcommand("alpha-sweep", "Train and evaluate one model per alpha");
  common(sweep);
  sweep->add_option("--beam", f.beam, "Beam width")->check(CLI::PositiveNumber);
  sweep->add_option("--alphas", f.alphas, "Alpha grid")->delimiter(',');
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  common(gradcheck);
  gradcheck->add_option("--seeds", f.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic corpus");
  common(gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return run_train(f);
    if (*eval) return run_eval(f);
    if (*decode) return run_decode(f);
    if (*sweep) return run_sweep(f);
    if (*gradcheck) return run_gradcheck(f);
    if (*gen) return run_gen_corpus(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
