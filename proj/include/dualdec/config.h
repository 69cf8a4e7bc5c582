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

#ifndef DUALDEC_CONFIG_H_
#define DUALDEC_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dualdec/corpus.h"
#include "dualdec/features.h"
#include "dualdec/losses.h"
#include "dualdec/model.h"

namespace dualdec {

// Everything a training, evaluation or sweep run needs. Stored as an INI
// file ("key = value" under [section] headers); relative paths resolve
// against the file's directory.
struct RunConfig {
  ModelConfig model;  // vocabulary sizes are filled in at training time
  double dropout = 0.1;
  MultiTaskLossConfig loss;

  double learning_rate = 1e-3;
  double plateau_factor = 0.5;
  int plateau_patience = 2;
  double min_lr = 1e-5;
  // Global gradient-norm clip; 0 disables it.
  double grad_clip = 5.0;

  int epochs = 30;
  Index batch_size = 20;
  std::uint64_t seed = 1;
  // Stop after this many epochs without a new best validation loss; 0 never.
  int early_stop_patience = 0;
  // Restricts training and evaluation to these labels (all when empty).
  std::vector<std::string> langs;
  bool spec_augment = false;
  SpecAugmentConfig spec_augment_config;
  bool speed_perturb = false;
  // Used only when no validation manifest is given.
  double valid_fraction = 0.1;

  std::string train_manifest;
  std::string valid_manifest;
  std::string out_dir;

  Index beam = 4;
  // Hypotheses may run to encoder length plus this many tokens.
  Index max_len_extra = 4;
  bool constrain_first = true;

  SynthConfig synth;
};

void validate(const RunConfig& cfg);
RunConfig parse_run_config(const std::string& contents, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);
std::string format_run_config(const RunConfig& cfg);

std::vector<std::string> split_csv_list(const std::string& text);

}  // namespace dualdec

#endif  // DUALDEC_CONFIG_H_
