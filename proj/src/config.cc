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

#include "dualdec/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dualdec/errors.h"

namespace dualdec {
namespace {

namespace pt = boost::property_tree;

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

template <typename T>
void read(const pt::ptree& tree, const char* key, T& field) {
  if (!tree.get_optional<std::string>(key)) return;
  try {
    field = tree.get<T>(key);
  } catch (const pt::ptree_bad_data&) {
    throw UsageError(std::string("config: bad value for ") + key);
  }
}

void read_bool(const pt::ptree& tree, const char* key, bool& field) {
  auto v = tree.get_optional<std::string>(key);
  if (!v) return;
  if (*v == "true" || *v == "1" || *v == "yes") {
    field = true;
  } else if (*v == "false" || *v == "0" || *v == "no") {
    field = false;
  } else {
    throw UsageError(std::string("config: ") + key + " must be true or false");
  }
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

void validate(const RunConfig& cfg) {
  validate(cfg.model.encoder);
  validate(cfg.loss);
  validate(cfg.synth);
  if (cfg.spec_augment) validate(cfg.spec_augment_config);
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw UsageError("dropout must lie in [0, 1)");
  if (cfg.learning_rate <= 0.0 || cfg.min_lr < 0.0 || cfg.plateau_factor <= 0.0 ||
      cfg.plateau_factor >= 1.0 || cfg.plateau_patience < 0) {
    throw UsageError("optimizer settings out of range");
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.beam < 1 || cfg.max_len_extra < 1) {
    throw UsageError("epochs, batch_size, beam and max_len_extra must be positive");
  }
  if (cfg.valid_fraction <= 0.0 || cfg.valid_fraction >= 1.0) {
    throw UsageError("valid_fraction must lie in (0, 1)");
  }
}

RunConfig parse_run_config(const std::string& contents, const std::string& base_dir) {
  pt::ptree tree;
  std::istringstream in(contents);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  auto& enc = cfg.model.encoder;
  read(tree, "model.num_blocks", enc.num_blocks);
  read(tree, "model.d_model", enc.d_model);
  read(tree, "model.num_heads", enc.num_heads);
  read(tree, "model.ff_hidden", enc.ff_hidden);
  read(tree, "model.conv_kernel", enc.conv_kernel);
  std::string conv_norm = enc.conv_norm == ConvNorm::kBatch ? "batch" : "layer";
  read(tree, "model.conv_norm", conv_norm);
  if (conv_norm != "batch" && conv_norm != "layer") {
    throw UsageError("config: model.conv_norm must be batch or layer");
  }
  enc.conv_norm = conv_norm == "batch" ? ConvNorm::kBatch : ConvNorm::kLayer;
  read(tree, "model.decoder_layers", cfg.model.decoder_layers);
  cfg.model.decoder_heads = enc.num_heads;
  cfg.model.decoder_ff_hidden = enc.ff_hidden;
  read(tree, "model.decoder_heads", cfg.model.decoder_heads);
  read(tree, "model.decoder_ff_hidden", cfg.model.decoder_ff_hidden);
  read(tree, "model.dropout", cfg.dropout);
  read(tree, "model.label_smoothing", cfg.model.label_smoothing);

  read(tree, "loss.lambda", cfg.loss.lambda);
  read(tree, "loss.alpha", cfg.loss.alpha);

  read(tree, "optim.learning_rate", cfg.learning_rate);
  read(tree, "optim.plateau_factor", cfg.plateau_factor);
  read(tree, "optim.plateau_patience", cfg.plateau_patience);
  read(tree, "optim.min_lr", cfg.min_lr);
  read(tree, "optim.grad_clip", cfg.grad_clip);

  read(tree, "train.epochs", cfg.epochs);
  read(tree, "train.batch_size", cfg.batch_size);
  read(tree, "train.seed", cfg.seed);
  read(tree, "train.early_stop_patience", cfg.early_stop_patience);
  std::string langs = join(cfg.langs);
  read(tree, "train.langs", langs);
  cfg.langs = split_csv_list(langs);
  read_bool(tree, "train.spec_augment", cfg.spec_augment);
  read(tree, "train.freq_masks", cfg.spec_augment_config.num_freq_masks);
  read(tree, "train.max_freq_width", cfg.spec_augment_config.max_freq_width);
  read(tree, "train.time_masks", cfg.spec_augment_config.num_time_masks);
  read(tree, "train.max_time_width", cfg.spec_augment_config.max_time_width);
  read_bool(tree, "train.speed_perturb", cfg.speed_perturb);
  read(tree, "train.valid_fraction", cfg.valid_fraction);

  read(tree, "paths.train_manifest", cfg.train_manifest);
  read(tree, "paths.valid_manifest", cfg.valid_manifest);
  read(tree, "paths.out_dir", cfg.out_dir);
  cfg.train_manifest = resolve(base_dir, cfg.train_manifest);
  cfg.valid_manifest = resolve(base_dir, cfg.valid_manifest);
  cfg.out_dir = resolve(base_dir, cfg.out_dir);

  read(tree, "decode.beam", cfg.beam);
  read(tree, "decode.max_len_extra", cfg.max_len_extra);
  read_bool(tree, "decode.constrain_first", cfg.constrain_first);

  auto& s = cfg.synth;
  read(tree, "synth.num_languages", s.num_languages);
  read(tree, "synth.phones_shared", s.phones_shared);
  read(tree, "synth.graphemes_per_language", s.graphemes_per_language);
  read(tree, "synth.utterances_per_language", s.utterances_per_language);
  read(tree, "synth.dev_utterances_per_language", s.dev_utterances_per_language);
  read(tree, "synth.min_phones", s.min_phones);
  read(tree, "synth.max_phones", s.max_phones);
  read(tree, "synth.word_break_prob", s.word_break_prob);
  read(tree, "synth.frames_per_phone", s.frames_per_phone);
  read(tree, "synth.noise_std", s.noise_std);
  read(tree, "synth.language_offset_std", s.language_offset_std);
  read_bool(tree, "synth.full_phone_inventory", s.full_phone_inventory);
  read_bool(tree, "synth.waveform", s.waveform);
  read(tree, "synth.seed", s.seed);
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_run_config(buf.str(), std::filesystem::path(path).parent_path().string());
}

std::string format_run_config(const RunConfig& cfg) {
  pt::ptree tree;
  const auto& enc = cfg.model.encoder;
  tree.put("model.num_blocks", enc.num_blocks);
  tree.put("model.d_model", enc.d_model);
  tree.put("model.num_heads", enc.num_heads);
  tree.put("model.ff_hidden", enc.ff_hidden);
  tree.put("model.conv_kernel", enc.conv_kernel);
  tree.put("model.conv_norm", enc.conv_norm == ConvNorm::kBatch ? "batch" : "layer");
  tree.put("model.decoder_layers", cfg.model.decoder_layers);
  tree.put("model.decoder_heads", cfg.model.decoder_heads);
  tree.put("model.decoder_ff_hidden", cfg.model.decoder_ff_hidden);
  tree.put("model.dropout", cfg.dropout);
  tree.put("model.label_smoothing", cfg.model.label_smoothing);
  tree.put("loss.lambda", cfg.loss.lambda);
  tree.put("loss.alpha", cfg.loss.alpha);
  tree.put("optim.learning_rate", cfg.learning_rate);
  tree.put("optim.plateau_factor", cfg.plateau_factor);
  tree.put("optim.plateau_patience", cfg.plateau_patience);
  tree.put("optim.min_lr", cfg.min_lr);
  tree.put("optim.grad_clip", cfg.grad_clip);
  tree.put("train.epochs", cfg.epochs);
  tree.put("train.batch_size", cfg.batch_size);
  tree.put("train.seed", cfg.seed);
  tree.put("train.early_stop_patience", cfg.early_stop_patience);
  tree.put("train.langs", join(cfg.langs));
  tree.put("train.spec_augment", cfg.spec_augment ? "true" : "false");
  tree.put("train.freq_masks", cfg.spec_augment_config.num_freq_masks);
  tree.put("train.max_freq_width", cfg.spec_augment_config.max_freq_width);
  tree.put("train.time_masks", cfg.spec_augment_config.num_time_masks);
  tree.put("train.max_time_width", cfg.spec_augment_config.max_time_width);
  tree.put("train.speed_perturb", cfg.speed_perturb ? "true" : "false");
  tree.put("train.valid_fraction", cfg.valid_fraction);
  tree.put("paths.train_manifest", cfg.train_manifest);
  tree.put("paths.valid_manifest", cfg.valid_manifest);
  tree.put("paths.out_dir", cfg.out_dir);
  tree.put("decode.beam", cfg.beam);
  tree.put("decode.max_len_extra", cfg.max_len_extra);
  tree.put("decode.constrain_first", cfg.constrain_first ? "true" : "false");
  const auto& s = cfg.synth;
  tree.put("synth.num_languages", s.num_languages);
  tree.put("synth.phones_shared", s.phones_shared);
  tree.put("synth.graphemes_per_language", s.graphemes_per_language);
  tree.put("synth.utterances_per_language", s.utterances_per_language);
  tree.put("synth.dev_utterances_per_language", s.dev_utterances_per_language);
  tree.put("synth.min_phones", s.min_phones);
  tree.put("synth.max_phones", s.max_phones);
  tree.put("synth.word_break_prob", s.word_break_prob);
  tree.put("synth.frames_per_phone", s.frames_per_phone);
  tree.put("synth.noise_std", s.noise_std);
  tree.put("synth.language_offset_std", s.language_offset_std);
  tree.put("synth.full_phone_inventory", s.full_phone_inventory ? "true" : "false");
  tree.put("synth.waveform", s.waveform ? "true" : "false");
  tree.put("synth.seed", s.seed);
  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

}  // namespace dualdec
