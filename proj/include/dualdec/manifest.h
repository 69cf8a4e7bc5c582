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

#ifndef DUALDEC_MANIFEST_H_
#define DUALDEC_MANIFEST_H_

#include <optional>
#include <string>
#include <vector>

#include "dualdec/features.h"

namespace dualdec {

inline const std::vector<std::string> kCorpusLanguageLabels = {"[TE]", "[TA]", "[GU]"};
inline const std::vector<std::string> kSyntheticLanguageLabels = {"[L1]", "[L2]", "[L3]"};

struct ManifestRow {
  std::string utt_id;
  std::string path;      // .wav, or a tensor container holding "feat/<utt_id>"
  std::string text;      // UTF-8 transcript, words separated by single spaces
  std::string language;  // e.g. "[TA]"
  std::string phonemes;  // space-separated phonemes, "<space>" between words
};

// UTF-8 TSV, five tab-separated columns, no header. Lines starting with '#'
// are comments, except "# stats mean ..." / "# stats std ..." which carry
// the global feature normalization statistics.
struct Manifest {
  std::vector<ManifestRow> rows;
  std::optional<FeatureStats> stats;
  std::string base_dir;  // relative paths resolve against this
  std::vector<std::string> warnings;

  std::string resolve(const std::string& path) const;
  std::vector<std::string> language_labels() const;  // sorted, unique
};

struct ManifestOptions {
  bool check_paths = true;
};

Manifest load_manifest(const std::string& path, const ManifestOptions& options = {});
Manifest parse_manifest(const std::string& contents, const std::string& base_dir,
                        const ManifestOptions& options = {});
void save_manifest(const std::string& path, const Manifest& manifest);
std::string format_manifest(const Manifest& manifest);

// Rows whose language is in `labels` (all rows when labels is empty).
Manifest filter_languages(const Manifest& manifest, const std::vector<std::string>& labels);

std::vector<std::string> split_phonemes(const std::string& phonemes);

}  // namespace dualdec

#endif  // DUALDEC_MANIFEST_H_
