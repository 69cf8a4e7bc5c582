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

#include "dualdec/manifest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <set>
#include <sstream>

namespace dualdec {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

bool in_set(const std::vector<std::string>& set, const std::string& tag) {
  return std::find(set.begin(), set.end(), tag) != set.end();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string Manifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).string();
}

std::vector<std::string> Manifest::language_labels() const {
  std::set<std::string> labels;
  for (const auto& r : rows) labels.insert(r.language);
  return {labels.begin(), labels.end()};
}

std::vector<std::string> split_phonemes(const std::string& phonemes) {
  std::istringstream in(phonemes);
  return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

Manifest parse_manifest(const std::string& contents, const std::string& base_dir,
                        const ManifestOptions& options) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream in(contents);
  std::string line;
  int line_no = 0;
  FeatureStats stats;
  bool have_mean = false, have_std = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream c(line.substr(1));
      std::string key, which;
      c >> key >> which;
      if (key != "stats") continue;
      std::vector<double> values{std::istream_iterator<double>(c), std::istream_iterator<double>()};
      if (values.size() != static_cast<std::size_t>(kNumMelBins)) {
        throw DataError("manifest line " + std::to_string(line_no) +
                        ": stats line needs 40 values");
      }
      if (which == "mean") {
        stats.mean = std::move(values);
        have_mean = true;
      } else if (which == "std") {
        stats.stddev = std::move(values);
        have_std = true;
      }
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 5) {
      throw DataError("manifest line " + std::to_string(line_no) + ": expected 5 fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty() || fields[3].empty()) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": empty utterance id, path or language");
    }
    m.rows.push_back({fields[0], fields[1], fields[2], fields[3], fields[4]});
    const auto& tag = m.rows.back().language;
    if (!in_set(kCorpusLanguageLabels, tag) && !in_set(kSyntheticLanguageLabels, tag)) {
      throw DataError("manifest line " + std::to_string(line_no) + ": unknown language tag '" +
                      tag + "'");
    }
    if (options.check_paths && !std::filesystem::exists(m.resolve(fields[1]))) {
      throw DataError("manifest line " + std::to_string(line_no) + ": path does not exist: " +
                      m.resolve(fields[1]));
    }
  }
  if (have_mean && have_std) m.stats = std::move(stats);
  if (m.rows.empty()) {
    m.warnings.push_back("manifest contains no utterances");
    return m;
  }
  const bool real = in_set(kCorpusLanguageLabels, m.rows[0].language);
  for (const auto& r : m.rows) {
    if (in_set(kCorpusLanguageLabels, r.language) != real) {
      throw DataError("manifest mixes corpus and synthetic language labels (utterance " +
                      r.utt_id + ")");
    }
  }
  return m;
}

Manifest load_manifest(const std::string& path, const ManifestOptions& options) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open manifest " + path);
  const std::string contents((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_manifest(contents, std::filesystem::path(path).parent_path().string(), options);
}

std::string format_manifest(const Manifest& manifest) {
  std::ostringstream out;
  if (manifest.stats) {
    out << "# stats mean";
    for (double v : manifest.stats->mean) out << ' ' << format_double(v);
    out << "\n# stats std";
    for (double v : manifest.stats->stddev) out << ' ' << format_double(v);
    out << '\n';
  }
  for (const auto& r : manifest.rows) {
    out << r.utt_id << '\t' << r.path << '\t' << r.text << '\t' << r.language << '\t'
        << r.phonemes << '\n';
  }
  return out.str();
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  f << format_manifest(manifest);
}

Manifest filter_languages(const Manifest& manifest, const std::vector<std::string>& labels) {
  Manifest out = manifest;
  if (labels.empty()) return out;
  out.rows.clear();
  for (const auto& r : manifest.rows) {
    if (in_set(labels, r.language)) out.rows.push_back(r);
  }
  return out;
}

}  // namespace dualdec
