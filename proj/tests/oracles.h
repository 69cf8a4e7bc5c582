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

#ifndef DUALDEC_TESTS_ORACLES_H_
#define DUALDEC_TESTS_ORACLES_H_

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace dualdec::testing {

// Collapses a frame-level path: merge repeats, then drop blanks (id 0).
inline std::vector<std::int64_t> ctc_collapse(const std::vector<std::int64_t>& path) {
  std::vector<std::int64_t> out;
  std::int64_t prev = -1;
  for (auto k : path) {
    if (k != prev && k != 0) out.push_back(k);
    prev = k;
  }
  return out;
}

struct BruteForceCtc {
  double log_total = 0.0;     // log of the summed probability of all valid paths
  double log_best = -INFINITY;  // log-probability of the single best valid path
};

// Enumerates all V^T paths. probs is row-major [T, V] of linear probabilities.
inline BruteForceCtc ctc_brute_force(const std::vector<double>& probs, int T, int V,
                                     const std::vector<std::int64_t>& target) {
  long double total = 0.0L;
  long double best = 0.0L;
  std::vector<std::int64_t> path(T, 0);
  std::int64_t count = 1;
  for (int t = 0; t < T; ++t) count *= V;
  for (std::int64_t code = 0; code < count; ++code) {
    std::int64_t c = code;
    long double p = 1.0L;
    for (int t = 0; t < T; ++t) {
      path[t] = c % V;
      c /= V;
      p *= probs[t * V + path[t]];
    }
    if (ctc_collapse(path) == target) {
      total += p;
      if (p > best) best = p;
    }
  }
  return {static_cast<double>(std::log(total)), static_cast<double>(std::log(best))};
}

// Two-row Levenshtein distance, computed independently of the library.
template <typename T>
long levenshtein(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<long> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<long>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::vector<std::string> whitespace_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace dualdec::testing

#endif  // DUALDEC_TESTS_ORACLES_H_
