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

#ifndef DUALDEC_CHECKPOINT_H_
#define DUALDEC_CHECKPOINT_H_

#include <string>
#include <utility>
#include <vector>

#include "dualdec/tensor.h"

namespace dualdec {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Flat tensor container. Layout, all integers little-endian u64:
//   "DDCF1"
//   repeated until EOF: name_len, name bytes (UTF-8), rank, dims[rank],
//                       data[numel] as little-endian IEEE-754 f64
std::string encode_tensors(const NamedTensors& tensors);
NamedTensors decode_tensors(const std::string& bytes);

void save_tensors(const std::string& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::string& path);

}  // namespace dualdec

#endif  // DUALDEC_CHECKPOINT_H_
