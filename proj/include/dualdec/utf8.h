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

#ifndef DUALDEC_UTF8_H_
#define DUALDEC_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace dualdec {

// Throws DataError on malformed input.
std::vector<char32_t> utf8_decode(std::string_view text);
std::string utf8_encode(char32_t code_point);
std::string utf8_encode(const std::vector<char32_t>& code_points);

}  // namespace dualdec

#endif  // DUALDEC_UTF8_H_
