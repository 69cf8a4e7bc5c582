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

#include "dualdec/checkpoint.h"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dualdec {

namespace {

constexpr char kMagic[] = "DDCF1";
constexpr std::size_t kMagicLen = 5;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw DataError("tensor container truncated at byte " + std::to_string(pos_));
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_tensors(const NamedTensors& tensors) {
  std::string out(kMagic, kMagicLen);
  for (const auto& [name, t] : tensors) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, t.shape().size());
    for (Index d : t.shape()) put_u64(out, static_cast<std::uint64_t>(d));
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

NamedTensors decode_tensors(const std::string& bytes) {
  if (bytes.compare(0, kMagicLen, kMagic) != 0) {
    throw DataError("not a DDCF1 tensor container (bad magic)");
  }
  Reader in(bytes);
  in.take(kMagicLen);
  NamedTensors out;
  while (!in.done()) {
    const std::uint64_t name_len = in.u64();
    std::string name = in.take(name_len);
    const std::uint64_t rank = in.u64();
    if (rank > 16) throw DataError("tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<Index>(in.u64());
    const Index n = shape_numel(shape);
    std::vector<double> data(n);
    for (auto& v : data) v = std::bit_cast<double>(in.u64());
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

void save_tensors(const std::string& path, const NamedTensors& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  const std::string bytes = encode_tensors(tensors);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("failed writing " + path);
}

NamedTensors load_tensors(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open tensor container " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_tensors(bytes);
}

}  // namespace dualdec
