// Copyright 2026 The hybridrl Authors. All rights reserved.
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

// Binary checkpoint, all integers and floats little-endian:
//
//   "PDQN" | u32 version | u64 space digest | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | u32 dims[rank]
//               | f64 values[prod(dims)]
//
// The step counter travels as the tensor "meta.step".

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hybridrl/action_space.hpp"
#include "hybridrl/agent.hpp"
#include "hybridrl/error.hpp"

namespace hybridrl {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'P', 'D', 'Q', 'N'};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t digest = 0;
  std::vector<NamedTensor> tensors;  // parameters, without meta.* entries
  std::int64_t step = 0;
  std::int64_t episode = 0;

  bool operator==(const Checkpoint&) const = default;
};

namespace ckpt_detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_tensor(std::string& out, const NamedTensor& t) {
  std::size_t n = 1;
  for (auto d : t.dims) n *= d;
  if (n != t.values.size()) throw CheckpointError("tensor '" + t.name + "': dims do not match value count");
  put_u32(out, static_cast<std::uint32_t>(t.name.size()));
  out += t.name;
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  for (double v : t.values) put_f64(out, v);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}

  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw CheckpointError("checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace ckpt_detail

inline std::string encode_checkpoint(const Checkpoint& c) {
  using namespace ckpt_detail;
  std::string out(kCheckpointMagic, 4);
  put_u32(out, c.version);
  put_u64(out, c.digest);
  put_u32(out, static_cast<std::uint32_t>(c.tensors.size() + 2));
  for (const auto& t : c.tensors) put_tensor(out, t);
  put_tensor(out, {"meta.step", {1}, {static_cast<double>(c.step)}});
  put_tensor(out, {"meta.episode", {1}, {static_cast<double>(c.episode)}});
  return out;
}

// Parses a whole checkpoint; nothing is returned unless every byte checks out.
inline Checkpoint decode_checkpoint(const std::string& bytes) {
  using namespace ckpt_detail;
  Reader r(bytes);
  if (r.remaining() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw CheckpointError("not a checkpoint (bad magic)");
  r.bytes(4);
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(c.version));
  c.digest = r.u64();
  const std::uint32_t count = r.u32();
  bool have_step = false;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint32_t len = r.u32();
    t.name = r.bytes(len);
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw CheckpointError("tensor '" + t.name + "' has implausible rank");
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32());
      n *= t.dims.back();
    }
    if (n > r.remaining() / 8) throw CheckpointError("checkpoint is truncated");
    t.values.resize(static_cast<std::size_t>(n));
    for (auto& v : t.values) v = r.f64();
    if (t.name == "meta.step" || t.name == "meta.episode") {
      if (t.values.size() != 1 || !std::isfinite(t.values[0]) || t.values[0] < 0)
        throw CheckpointError("bad " + t.name + " entry");
      (t.name == "meta.step" ? c.step : c.episode) = static_cast<std::int64_t>(t.values[0]);
      have_step = have_step || t.name == "meta.step";
      continue;
    }
    c.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw CheckpointError("trailing bytes after checkpoint");
  if (!have_step) throw CheckpointError("checkpoint has no step counter");
  return c;
}

// Writes through a temporary file and renames, so an interrupted save never
// leaves a half-written checkpoint at `path`.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const std::string bytes = encode_checkpoint(c);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

// load_checkpoint plus a check that it was written for `space`.
inline Checkpoint load_checkpoint(const std::filesystem::path& path, const ActionSpaceSpec& space) {
  Checkpoint c = load_checkpoint(path);
  if (c.digest != space_digest(space)) throw CheckpointError("checkpoint from different action space");
  return c;
}

}  // namespace hybridrl
