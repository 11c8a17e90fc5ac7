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

#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hybridrl/error.hpp"
#include "hybridrl/mlp.hpp"

namespace hybridrl {

enum class BlockKind {
  kDirectionPair,  // unit 2-vector (cos a, sin a)
  kBoundedBox,     // per-coordinate [low, high]
  kFree,           // unconstrained
};

inline const char* to_string(BlockKind k) {
  switch (k) {
    case BlockKind::kDirectionPair: return "direction";
    case BlockKind::kBoundedBox: return "box";
    case BlockKind::kFree: return "free";
  }
  return "?";
}

// Continuous parameters owned by one discrete head.
struct ParamBlock {
  int head = 0;
  int dim = 0;
  BlockKind kind = BlockKind::kFree;
  Vector low;   // bounded-box only
  Vector high;  // bounded-box only
  int offset = 0;  // start within the concatenated parameter vector
};

// One block per head, in head order; blocks are laid out contiguously.
struct ParamLayout {
  std::vector<ParamBlock> blocks;

  ParamLayout() = default;
  explicit ParamLayout(std::vector<ParamBlock> b) : blocks(std::move(b)) {
    int off = 0;
    for (auto& blk : blocks) {
      blk.offset = off;
      off += blk.dim;
    }
    validate();
  }

  int total_dim() const {
    int d = 0;
    for (const auto& b : blocks) d += b.dim;
    return d;
  }
  int num_heads() const { return static_cast<int>(blocks.size()); }
  const ParamBlock& block(int head) const { return blocks.at(static_cast<std::size_t>(head)); }

  void validate() const {
    int off = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      if (b.head != static_cast<int>(i)) throw ShapeError("layout blocks must be ordered by head");
      if (b.dim < 0) throw ShapeError("block dimension must be >= 0");
      if (b.offset != off) throw ShapeError("layout offsets are not contiguous");
      off += b.dim;
      if (b.kind == BlockKind::kDirectionPair && b.dim != 2)
        throw ShapeError("direction-pair blocks must have dimension 2");
      if (b.kind == BlockKind::kBoundedBox) {
        if (b.low.size() != b.dim || b.high.size() != b.dim) throw ShapeError("bounds size must equal block dim");
        if (!(b.low.array() < b.high.array()).all()) throw ShapeError("bounds need low < high");
      }
    }
  }

  static ParamBlock direction(int head) { return {head, 2, BlockKind::kDirectionPair, {}, {}, 0}; }
  static ParamBlock none(int head) { return {head, 0, BlockKind::kFree, {}, {}, 0}; }
  static ParamBlock free(int head, int dim) { return {head, dim, BlockKind::kFree, {}, {}, 0}; }
  static ParamBlock box(int head, Vector low, Vector high) {
    const int d = static_cast<int>(low.size());
    return {head, d, BlockKind::kBoundedBox, std::move(low), std::move(high), 0};
  }
};

// Per-head availability; true means the head may be executed.
using ActionMask = std::vector<bool>;

inline ActionMask all_usable(int k) { return ActionMask(static_cast<std::size_t>(k), true); }

inline int usable_count(const ActionMask& mask) {
  int n = 0;
  for (bool b : mask) n += b ? 1 : 0;
  return n;
}

struct ActionSpaceSpec {
  ParamLayout layout;
  std::vector<std::string> head_names;

  int num_heads() const { return layout.num_heads(); }
  int param_dim() const { return layout.total_dim(); }

  void validate() const {
    if (num_heads() < 1) throw ShapeError("action space needs at least one head");
    if (head_names.size() != static_cast<std::size_t>(num_heads()))
      throw ShapeError("one name per head required");
    layout.validate();
  }

  // Stable textual form used for checkpoint digests.
  std::string canonical_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "K=" << num_heads() << ";D=" << param_dim();
    for (const auto& b : layout.blocks) {
      os << ";" << head_names[static_cast<std::size_t>(b.head)] << ":" << to_string(b.kind) << ":" << b.dim;
      for (Eigen::Index i = 0; i < b.low.size(); ++i) os << ":" << b.low[i] << "," << b.high[i];
    }
    return os.str();
  }
};

// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t space_digest(const ActionSpaceSpec& space) { return fnv1a64(space.canonical_text()); }

// Discrete head plus the full parameter vector in effect when it was chosen.
struct HybridAction {
  int k = 0;
  Vector x_all;

  bool operator==(const HybridAction& o) const { return k == o.k && x_all == o.x_all; }
};

inline void check_action(const ActionSpaceSpec& space, const HybridAction& a) {
  if (a.k < 0 || a.k >= space.num_heads()) throw InvalidActionError("head index out of range");
  if (a.x_all.size() != space.param_dim()) throw ShapeError("action parameter vector has wrong dimension");
}

}  // namespace hybridrl
