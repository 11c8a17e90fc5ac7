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

#include <algorithm>
#include <cstddef>
#include <random>
#include <vector>

#include "hybridrl/action_space.hpp"
#include "hybridrl/error.hpp"
#include "hybridrl/mlp.hpp"

namespace hybridrl {

struct Transition {
  Vector state;
  HybridAction action;  // executed head and the full parameter vector
  double reward = 0.0;
  Vector next_state;
  bool terminal = false;
  ActionMask next_mask;
  ActionMask mask;  // availability at `state`; empty means all usable
};

// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error("replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }

  // i-th oldest stored transition.
  const Transition& at(std::size_t i) const {
    if (i >= data_.size()) throw Error("replay index out of range");
    const std::size_t start = data_.size() < capacity_ ? 0 : cursor_;
    return data_[(start + i) % capacity_];
  }

  // Storage slots for a minibatch of size `batch`: distinct when the buffer
  // holds at least `batch` items, drawn with replacement otherwise.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    if (data_.empty()) throw Error("cannot sample from an empty replay buffer");
    const std::size_t n = data_.size();
    std::vector<std::size_t> out;
    out.reserve(batch);
    if (n < batch) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t i = 0; i < batch; ++i) out.push_back(pick(rng));
      return out;
    }
    // Floyd's subset sampling.
    for (std::size_t j = n - batch; j < n; ++j) {
      std::uniform_int_distribution<std::size_t> pick(0, j);
      const std::size_t t = pick(rng);
      if (std::find(out.begin(), out.end(), t) == out.end())
        out.push_back(t);
      else
        out.push_back(j);
    }
    return out;
  }

  std::vector<Transition> sample(std::size_t batch, Rng& rng) const {
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i : sample_indices(batch, rng)) out.push_back(data_[i]);
    return out;
  }

  const Transition& slot(std::size_t i) const { return data_.at(i); }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> data_;
};

}  // namespace hybridrl
