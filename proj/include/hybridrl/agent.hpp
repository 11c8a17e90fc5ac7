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

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hybridrl/action_space.hpp"
#include "hybridrl/error.hpp"
#include "hybridrl/mlp.hpp"
#include "hybridrl/networks.hpp"
#include "hybridrl/schedule.hpp"

namespace hybridrl {

// Exploration distribution used on the epsilon branch.
struct ExplorationDist {
  enum class Kind {
    kUniformHybrid,    // k uniform over usable heads, x uniform over each block
    kGreedyPlusNoise,  // greedy action with Gaussian noise on the parameters
  };
  Kind kind = Kind::kUniformHybrid;
  double noise_scale = 0.1;
};

// Uniform draw of every parameter block: a uniform angle for direction
// pairs, uniform in the box for bounded blocks and in [-1, 1] for free ones.
inline Vector sample_uniform_params(const ParamLayout& layout, Rng& rng) {
  Vector x(layout.total_dim());
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (const auto& b : layout.blocks) {
    switch (b.kind) {
      case BlockKind::kDirectionPair: {
        const double a = angle(rng);
        x[b.offset] = std::cos(a);
        x[b.offset + 1] = std::sin(a);
        break;
      }
      case BlockKind::kBoundedBox:
        for (int i = 0; i < b.dim; ++i) {
          std::uniform_real_distribution<double> d(b.low[i], b.high[i]);
          x[b.offset + i] = d(rng);
        }
        break;
      case BlockKind::kFree:
        for (int i = 0; i < b.dim; ++i) x[b.offset + i] = unit(rng);
        break;
    }
  }
  return x;
}

inline int sample_usable_head(const ActionMask& mask, Rng& rng) {
  const int n = usable_count(mask);
  if (n == 0) throw InvalidActionError("every head is masked");
  std::uniform_int_distribution<int> pick(0, n - 1);
  int which = pick(rng);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (!mask[k]) continue;
    if (which-- == 0) return static_cast<int>(k);
  }
  return -1;  // unreachable
}

inline HybridAction sample_uniform_action(const ParamLayout& layout, const ActionMask& mask, Rng& rng) {
  const int k = sample_usable_head(mask, rng);
  return {k, sample_uniform_params(layout, rng)};
}

// Gaussian perturbation of a parameter vector, re-projected onto each block.
inline Vector perturb_params(const ParamLayout& layout, const Vector& x, double scale, Rng& rng) {
  std::normal_distribution<double> noise(0.0, scale);
  Vector y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise(rng);
  return clamp_to_bounds(layout, transform_blocks(layout, Matrix(y)).col(0));
}

// Result of a decision. `env` goes to the environment; `internal` is what the
// agent stores in its replay (for P-DQN the two coincide).
struct AgentAction {
  HybridAction env;
  HybridAction internal;
  bool explored = false;
};

struct TrainStats {
  bool trained = false;
  double loss_q = std::numeric_limits<double>::quiet_NaN();
  double loss_theta = std::numeric_limits<double>::quiet_NaN();
};

// Flat tensor for checkpoints; values are row-major.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  bool operator==(const NamedTensor&) const = default;
};

inline void export_params(const std::string& prefix, const MLPParams& p, std::vector<NamedTensor>& out) {
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const auto& l = p.layers[i];
    NamedTensor w{prefix + "." + std::to_string(i) + ".weight",
                  {static_cast<std::uint32_t>(l.weight.rows()), static_cast<std::uint32_t>(l.weight.cols())},
                  {}};
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.values.push_back(l.weight(r, c));
    out.push_back(std::move(w));
    NamedTensor b{prefix + "." + std::to_string(i) + ".bias", {static_cast<std::uint32_t>(l.bias.size())}, {}};
    b.values.assign(l.bias.data(), l.bias.data() + l.bias.size());
    out.push_back(std::move(b));
  }
}

inline const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  for (const auto& t : ts)
    if (t.name == name) return t;
  throw CheckpointError("missing tensor '" + name + "'");
}

inline bool has_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  for (const auto& t : ts)
    if (t.name == name) return true;
  return false;
}

// Overwrites `p` (whose shapes are already set) from tensors named like
// export_params produced.
inline void import_params(const std::string& prefix, const std::vector<NamedTensor>& ts, MLPParams& p) {
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const auto& w = find_tensor(ts, prefix + "." + std::to_string(i) + ".weight");
    const auto& b = find_tensor(ts, prefix + "." + std::to_string(i) + ".bias");
    if (w.dims.size() != 2 || w.dims[0] != l.weight.rows() || w.dims[1] != l.weight.cols() ||
        w.values.size() != static_cast<std::size_t>(l.weight.size()))
      throw CheckpointError("tensor '" + w.name + "' has the wrong shape");
    if (b.dims.size() != 1 || b.dims[0] != l.bias.size() || b.values.size() != static_cast<std::size_t>(l.bias.size()))
      throw CheckpointError("tensor '" + b.name + "' has the wrong shape");
    std::size_t n = 0;
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = w.values[n++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = b.values[static_cast<std::size_t>(r)];
  }
}

// Hidden sizes recovered from exported tensors: prefix.i.weight has dims
// (out, in) for i = 0, 1, ...
inline std::vector<int> tensor_layer_sizes(const std::vector<NamedTensor>& ts, const std::string& prefix) {
  std::vector<int> sizes;
  for (std::size_t i = 0;; ++i) {
    const std::string name = prefix + "." + std::to_string(i) + ".weight";
    if (!has_tensor(ts, name)) break;
    const auto& w = find_tensor(ts, name);
    if (w.dims.size() != 2) throw CheckpointError("tensor '" + name + "' is not a matrix");
    if (sizes.empty()) sizes.push_back(static_cast<int>(w.dims[1]));
    sizes.push_back(static_cast<int>(w.dims[0]));
  }
  if (sizes.size() < 2) throw CheckpointError("no layers found under '" + prefix + "'");
  return sizes;
}

// Common surface the harness drives. One instance per training run; not
// shared across threads.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string name() const = 0;

  // epsilon-greedy decision when `explore`, greedy otherwise.
  virtual AgentAction act(const Vector& state, const ActionMask& mask, bool explore) = 0;

  // Records one environment step, advances the step counter and runs one
  // training update when past warm-up.
  virtual TrainStats observe(const Vector& state, const AgentAction& action, double reward, const Vector& next_state,
                             bool terminal, const ActionMask& next_mask) = 0;

  virtual std::int64_t steps() const = 0;
  virtual void set_steps(std::int64_t t) = 0;
  virtual double epsilon() const = 0;
  virtual double lr_omega() const = 0;
  virtual double lr_theta() const = 0;

  virtual std::vector<NamedTensor> export_tensors() const = 0;
  virtual void import_tensors(const std::vector<NamedTensor>& tensors) = 0;
};

}  // namespace hybridrl
