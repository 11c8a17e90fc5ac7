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
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hybridrl/agent.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/networks.hpp"
#include "hybridrl/pdqn.hpp"
#include "hybridrl/replay.hpp"

namespace hybridrl {

// Fixed hybrid actions that stand in for the continuous space.
struct DiscreteActionTable {
  std::vector<HybridAction> actions;

  int size() const { return static_cast<int>(actions.size()); }

  // Table entries whose head is usable under `mask`.
  ActionMask expand(const ActionMask& mask) const {
    ActionMask m(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) m[i] = mask.at(static_cast<std::size_t>(actions[i].k));
    return m;
  }
};

// `directions` unit pulls at angles 2 pi i / directions, then one entry for
// every parameter-free head. Requires a space made of parameter-free heads
// and direction-pair heads.
inline DiscreteActionTable dqn_discretize(const ActionSpaceSpec& space, int directions) {
  if (directions < 1) throw ConfigError("dqn_discretize: need at least one direction");
  DiscreteActionTable table;
  const int dim = space.param_dim();
  for (const auto& b : space.layout.blocks) {
    if (b.kind != BlockKind::kDirectionPair) continue;
    for (int i = 0; i < directions; ++i) {
      const double a = 2.0 * std::numbers::pi * i / directions;
      Vector x = Vector::Zero(dim);
      x[b.offset] = std::cos(a);
      x[b.offset + 1] = std::sin(a);
      table.actions.push_back({b.head, std::move(x)});
    }
  }
  for (const auto& b : space.layout.blocks) {
    if (b.dim == 0) {
      table.actions.push_back({b.head, Vector::Zero(dim)});
    } else if (b.kind != BlockKind::kDirectionPair) {
      throw ConfigError("dqn_discretize: only direction and parameter-free heads can be discretized");
    }
  }
  return table;
}

// Discretized-DQN baseline. Q(s) has one output per table entry; replay
// stores the entry index as the action head.
class DQNAgent final : public Agent {
 public:
  DQNAgent(const ActionSpaceSpec& space, int state_dim, PDQNConfig cfg, int directions = 8)
      : space_(space),
        cfg_(std::move(cfg)),
        table_(dqn_discretize(space, directions)),
        q_(QNetwork::make(state_dim, table_.size(), 0, cfg_.q_hidden, cfg_.dueling, cfg_.seed * 2 + 1)),
        replay_(cfg_.replay_capacity),
        rng_(cfg_.seed) {
    cfg_.validate();
    if (cfg_.optimizer == Optimizer::kRmsprop) q_opt_ = RMSPropState::for_params(q_.params, cfg_.rmsprop);
  }

  std::string name() const override { return "dqn8"; }

  Vector q_values(const Vector& state) const { return q_forward(q_, state, Vector::Zero(0)); }

  AgentAction act(const Vector& state, const ActionMask& mask, bool explore) override {
    const ActionMask entries = table_.expand(mask);
    if (usable_count(entries) == 0) throw InvalidActionError("dqn: every action is masked");
    int idx;
    bool explored = false;
    if (explore) {
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      explored = coin(rng_) < epsilon();
    }
    if (explored)
      idx = sample_usable_head(entries, rng_);
    else
      idx = masked_argmax(q_values(state), entries);
    return {table_.actions[static_cast<std::size_t>(idx)], {idx, Vector::Zero(0)}, explored};
  }

  TrainStats observe(const Vector& state, const AgentAction& action, double reward, const Vector& next_state,
                     bool terminal, const ActionMask& next_mask) override {
    replay_.push({state, action.internal, reward, next_state, terminal, table_.expand(next_mask), {}});
    ++t_;
    return train_step();
  }

  // y = r + gamma max_a Q(s', a) over usable entries (r when terminal), then
  // one gradient step on mean 1/2 (Q(s, a) - y)^2.
  TrainStats train_step() {
    if (replay_.size() < cfg_.effective_warmup()) return {};
    const auto idx = replay_.sample_indices(cfg_.batch_size, rng_);
    const auto samples = regression_batch(idx);
    const auto lg = q_loss_grad(q_, samples);
    apply_update(q_.params, lg.grads, lr_omega(), cfg_.optimizer, &q_opt_);
    return {true, lg.loss, std::numeric_limits<double>::quiet_NaN()};
  }

  std::vector<QSample> regression_batch(const std::vector<std::size_t>& idx) const {
    std::vector<QSample> samples;
    samples.reserve(idx.size());
    std::vector<Eigen::Index> live;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& tr = replay_.slot(idx[i]);
      samples.push_back({tr.state, tr.action, tr.reward});
      if (!tr.terminal) live.push_back(static_cast<Eigen::Index>(i));
    }
    if (!live.empty()) {
      Matrix next(q_.state_dim, static_cast<Eigen::Index>(live.size()));
      for (std::size_t j = 0; j < live.size(); ++j)
        next.col(static_cast<Eigen::Index>(j)) = replay_.slot(idx[static_cast<std::size_t>(live[j])]).next_state;
      const auto qf = q_forward_batch(q_, next, Matrix(0, next.cols()));
      for (std::size_t j = 0; j < live.size(); ++j) {
        const auto i = static_cast<std::size_t>(live[j]);
        samples[i].target +=
            cfg_.gamma * masked_max(qf.q.col(static_cast<Eigen::Index>(j)), replay_.slot(idx[i]).next_mask);
      }
    }
    return samples;
  }

  std::int64_t steps() const override { return t_; }
  void set_steps(std::int64_t t) override { t_ = t; }
  double epsilon() const override { return schedule_value(cfg_.epsilon, t_); }
  double lr_omega() const override { return schedule_value(cfg_.alpha, t_); }
  double lr_theta() const override { return 0.0; }

  std::vector<NamedTensor> export_tensors() const override {
    std::vector<NamedTensor> out;
    export_params("dqn8.omega", q_.params, out);
    out.push_back({"dqn8.dueling", {1}, {q_.dueling ? 1.0 : 0.0}});
    return out;
  }

  void import_tensors(const std::vector<NamedTensor>& ts) override { import_params("dqn8.omega", ts, q_.params); }

  const DiscreteActionTable& table() const { return table_; }
  QNetwork& q() { return q_; }
  const QNetwork& q() const { return q_; }
  ReplayBuffer& replay() { return replay_; }

 private:
  ActionSpaceSpec space_;
  PDQNConfig cfg_;
  DiscreteActionTable table_;
  QNetwork q_;
  RMSPropState q_opt_;
  ReplayBuffer replay_;
  std::int64_t t_ = 0;
  Rng rng_;
};

}  // namespace hybridrl
