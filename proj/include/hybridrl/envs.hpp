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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hybridrl/action_space.hpp"
#include "hybridrl/error.hpp"
#include "hybridrl/mlp.hpp"

namespace hybridrl {

struct StepResult {
  Vector observation;
  double reward = 0.0;
  bool terminal = false;
  bool goal = false;
  ActionMask mask;  // availability for the next decision
};

struct ResetResult {
  Vector observation;
  ActionMask mask;
};

// Single-owner episodic environment over a hybrid action space.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual const ActionSpaceSpec& space() const = 0;
  virtual int observation_dim() const = 0;
  virtual int max_episode_steps() const = 0;
  virtual ResetResult reset(Rng& rng) = 0;
  virtual StepResult step(const HybridAction& action) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

// ---------------------------------------------------------------------------
// Point-mass goal task on the [-1, 1]^2 plate.

struct GoalEnvConfig {
  double dt = 0.1;
  double force = 1.0;
  double brake_amount = 0.1;
  double radius = 0.1;
  double plate = 1.0;           // half-width of the plate
  double target_extent = 0.9;   // targets in [-extent, extent]^2
  double stop_speed = 1e-9;
  int max_steps = 200;
  bool forward_euler = false;   // pos += vel dt instead of the exact update
};

struct GoalEnvState {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  int steps_elapsed = 0;
  bool done = false;
};

inline constexpr int kGoalBrake = 0;
inline constexpr int kGoalPull = 1;
inline constexpr int kGoalObservationDim = 8;

inline ActionSpaceSpec goal_action_space() {
  ActionSpaceSpec s{ParamLayout({ParamLayout::none(kGoalBrake), ParamLayout::direction(kGoalPull)}),
                    {"brake", "pull"}};
  s.validate();
  return s;
}

// (pos, vel, target, distance, inside-circle indicator)
inline Vector goal_observe(const GoalEnvState& s, const GoalEnvConfig& cfg = {}) {
  const double d = (s.pos - s.target).norm();
  Vector obs(kGoalObservationDim);
  obs << s.pos.x(), s.pos.y(), s.vel.x(), s.vel.y(), s.target.x(), s.target.y(), d, d < cfg.radius ? 1.0 : 0.0;
  return obs;
}

inline std::pair<GoalEnvState, Vector> goal_reset(Rng& rng, const GoalEnvConfig& cfg = {}) {
  std::uniform_real_distribution<double> pos_dist(-cfg.plate, cfg.plate);
  std::uniform_real_distribution<double> target_dist(-cfg.target_extent, cfg.target_extent);
  GoalEnvState s;
  do {
    s.pos = {pos_dist(rng), pos_dist(rng)};
    s.target = {target_dist(rng), target_dist(rng)};
  } while ((s.pos - s.target).norm() < cfg.radius);
  return {s, goal_observe(s, cfg)};
}

inline std::pair<GoalEnvState, StepResult> goal_step(const GoalEnvState& state, const HybridAction& action,
                                                     const GoalEnvConfig& cfg = {}) {
  static const ActionSpaceSpec space = goal_action_space();
  if (state.done) throw InvalidActionError("goal_step: episode already terminated");
  check_action(space, action);

  GoalEnvState next = state;
  if (action.k == kGoalPull) {
    Eigen::Vector2d dir(action.x_all[0], action.x_all[1]);
    const double n = dir.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidActionError("goal_step: pull direction must be nonzero");
    const Eigen::Vector2d f = cfg.force * dir / n;
    if (cfg.forward_euler)
      next.pos = state.pos + state.vel * cfg.dt;
    else
      next.pos = state.pos + state.vel * cfg.dt + 0.5 * f * cfg.dt * cfg.dt;
    next.vel = state.vel + f * cfg.dt;
  } else {
    const double speed = state.vel.norm();
    const double reduced = std::max(0.0, speed - cfg.brake_amount);
    if (reduced <= cfg.stop_speed)
      next.vel.setZero();
    else
      next.vel = state.vel * (reduced / speed);
  }
  next.steps_elapsed = state.steps_elapsed + 1;

  const double d0 = (state.pos - state.target).norm();
  const double d1 = (next.pos - next.target).norm();
  const bool goal = d1 < cfg.radius && next.vel.norm() <= cfg.stop_speed;
  const bool out = std::abs(next.pos.x()) > cfg.plate || std::abs(next.pos.y()) > cfg.plate;
  const bool timeout = next.steps_elapsed >= cfg.max_steps;
  next.done = goal || out || timeout;

  StepResult r;
  r.observation = goal_observe(next, cfg);
  r.reward = d0 - d1 + (goal ? 1.0 : 0.0);
  r.terminal = next.done;
  r.goal = goal;
  r.mask = all_usable(space.num_heads());
  return {next, std::move(r)};
}

class GoalEnv final : public Environment {
 public:
  explicit GoalEnv(GoalEnvConfig cfg = {}) : cfg_(cfg), space_(goal_action_space()) { state_.done = true; }

  std::string name() const override { return "goal"; }
  const ActionSpaceSpec& space() const override { return space_; }
  int observation_dim() const override { return kGoalObservationDim; }
  int max_episode_steps() const override { return cfg_.max_steps; }

  ResetResult reset(Rng& rng) override {
    auto [s, obs] = goal_reset(rng, cfg_);
    state_ = s;
    return {std::move(obs), all_usable(space_.num_heads())};
  }

  StepResult step(const HybridAction& action) override {
    auto [s, r] = goal_step(state_, action, cfg_);
    state_ = s;
    return std::move(r);
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<GoalEnv>(*this); }

  const GoalEnvState& state() const { return state_; }
  void set_state(const GoalEnvState& s) { state_ = s; }
  const GoalEnvConfig& config() const { return cfg_; }

 private:
  GoalEnvConfig cfg_;
  ActionSpaceSpec space_;
  GoalEnvState state_;
};

// ---------------------------------------------------------------------------
// One-step quadratic bandit: reward c_k - |x_k - b_k|^2 with a constant zero
// observation. The optimum is known in closed form.

struct BanditSpec {
  std::vector<double> c{1.0, 0.5};
  std::vector<double> b{0.3, -0.2};
  double low = -1.0;
  double high = 1.0;

  int num_heads() const { return static_cast<int>(c.size()); }

  ActionSpaceSpec action_space() const {
    if (c.size() != b.size() || c.empty()) throw ShapeError("bandit needs matching non-empty c and b");
    std::vector<ParamBlock> blocks;
    std::vector<std::string> names;
    for (int k = 0; k < num_heads(); ++k) {
      blocks.push_back(ParamLayout::box(k, Vector::Constant(1, low), Vector::Constant(1, high)));
      names.push_back("arm" + std::to_string(k));
    }
    ActionSpaceSpec s{ParamLayout(std::move(blocks)), std::move(names)};
    s.validate();
    return s;
  }
};

inline constexpr int kBanditObservationDim = 1;

inline StepResult bandit_step(const BanditSpec& spec, const HybridAction& action) {
  const auto space = spec.action_space();
  check_action(space, action);
  const auto& blk = space.layout.block(action.k);
  const double x = action.x_all[blk.offset];
  if (!(x >= spec.low && x <= spec.high)) throw InvalidActionError("bandit parameter outside its bounds");
  for (Eigen::Index i = 0; i < action.x_all.size(); ++i)
    if (!std::isfinite(action.x_all[i])) throw NonFiniteError("bandit action has non-finite parameters");
  const auto k = static_cast<std::size_t>(action.k);
  const double diff = x - spec.b[k];
  StepResult r;
  r.observation = Vector::Zero(kBanditObservationDim);
  r.reward = spec.c[k] - diff * diff;
  r.terminal = true;
  r.mask = all_usable(spec.num_heads());
  return r;
}

// Even episodes disable head 0, odd episodes disable head 1; every other head
// stays usable.
inline ActionMask bandit_parity_mask(int num_heads, long long episode) {
  ActionMask m = all_usable(num_heads);
  m[episode % 2 == 0 ? 0 : 1] = false;
  return m;
}

inline StepResult masked_bandit_step(const BanditSpec& spec, const HybridAction& action, long long parity) {
  const ActionMask current = bandit_parity_mask(spec.num_heads(), parity);
  if (action.k < 0 || action.k >= spec.num_heads()) throw InvalidActionError("head index out of range");
  if (!current[static_cast<std::size_t>(action.k)])
    throw InvalidActionError("masked-bandit: head " + std::to_string(action.k) + " is not usable this episode");
  StepResult r = bandit_step(spec, action);
  r.mask = bandit_parity_mask(spec.num_heads(), parity + 1);
  return r;
}

class BanditEnv final : public Environment {
 public:
  explicit BanditEnv(BanditSpec spec = {}, bool masked = false)
      : spec_(std::move(spec)), space_(spec_.action_space()), masked_(masked) {}

  std::string name() const override { return masked_ ? "masked-bandit" : "bandit"; }
  const ActionSpaceSpec& space() const override { return space_; }
  int observation_dim() const override { return kBanditObservationDim; }
  int max_episode_steps() const override { return 1; }

  ResetResult reset(Rng&) override {
    ++episode_;
    alive_ = true;
    return {Vector::Zero(kBanditObservationDim),
            masked_ ? bandit_parity_mask(spec_.num_heads(), episode_) : all_usable(spec_.num_heads())};
  }

  StepResult step(const HybridAction& action) override {
    if (!alive_) throw InvalidActionError("bandit: episode already terminated");
    StepResult r = masked_ ? masked_bandit_step(spec_, action, episode_) : bandit_step(spec_, action);
    alive_ = false;
    return r;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<BanditEnv>(*this); }

  const BanditSpec& spec() const { return spec_; }
  long long episode() const { return episode_; }

 private:
  BanditSpec spec_;
  ActionSpaceSpec space_;
  bool masked_ = false;
  bool alive_ = false;
  long long episode_ = -1;  // index of the current episode; first reset -> 0
};

inline std::unique_ptr<Environment> make_env(const std::string& name) {
  if (name == "goal") return std::make_unique<GoalEnv>();
  if (name == "bandit") return std::make_unique<BanditEnv>();
  if (name == "masked-bandit") return std::make_unique<BanditEnv>(BanditSpec{}, true);
  throw ConfigError("unknown environment '" + name + "' (expected goal, bandit or masked-bandit)");
}

}  // namespace hybridrl
