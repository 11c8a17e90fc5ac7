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
#include <memory>
#include <string>

#include "hybridrl/agent.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/error.hpp"

namespace hybridrl {

struct EvalReport {
  std::int64_t step = 0;
  int trials = 0;
  double mean_reward = 0.0;
  double goal_rate = 0.0;
  double mean_len = 0.0;
  int goals = 0;
};

// Greedy rollouts (no exploration) of `trials` episodes on a fresh copy of
// `proto`. Start states come from an Rng seeded with `seed`, so the report
// is a pure function of the agent's parameters and the seed.
inline EvalReport evaluate(Agent& agent, const Environment& proto, int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("evaluate: trials must be >= 1");
  auto env = proto.clone();
  Rng rng(seed);
  EvalReport rep;
  rep.trials = trials;
  double reward_sum = 0.0;
  std::int64_t len_sum = 0;
  for (int i = 0; i < trials; ++i) {
    auto r = env->reset(rng);
    Vector obs = std::move(r.observation);
    ActionMask mask = std::move(r.mask);
    for (int t = 0;; ++t) {
      if (t >= env->max_episode_steps()) throw Error("evaluate: environment ignored its step cap");
      const auto a = agent.act(obs, mask, false);
      auto sr = env->step(a.env);
      reward_sum += sr.reward;
      ++len_sum;
      obs = std::move(sr.observation);
      mask = std::move(sr.mask);
      if (sr.terminal) {
        if (sr.goal) ++rep.goals;
        break;
      }
    }
  }
  rep.mean_reward = reward_sum / trials;
  rep.goal_rate = static_cast<double>(rep.goals) / trials;
  rep.mean_len = static_cast<double>(len_sum) / trials;
  return rep;
}

inline EvalReport evaluate(Agent& agent, const std::string& env_name, int trials, std::uint64_t seed) {
  return evaluate(agent, *make_env(env_name), trials, seed);
}

}  // namespace hybridrl
