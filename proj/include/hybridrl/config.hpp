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

// Flat key=value experiment configs. '#' starts a comment. Keys not given
// take the per-environment defaults below.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hybridrl/distributed.hpp"
#include "hybridrl/error.hpp"
#include "hybridrl/pdqn.hpp"

namespace hybridrl {

struct ExperimentConfig {
  std::string env = "goal";
  std::string agent = "pdqn";  // pdqn | dqn8 | ddpg-relaxed
  PDQNConfig pdqn;
  int workers = 0;  // 0: replay agent; >= 1: asynchronous n-step P-DQN
  int t_max = 5;
  int dqn_directions = 8;
  std::int64_t total_steps = 150000;
  std::int64_t eval_interval = 5000;
  int eval_trials = 100;
  std::size_t smooth_window = 100;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;

  bool async() const { return workers > 0; }

  AsyncConfig async_config() const {
    AsyncConfig a;
    a.workers = workers;
    a.t_max = t_max;
    a.n_max = total_steps;
    a.gamma = pdqn.gamma;
    a.epsilon = pdqn.epsilon;
    a.alpha = pdqn.alpha;
    a.beta = pdqn.beta;
    a.penalty_weight = pdqn.penalty_weight;
    a.optimizer = pdqn.optimizer;
    a.rmsprop = pdqn.rmsprop;
    a.exploration = pdqn.exploration;
    a.actor_hidden = pdqn.actor_hidden;
    a.q_hidden = pdqn.q_hidden;
    a.dueling = pdqn.dueling;
    a.seed = seed;
    return a;
  }

  void validate() const {
    if (env != "goal" && env != "bandit" && env != "masked-bandit") throw ConfigError("unknown env '" + env + "'");
    if (agent != "pdqn" && agent != "dqn8" && agent != "ddpg-relaxed") throw ConfigError("unknown agent '" + agent + "'");
    if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
    if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
    if (eval_trials < 1) throw ConfigError("eval_trials must be >= 1");
    if (smooth_window < 1) throw ConfigError("smooth_window must be >= 1");
    if (workers < 0) throw ConfigError("workers must be >= 0");
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
    if (dqn_directions < 1) throw ConfigError("dqn_directions must be >= 1");
    if (workers > 0 && agent != "pdqn") throw ConfigError("asynchronous training is only available for pdqn");
    if (pdqn.rmsprop.decay < 0.0 || pdqn.rmsprop.decay >= 1.0) throw ConfigError("rmsprop_decay must lie in [0, 1)");
    if (!(pdqn.rmsprop.epsilon > 0.0)) throw ConfigError("rmsprop_epsilon must be > 0");
    pdqn.validate();
  }
};

// Defaults for one environment. Goal: B = 32, replay 10k, epsilon 1 -> 0.1
// over 30k steps, step sizes 0.001 -> 0 over 150k steps, RMSProp, gamma 0.9.
inline ExperimentConfig default_config(const std::string& env) {
  ExperimentConfig c;
  c.env = env;
  c.pdqn.gamma = 0.9;
  c.pdqn.optimizer = Optimizer::kRmsprop;
  if (env == "goal") {
    c.total_steps = 150000;
    c.eval_interval = 5000;
    c.pdqn.epsilon = Schedule::linear(1.0, 0.1, 30000);
  } else if (env == "bandit" || env == "masked-bandit") {
    c.total_steps = 20000;
    c.eval_interval = 1000;
    c.pdqn.epsilon = Schedule::linear(1.0, 0.1, 2000);
  } else {
    throw ConfigError("unknown env '" + env + "'");
  }
  c.pdqn.alpha = Schedule::linear(1e-3, 0.0, c.total_steps);
  c.pdqn.beta = Schedule::linear(1e-3, 0.0, c.total_steps);
  return c;
}

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

[[noreturn]] inline void bad_value(const std::string& key, const Entry& e, const std::string& what) {
  throw ConfigError("line " + std::to_string(e.line) + ": invalid value for '" + key + "': '" + e.value + "' (" +
                    what + ")");
}

inline double to_double(const std::string& key, const Entry& e) {
  double v = 0.0;
  const auto* end = e.value.data() + e.value.size();
  const auto r = std::from_chars(e.value.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) bad_value(key, e, "expected a number");
  return v;
}

inline std::int64_t to_int(const std::string& key, const Entry& e) {
  std::int64_t v = 0;
  const auto* end = e.value.data() + e.value.size();
  const auto r = std::from_chars(e.value.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) bad_value(key, e, "expected an integer");
  return v;
}

inline std::size_t to_size(const std::string& key, const Entry& e) {
  const auto v = to_int(key, e);
  if (v < 0) bad_value(key, e, "must be >= 0");
  return static_cast<std::size_t>(v);
}

inline bool to_bool(const std::string& key, const Entry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  bad_value(key, e, "expected true or false");
}

inline std::vector<int> to_int_list(const std::string& key, const Entry& e) {
  std::vector<int> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = to_int(key, {trim(item), e.line});
    if (v < 1) bad_value(key, e, "layer sizes must be >= 1");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) bad_value(key, e, "expected a comma-separated list");
  return out;
}

}  // namespace config_detail

// Parses config text. Unknown keys, duplicate keys and malformed lines are
// errors that name the line.
inline ExperimentConfig parse_config(const std::string& text) {
  using namespace config_detail;
  std::map<std::string, Entry> kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key=value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
    if (kv.count(key)) throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    kv[key] = {value, line};
  }

  if (kv.count("env")) {
    const auto& e = kv["env"];
    if (e.value != "goal" && e.value != "bandit" && e.value != "masked-bandit")
      bad_value("env", e, "expected goal, bandit or masked-bandit");
  }
  ExperimentConfig c = default_config(kv.count("env") ? kv["env"].value : "goal");
  bool alpha_horizon_set = false, beta_horizon_set = false;
  double beta_multiplier = 1.0;
  for (const auto& [key, e] : kv) {
    auto& p = c.pdqn;
    if (key == "env") {
      c.env = e.value;
    } else if (key == "agent") {
      c.agent = e.value;
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(to_size(key, e));
    } else if (key == "total_steps") {
      c.total_steps = to_int(key, e);
    } else if (key == "eval_interval") {
      c.eval_interval = to_int(key, e);
    } else if (key == "eval_trials") {
      c.eval_trials = static_cast<int>(to_int(key, e));
    } else if (key == "smooth_window") {
      c.smooth_window = to_size(key, e);
    } else if (key == "workers") {
      c.workers = static_cast<int>(to_int(key, e));
    } else if (key == "t_max") {
      c.t_max = static_cast<int>(to_int(key, e));
    } else if (key == "dqn_directions") {
      c.dqn_directions = static_cast<int>(to_int(key, e));
    } else if (key == "gamma") {
      p.gamma = to_double(key, e);
    } else if (key == "alpha_start") {
      p.alpha.start = to_double(key, e);
    } else if (key == "alpha_end") {
      p.alpha.end = to_double(key, e);
    } else if (key == "alpha_horizon") {
      p.alpha.horizon = to_int(key, e);
      alpha_horizon_set = true;
    } else if (key == "beta_start") {
      p.beta.start = to_double(key, e);
    } else if (key == "beta_end") {
      p.beta.end = to_double(key, e);
    } else if (key == "beta_horizon") {
      p.beta.horizon = to_int(key, e);
      beta_horizon_set = true;
    } else if (key == "beta_multiplier") {
      beta_multiplier = to_double(key, e);
      if (!(beta_multiplier > 0.0)) bad_value(key, e, "must be > 0");
    } else if (key == "epsilon_start") {
      p.epsilon.start = to_double(key, e);
    } else if (key == "epsilon_end") {
      p.epsilon.end = to_double(key, e);
    } else if (key == "epsilon_horizon") {
      p.epsilon.horizon = to_int(key, e);
    } else if (key == "batch_size") {
      p.batch_size = to_size(key, e);
    } else if (key == "replay_capacity") {
      p.replay_capacity = to_size(key, e);
    } else if (key == "warmup") {
      p.warmup = to_size(key, e);
    } else if (key == "penalty_weight") {
      p.penalty_weight = to_double(key, e);
    } else if (key == "dueling") {
      p.dueling = to_bool(key, e);
    } else if (key == "target_network") {
      p.target_network = to_bool(key, e);
    } else if (key == "target_sync_interval") {
      p.target_sync_interval = to_int(key, e);
    } else if (key == "simultaneous_update") {
      p.simultaneous_update = to_bool(key, e);
    } else if (key == "exclude_masked_heads") {
      p.exclude_masked_heads = to_bool(key, e);
    } else if (key == "optimizer") {
      if (e.value == "sgd")
        p.optimizer = Optimizer::kSgd;
      else if (e.value == "rmsprop")
        p.optimizer = Optimizer::kRmsprop;
      else
        bad_value(key, e, "expected sgd or rmsprop");
    } else if (key == "rmsprop_decay") {
      p.rmsprop.decay = to_double(key, e);
    } else if (key == "rmsprop_epsilon") {
      p.rmsprop.epsilon = to_double(key, e);
    } else if (key == "exploration") {
      if (e.value == "uniform")
        p.exploration.kind = ExplorationDist::Kind::kUniformHybrid;
      else if (e.value == "greedy-noise")
        p.exploration.kind = ExplorationDist::Kind::kGreedyPlusNoise;
      else
        bad_value(key, e, "expected uniform or greedy-noise");
    } else if (key == "exploration_noise") {
      p.exploration.noise_scale = to_double(key, e);
    } else if (key == "actor_hidden") {
      p.actor_hidden = to_int_list(key, e);
    } else if (key == "q_hidden") {
      p.q_hidden = to_int_list(key, e);
    } else {
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + key + "'");
    }
  }
  // Step sizes decay to zero over the run unless a horizon is given.
  if (!alpha_horizon_set) c.pdqn.alpha.horizon = std::max<std::int64_t>(c.total_steps, 1);
  if (!beta_horizon_set) c.pdqn.beta.horizon = std::max<std::int64_t>(c.total_steps, 1);
  // Scales the actor step size relative to the critic's (two-timescale runs).
  c.pdqn.beta = c.pdqn.beta.scaled(beta_multiplier);
  c.pdqn.seed = c.seed;
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace hybridrl
