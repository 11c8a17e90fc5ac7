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

// Training orchestration. A run directory holds:
//   train.csv      one row per environment step
//   eval.csv       one row at step 0 and every eval_interval steps
//   checkpoint.bin latest parameters, rewritten with every eval row
//   episodes.csv   per-episode totals with a trailing running average
//   worker-<i>.csv per-worker step logs (asynchronous runs only)

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "hybridrl/checkpoint.hpp"
#include "hybridrl/config.hpp"
#include "hybridrl/ddpg.hpp"
#include "hybridrl/distributed.hpp"
#include "hybridrl/dqn.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/evaluate.hpp"
#include "hybridrl/pdqn.hpp"
#include "hybridrl/smooth.hpp"

namespace hybridrl {

inline constexpr const char* kTrainHeader = "step,episode,ep_len,ep_reward,loss_q,loss_theta,epsilon,lr_omega,lr_theta";
inline constexpr const char* kEvalHeader = "step,trials,mean_reward,goal_rate,mean_len";

inline std::string fmt9(double v) { return fmt::format("{:.9g}", v); }

// Evaluation start states depend only on the run seed, so agents trained
// with the same seed are scored on the same episodes.
inline std::uint64_t eval_seed(std::uint64_t seed) { return seed * 1000003ULL + 424242ULL; }
inline std::uint64_t env_seed(std::uint64_t seed, std::int64_t start_step) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(start_step) * 0xBF58476D1CE4E5B9ULL + 7ULL;
}

inline std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg, const Environment& env) {
  PDQNConfig p = cfg.pdqn;
  p.seed = cfg.seed;
  if (cfg.agent == "pdqn") return std::make_unique<PDQNAgent>(env.space(), env.observation_dim(), p);
  if (cfg.agent == "dqn8") return std::make_unique<DQNAgent>(env.space(), env.observation_dim(), p, cfg.dqn_directions);
  if (cfg.agent == "ddpg-relaxed") return std::make_unique<DDPGAgent>(env.space(), env.observation_dim(), p);
  throw ConfigError("unknown agent '" + cfg.agent + "'");
}

inline std::string checkpoint_agent_name(const Checkpoint& c) {
  if (has_tensor(c.tensors, "pdqn.omega.0.weight")) return "pdqn";
  if (has_tensor(c.tensors, "dqn8.omega.0.weight")) return "dqn8";
  if (has_tensor(c.tensors, "ddpg.critic.0.weight")) return "ddpg-relaxed";
  throw CheckpointError("checkpoint holds no known agent");
}

// Rebuilds an agent whose layer sizes are read off the checkpoint tensors.
inline std::unique_ptr<Agent> agent_from_checkpoint(const Checkpoint& c, const Environment& env) {
  if (c.digest != space_digest(env.space())) throw CheckpointError("checkpoint from different action space");
  const std::string name = checkpoint_agent_name(c);
  auto hidden = [&](const std::string& prefix) {
    const auto sizes = tensor_layer_sizes(c.tensors, prefix);
    return std::vector<int>(sizes.begin() + 1, sizes.end() - 1);
  };
  auto flag = [&](const std::string& tensor) {
    const auto& t = find_tensor(c.tensors, tensor);
    return t.values.size() == 1 && t.values[0] != 0.0;
  };
  PDQNConfig p;
  std::unique_ptr<Agent> agent;
  if (name == "pdqn") {
    p.q_hidden = hidden("pdqn.omega");
    p.actor_hidden = hidden("pdqn.theta");
    p.dueling = flag("pdqn.dueling");
    agent = std::make_unique<PDQNAgent>(env.space(), env.observation_dim(), p);
  } else if (name == "dqn8") {
    p.q_hidden = hidden("dqn8.omega");
    p.dueling = flag("dqn8.dueling");
    const auto sizes = tensor_layer_sizes(c.tensors, "dqn8.omega");
    const int entries = sizes.back() - (p.dueling ? 1 : 0);
    int direction_heads = 0, free_heads = 0;
    for (const auto& b : env.space().layout.blocks) {
      if (b.kind == BlockKind::kDirectionPair) ++direction_heads;
      if (b.dim == 0) ++free_heads;
    }
    if (direction_heads == 0 || (entries - free_heads) % direction_heads != 0 || entries <= free_heads)
      throw CheckpointError("dqn checkpoint does not fit this environment");
    agent = std::make_unique<DQNAgent>(env.space(), env.observation_dim(), p, (entries - free_heads) / direction_heads);
  } else {
    p.q_hidden = hidden("ddpg.critic");
    p.actor_hidden = hidden("ddpg.actor");
    agent = std::make_unique<DDPGAgent>(env.space(), env.observation_dim(), p);
  }
  agent->import_tensors(c.tensors);
  agent->set_steps(c.step);
  return agent;
}

inline Checkpoint make_checkpoint(const Agent& agent, const ActionSpaceSpec& space, std::int64_t step,
                                  std::int64_t episode) {
  Checkpoint c;
  c.digest = space_digest(space);
  c.tensors = agent.export_tensors();
  c.step = step;
  c.episode = episode;
  return c;
}

struct TrainRow {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  int ep_len = 0;
  double ep_reward = 0.0;
  double loss_q = 0.0;
  double loss_theta = 0.0;
  double epsilon = 0.0;
  double lr_omega = 0.0;
  double lr_theta = 0.0;
};

inline void write_train_row(std::ostream& os, const TrainRow& r) {
  os << r.step << ',' << r.episode << ',' << r.ep_len << ',' << fmt9(r.ep_reward) << ',' << fmt9(r.loss_q) << ','
     << fmt9(r.loss_theta) << ',' << fmt9(r.epsilon) << ',' << fmt9(r.lr_omega) << ',' << fmt9(r.lr_theta) << '\n';
}

inline void write_eval_row(std::ostream& os, const EvalReport& r) {
  os << r.step << ',' << r.trials << ',' << fmt9(r.mean_reward) << ',' << fmt9(r.goal_rate) << ','
     << fmt9(r.mean_len) << '\n';
}

// Keeps the header and the rows whose first column is <= max_step.
inline void truncate_csv(const std::filesystem::path& path, std::int64_t max_step, const std::string& header) {
  std::vector<std::string> keep{header};
  if (std::ifstream in(path); in) {
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (first) {
        first = false;
        continue;
      }
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= max_step) keep.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

// Per-episode totals recovered from train.csv, plus their running average.
inline void write_episode_summary(const std::filesystem::path& dir, std::size_t window) {
  struct Ep {
    std::int64_t end_step = 0;
    int len = 0;
    double reward = 0.0;
  };
  std::map<std::int64_t, Ep> eps;
  std::ifstream in(dir / "train.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f[4];
    for (auto& x : f) std::getline(ss, x, ',');
    const std::int64_t step = std::stoll(f[0]);
    const std::int64_t episode = std::stoll(f[1]);
    const int len = std::stoi(f[2]);
    auto& e = eps[episode];
    if (len >= e.len) e = {step, len, std::stod(f[3])};
  }
  std::vector<double> rewards;
  for (const auto& [id, e] : eps) rewards.push_back(e.reward);
  const auto smoothed = smooth(rewards, window);
  std::ofstream out(dir / "episodes.csv", std::ios::trunc);
  out << "episode,end_step,ep_len,ep_reward,smoothed_reward\n";
  std::size_t i = 0;
  for (const auto& [id, e] : eps) {
    out << id << ',' << e.end_step << ',' << e.len << ',' << fmt9(e.reward) << ',' << fmt9(smoothed[i]) << '\n';
    ++i;
  }
}

struct TrainOutcome {
  std::vector<EvalReport> evals;  // reports produced by this invocation
  std::int64_t steps = 0;         // global step count at exit
};

namespace training_detail {

inline TrainOutcome run_replay(const ExperimentConfig& cfg, bool resume) {
  const auto& dir = cfg.out_dir;
  auto env = make_env(cfg.env);
  auto agent = make_agent(cfg, *env);
  const auto ckpt_path = dir / "checkpoint.bin";
  TrainOutcome outcome;
  std::int64_t step = 0, next_episode = 0;

  auto eval_and_save = [&](std::ofstream& eval_csv) {
    auto rep = evaluate(*agent, *env, cfg.eval_trials, eval_seed(cfg.seed));
    rep.step = step;
    write_eval_row(eval_csv, rep);
    eval_csv.flush();
    save_checkpoint(ckpt_path, make_checkpoint(*agent, env->space(), step, next_episode));
    spdlog::info("{} {} step {}: mean reward {:.4f}, goal rate {:.2f}, mean length {:.1f}", cfg.agent, cfg.env, step,
                 rep.mean_reward, rep.goal_rate, rep.mean_len);
    outcome.evals.push_back(rep);
  };

  std::ofstream train_csv, eval_csv;
  if (resume) {
    const auto c = load_checkpoint(ckpt_path, env->space());
    if (checkpoint_agent_name(c) != cfg.agent)
      throw CheckpointError("checkpoint holds a " + checkpoint_agent_name(c) + " agent, config asks for " + cfg.agent);
    agent->import_tensors(c.tensors);
    agent->set_steps(c.step);
    step = c.step;
    next_episode = c.episode;
    truncate_csv(dir / "train.csv", step, kTrainHeader);
    truncate_csv(dir / "eval.csv", step, kEvalHeader);
    train_csv.open(dir / "train.csv", std::ios::app);
    eval_csv.open(dir / "eval.csv", std::ios::app);
    spdlog::info("resuming from step {}", step);
  } else {
    train_csv.open(dir / "train.csv", std::ios::trunc);
    eval_csv.open(dir / "eval.csv", std::ios::trunc);
    train_csv << kTrainHeader << '\n';
    eval_csv << kEvalHeader << '\n';
    eval_and_save(eval_csv);
  }
  if (!train_csv || !eval_csv) throw Error("cannot write logs in " + dir.string());

  Rng env_rng(env_seed(cfg.seed, step));
  bool need_reset = true;
  Vector obs;
  ActionMask mask;
  TrainRow row;
  while (step < cfg.total_steps) {
    if (need_reset) {
      auto r = env->reset(env_rng);
      obs = std::move(r.observation);
      mask = std::move(r.mask);
      row.episode = next_episode++;
      row.ep_len = 0;
      row.ep_reward = 0.0;
      need_reset = false;
    }
    row.epsilon = agent->epsilon();
    const auto a = agent->act(obs, mask, true);
    auto sr = env->step(a.env);
    const auto st = agent->observe(obs, a, sr.reward, sr.observation, sr.terminal, sr.mask);
    ++step;
    row.step = step;
    ++row.ep_len;
    row.ep_reward += sr.reward;
    row.loss_q = st.loss_q;
    row.loss_theta = st.loss_theta;
    row.lr_omega = agent->lr_omega();
    row.lr_theta = agent->lr_theta();
    write_train_row(train_csv, row);
    obs = std::move(sr.observation);
    mask = std::move(sr.mask);
    need_reset = sr.terminal;
    if (step % cfg.eval_interval == 0) {
      train_csv.flush();
      eval_and_save(eval_csv);
    }
  }
  outcome.steps = step;
  return outcome;
}

inline TrainOutcome run_async_training(const ExperimentConfig& cfg, bool resume) {
  const auto& dir = cfg.out_dir;
  auto env = make_env(cfg.env);
  PDQNConfig p = cfg.pdqn;
  p.seed = cfg.seed;
  PDQNAgent shell(env->space(), env->observation_dim(), p);  // evaluation and checkpoint adapter
  const auto ckpt_path = dir / "checkpoint.bin";
  TrainOutcome outcome;
  std::int64_t start = 0, start_episode = 0;
  std::int64_t episodes_now = 0;

  std::ofstream train_csv, eval_csv;
  auto eval_and_save = [&](std::int64_t step) {
    auto rep = evaluate(shell, *env, cfg.eval_trials, eval_seed(cfg.seed));
    rep.step = step;
    write_eval_row(eval_csv, rep);
    eval_csv.flush();
    save_checkpoint(ckpt_path, make_checkpoint(shell, env->space(), step, episodes_now));
    spdlog::info("async pdqn {} step {}: mean reward {:.4f}, goal rate {:.2f}", cfg.env, step, rep.mean_reward,
                 rep.goal_rate);
    outcome.evals.push_back(rep);
  };

  AsyncOptions opts;
  opts.make_env = [&] { return make_env(cfg.env); };
  opts.log_dir = dir;
  if (resume) {
    const auto c = load_checkpoint(ckpt_path, env->space());
    if (checkpoint_agent_name(c) != "pdqn") throw CheckpointError("asynchronous runs resume only pdqn checkpoints");
    shell.import_tensors(c.tensors);
    start = c.step;
    start_episode = c.episode;
    truncate_csv(dir / "train.csv", start, kTrainHeader);
    truncate_csv(dir / "eval.csv", start, kEvalHeader);
    train_csv.open(dir / "train.csv", std::ios::app);
    eval_csv.open(dir / "eval.csv", std::ios::app);
  } else {
    train_csv.open(dir / "train.csv", std::ios::trunc);
    eval_csv.open(dir / "eval.csv", std::ios::trunc);
    train_csv << kTrainHeader << '\n';
    eval_csv << kEvalHeader << '\n';
    eval_and_save(0);
  }
  const QNetwork q0 = shell.q();
  const ParamActor a0 = shell.actor();
  opts.initial_q = &q0;
  opts.initial_actor = &a0;
  opts.initial_step = start;
  opts.initial_episode = start_episode;
  episodes_now = start_episode;
  opts.progress_interval = cfg.eval_interval;
  opts.on_progress = [&](std::int64_t step, std::int64_t episodes, const QNetwork& q, const ParamActor& a) {
    episodes_now = episodes;
    shell.q().params = q.params;
    shell.actor().params = a.params;
    eval_and_save(step);
  };
  auto acfg = cfg.async_config();
  const auto res = run_async(acfg, opts);
  for (const auto& r : res.log)
    write_train_row(train_csv, {r.step, r.episode, r.ep_len, r.ep_reward, r.loss_q, r.loss_theta, r.epsilon,
                                r.lr_omega, r.lr_theta});
  shell.q().params = res.q.params;
  shell.actor().params = res.actor.params;
  episodes_now = res.episodes;
  if (res.n_step % cfg.eval_interval != 0 && res.n_step > start)
    save_checkpoint(ckpt_path, make_checkpoint(shell, env->space(), res.n_step, episodes_now));
  outcome.steps = res.n_step;
  return outcome;
}

}  // namespace training_detail

// Trains the configured agent into cfg.out_dir. With `resume`, parameters
// and the step counter come from out_dir/checkpoint.bin and log rows past
// that step are dropped. Optimizer statistics and the replay memory are not
// checkpointed and start empty on resume.
inline TrainOutcome run_training(const ExperimentConfig& cfg, bool resume = false) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw ConfigError("no output directory");
  std::filesystem::create_directories(cfg.out_dir);
  TrainOutcome out = cfg.async() ? training_detail::run_async_training(cfg, resume)
                                 : training_detail::run_replay(cfg, resume);
  write_episode_summary(cfg.out_dir, cfg.smooth_window);
  return out;
}

}  // namespace hybridrl
