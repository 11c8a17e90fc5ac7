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

// Command-line front end: train, eval, gradcheck, compare.

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hybridrl/checkpoint.hpp"
#include "hybridrl/config.hpp"
#include "hybridrl/evaluate.hpp"
#include "hybridrl/gradcheck.hpp"
#include "hybridrl/logging.hpp"
#include "hybridrl/training.hpp"

namespace fs = std::filesystem;
using namespace hybridrl;

namespace {

int cmd_train(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out, bool resume,
              std::optional<int> workers, std::optional<int> tmax) {
  ExperimentConfig cfg = load_config(config);
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (tmax) cfg.t_max = *tmax;
  cfg.out_dir = out;
  const auto res = run_training(cfg, resume);
  if (!res.evals.empty()) {
    const auto& last = res.evals.back();
    std::printf("%s\n", kEvalHeader);
    std::printf("%lld,%d,%s,%s,%s\n", static_cast<long long>(last.step), last.trials, fmt9(last.mean_reward).c_str(),
                fmt9(last.goal_rate).c_str(), fmt9(last.mean_len).c_str());
  }
  return 0;
}

int cmd_eval(const std::string& path, const std::string& env_name, int trials, std::uint64_t seed) {
  auto env = make_env(env_name);
  const auto ckpt = load_checkpoint(path, env->space());
  auto agent = agent_from_checkpoint(ckpt, *env);
  auto rep = evaluate(*agent, *env, trials, seed);
  rep.step = ckpt.step;
  std::printf("%s\n", kEvalHeader);
  std::printf("%lld,%d,%s,%s,%s\n", static_cast<long long>(rep.step), rep.trials, fmt9(rep.mean_reward).c_str(),
              fmt9(rep.goal_rate).c_str(), fmt9(rep.mean_len).c_str());
  return 0;
}

int cmd_gradcheck(int seeds) {
  const auto reps = run_gradcheck_suite(seeds);
  std::map<std::string, std::pair<double, int>> worst;  // loss -> (max error, failures)
  std::size_t excluded = 0, total = 0;
  for (const auto& r : reps) {
    const std::string loss = r.name.substr(0, r.name.find(' '));
    auto& w = worst[loss];
    w.first = std::max(w.first, r.max_rel_error);
    if (!r.passed) {
      ++w.second;
      std::printf("FAIL %s max_rel_error=%.3g coordinate=%zu\n", r.name.c_str(), r.max_rel_error, r.worst);
    }
    excluded += r.excluded;
    total += r.coordinates;
  }
  bool ok = true;
  for (const auto& [loss, w] : worst) {
    std::printf("%-16s max_rel_error=%.3g failures=%d\n", loss.c_str(), w.first, w.second);
    ok = ok && w.second == 0;
  }
  std::printf("coordinates=%zu kink_excluded=%zu\n", total, excluded);
  std::printf("%s\n", ok ? "gradcheck passed" : "gradcheck FAILED");
  return ok ? 0 : 1;
}

int cmd_compare(const std::vector<std::string>& configs, const std::string& out, int seeds) {
  struct Row {
    std::string agent;
    int seed;
    EvalReport rep;
  };
  std::vector<Row> rows;
  fs::create_directories(out);
  for (const auto& path : configs) {
    const ExperimentConfig base = load_config(path);
    for (int s = 1; s <= seeds; ++s) {
      ExperimentConfig cfg = base;
      cfg.seed = static_cast<std::uint64_t>(s);
      cfg.out_dir = fs::path(out) / cfg.agent / ("seed-" + std::to_string(s));
      const auto res = run_training(cfg);
      rows.push_back({cfg.agent, s, res.evals.back()});
    }
  }
  std::ofstream summary(fs::path(out) / "summary.csv");
  summary << "agent,seed," << kEvalHeader << '\n';
  for (const auto& r : rows) {
    summary << r.agent << ',' << r.seed << ',';
    write_eval_row(summary, r.rep);
  }
  std::map<std::string, std::vector<double>> by_agent;
  for (const auto& r : rows) by_agent[r.agent].push_back(r.rep.mean_reward);
  for (const auto& [agent, v] : by_agent) {
    double m = 0.0, var = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) var += (x - m) * (x - m);
    var /= v.size() > 1 ? static_cast<double>(v.size() - 1) : 1.0;
    std::printf("%-6s seeds=%zu mean_reward=%.4f variance=%.4g\n", agent.c_str(), v.size(), m, var);
  }
  if (by_agent.count("pdqn") && by_agent.count("dqn8") && by_agent["pdqn"].size() == by_agent["dqn8"].size()) {
    int wins = 0;
    for (std::size_t i = 0; i < by_agent["pdqn"].size(); ++i) wins += by_agent["pdqn"][i] > by_agent["dqn8"][i];
    std::printf("pdqn beats dqn8 on %d of %zu paired seeds\n", wins, by_agent["pdqn"].size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Parametrized-action Q-learning: training, evaluation and checks"};
  app.require_subcommand(1);

  std::string config, out, checkpoint, env_name;
  std::uint64_t seed_value = 0;
  bool resume = false;
  int workers = 0, tmax = 0, trials = 100, seeds = 20, compare_seeds = 5;
  std::vector<std::string> configs;

  auto* train = app.add_subcommand("train", "train one agent from a config file");
  train->add_option("--config", config, "key=value config file")->required()->check(CLI::ExistingFile);
  auto* train_seed = train->add_option("--seed", seed_value, "run seed (overrides the config)");
  train->add_option("--out", out, "output directory")->required();
  train->add_flag("--resume", resume, "continue from <out>/checkpoint.bin");
  auto* train_workers = train->add_option("--workers", workers, "asynchronous workers (0 = replay agent)")
                            ->check(CLI::NonNegativeNumber);
  auto* train_tmax = train->add_option("--tmax", tmax, "max segment length per worker")->check(CLI::PositiveNumber);

  auto* ev = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--env", env_name, "goal | bandit | masked-bandit")->required();
  ev->add_option("--trials", trials, "episodes")->check(CLI::PositiveNumber);
  ev->add_option("--seed", seed_value, "evaluation seed");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every loss gradient");
  gc->add_option("--seeds", seeds, "random seeds")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "train each config over several seeds and summarize");
  cmp->add_option("--configs", configs, "config files")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", out, "output directory")->required();
  cmp->add_option("--seeds", compare_seeds, "seeds per config (1..N)")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      std::optional<std::uint64_t> s;
      std::optional<int> w, t;
      if (*train_seed) s = seed_value;
      if (*train_workers) w = workers;
      if (*train_tmax) t = tmax;
      return cmd_train(config, s, out, resume, w, t);
    }
    if (*ev) return cmd_eval(checkpoint, env_name, trials, seed_value);
    if (*gc) return cmd_gradcheck(seeds);
    if (*cmp) return cmd_compare(configs, out, compare_seeds);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
