// SPDX-License-Identifier: Apache-2.0
// Command-line front end: train, eval, verify, export-curves.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pompc/trainer.hpp"
#include "verify_suite.hpp"

namespace {

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets, const std::string& resume,
              bool print_config) {
  using namespace pompc;
  if (!resume.empty()) {
    Agent agent = Agent::from_checkpoint(Checkpoint::load(resume), sets);
    if (print_config) {
      std::cout << dump_config(agent.cfg);
      return 0;
    }
    agent.metrics.open(agent.cfg.metrics_path, false);
    agent.run();
    std::printf("resumed run finished: step %ld, updates %ld, episodes %ld\n", agent.step, agent.updates,
                agent.episode);
    return 0;
  }
  TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_config(config_path);
  apply_env_overrides(cfg);
  for (const auto& s : sets) apply_override(cfg, s);
  cfg.validate();
  if (print_config) {
    std::cout << dump_config(cfg);
    return 0;
  }
  Agent agent(cfg);
  agent.metrics.open(cfg.metrics_path, true);
  agent.run();
  const auto& r = agent.episode_returns;
  double last = 0.0;
  const std::size_t n = std::min<std::size_t>(10, r.size());
  for (std::size_t i = r.size() - n; i < r.size(); ++i) last += r[i] / static_cast<double>(n);
  std::printf("finished: step %ld, updates %ld, episodes %ld, mean return of last %zu episodes %.3f\n", agent.step,
              agent.updates, agent.episode, n, last);
  return 0;
}

int cmd_eval(const std::string& checkpoint, int episodes, std::uint64_t seed, bool random) {
  using namespace pompc;
  Agent agent = Agent::from_checkpoint(Checkpoint::load(checkpoint));
  const EvalResult r = random ? evaluate_random(*agent.env, episodes, seed) : evaluate(agent, episodes, seed);
  if (r.returns.size() == 1) std::printf("return %.6f\n", r.mean);
  else std::printf("return %.6f +- %.6f (95%% CI, %zu episodes)\n", r.mean, r.ci95, r.returns.size());
  return 0;
}

int cmd_export(const std::string& metrics, const std::string& out) {
  using namespace pompc;
  const CsvTable t = read_csv(metrics);
  const int c_type = t.column("row_type"), c_step = t.column("step"), c_ep = t.column("episode"),
            c_ret = t.column("return"), c_len = t.column("length");
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write '" + out + "'");
  os << "step,episode,return,length,return_mean10\n";
  std::vector<double> window;
  for (const auto& row : t.rows) {
    if (row[c_type] != "episode") continue;
    const double ret = std::stod(row[c_ret]);
    window.push_back(ret);
    if (window.size() > 10) window.erase(window.begin());
    double m = 0.0;
    for (double v : window) m += v / static_cast<double>(window.size());
    os << row[c_step] << "," << row[c_ep] << "," << row[c_ret] << "," << row[c_len] << "," << format_double(m)
       << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pompc: planner-regularized model-based RL"};
  app.require_subcommand(1);

  std::string config_path, resume;
  std::vector<std::string> sets;
  bool print_config = false;
  auto* train = app.add_subcommand("train", "train an agent");
  train->add_option("--config", config_path, "config file (key = value lines)")->check(CLI::ExistingFile);
  train->add_option("--set", sets, "override, key=value (repeatable)");
  train->add_option("--resume", resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  train->add_flag("--print-config", print_config, "print the effective config and exit");

  std::string checkpoint;
  int episodes = 10;
  std::uint64_t eval_seed = 12345;
  bool random = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with the planner");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "number of episodes")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_flag("--random", random, "uniform random actions instead of the planner");

  bool with_learning = false;
  auto* verify = app.add_subcommand("verify", "run the acceptance checks and print a pass/fail table");
  verify->add_flag("--with-learning", with_learning, "also run the end-to-end learning check (slow)");

  std::string metrics, out;
  auto* exp = app.add_subcommand("export-curves", "episode-return curve from a metrics file");
  exp->add_option("--metrics", metrics, "metrics CSV")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(config_path, sets, resume, print_config);
    if (*eval) return cmd_eval(checkpoint, episodes, eval_seed, random);
    if (*verify) return pompc::verify::run_all(with_learning, std::cout) ? 0 : 1;
    if (*exp) return cmd_export(metrics, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
