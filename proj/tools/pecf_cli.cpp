// Copyright 2026 The pecf authors
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
//
// Experiment driver: dataset preparation, training (wmf | pecf | l2boost |
// randem), evaluation, hyperparameter sweeps, and synthetic data generation.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pecf/pecf.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string data_path, data_format, method, out_dir;
  std::uint64_t seed = 0;
  int d = 0, rounds = -1, threads = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "key = value config file");
    cmd->add_option("--set", overrides, "override, key=value (repeatable)");
    cmd->add_option("--data", data_path, "rating file path");
    cmd->add_option("--format", data_format,
                    "movielens_tabular | triplet_csv | prepared");
    cmd->add_option("--method", method, "wmf | pecf | l2boost | randem");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "root random seed");
    cmd->add_option("--d", d, "embedding dimension");
    cmd->add_option("--rounds", rounds, "training rounds");
    cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
  }

  pecf::RunConfig resolve(const CLI::App* cmd) const {
    pecf::RunConfig cfg;
    if (!config_path.empty()) cfg = pecf::parse_config_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw pecf::ConfigError("--set expects key=value, got '" + kv + "'");
      pecf::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!data_path.empty()) cfg.data_path = data_path;
    if (!data_format.empty()) cfg.data_format = data_format;
    if (!method.empty()) cfg.method = method;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (cmd->count("--seed")) cfg.seed = seed;
    if (cmd->count("--d")) cfg.d = d;
    if (cmd->count("--rounds")) cfg.rounds = rounds;
    if (cmd->count("--threads")) cfg.threads = threads;
    return cfg;
  }
};

void print_final(const pecf::RunResult& result) {
  if (result.rounds.empty()) return;
  const auto& last = result.rounds.back();
  std::cout << "final round " << last.round;
  for (const auto& [m, value] : last.recall_at)
    std::cout << "  recall@" << m << " " << value;
  std::cout << "  wmse " << last.wmse << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collaborative filtering ensembles over weighted matrix "
               "factorization"};
  app.require_subcommand(1);

  CommonArgs prepare_args, train_args, eval_args, sweep_args;

  auto* prepare = app.add_subcommand(
      "prepare", "build a dataset and write its manifest + container");
  prepare_args.attach(prepare);

  auto* train =
      app.add_subcommand("train", "train a model and write its artifacts");
  train_args.attach(train);

  auto* evaluate =
      app.add_subcommand("evaluate", "evaluate a saved model on the test split");
  eval_args.attach(evaluate);
  std::string model_path;
  evaluate->add_option("--model", model_path, "model container to load")
      ->required();

  auto* sweep_cmd =
      app.add_subcommand("sweep", "run a grid over one or two parameters");
  sweep_args.attach(sweep_cmd);
  std::string sweep_param, sweep_param2;
  std::vector<std::string> sweep_values, sweep_values2;
  sweep_cmd->add_option("--param", sweep_param,
                        "d | nu | sigma | alpha | rounds | K")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "values for --param")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--param2", sweep_param2, "optional second parameter");
  sweep_cmd->add_option("--values2", sweep_values2, "values for --param2")
      ->delimiter(',');

  auto* synth = app.add_subcommand(
      "synth", "generate block-structured synthetic ratings");
  pecf::SyntheticConfig synth_cfg;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output triplet csv")->required();
  synth->add_option("--users", synth_cfg.num_users, "user count");
  synth->add_option("--items", synth_cfg.num_items, "item count");
  synth->add_option("--blocks", synth_cfg.blocks, "diagonal block count");
  synth->add_option("--rank", synth_cfg.rank, "true per-block rank");
  synth->add_option("--noise", synth_cfg.noise, "score noise std");
  synth->add_option("--quantile", synth_cfg.positive_quantile,
                    "per-block positive quantile");
  synth->add_option("--seed", synth_cfg.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) {
      const auto cfg = prepare_args.resolve(prepare);
      pecf::prepare_experiment(cfg);
      std::cout << "wrote " << cfg.out_dir << "/manifest.txt and "
                << cfg.out_dir << "/dataset.tsv\n";
    } else if (train->parsed()) {
      const auto cfg = train_args.resolve(train);
      const auto result = pecf::run_experiment(cfg);
      print_final(result);
      std::cout << "artifacts in " << cfg.out_dir << "\n";
    } else if (evaluate->parsed()) {
      const auto cfg = eval_args.resolve(evaluate);
      const std::string report = pecf::evaluate_experiment(cfg, model_path);
      std::cout << report;
      if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        pecf::write_text_file(cfg.out_dir + "/evaluation.txt", report);
      }
    } else if (sweep_cmd->parsed()) {
      const auto cfg = sweep_args.resolve(sweep_cmd);
      const auto rows =
          pecf::sweep(cfg, sweep_param, sweep_values, sweep_param2,
                      sweep_values2);
      std::cout << "wrote " << cfg.out_dir << "/sweep.csv (" << rows.size()
                << " rows)\n";
    } else if (synth->parsed()) {
      const auto records = pecf::generate_synthetic(synth_cfg);
      pecf::write_triplet_csv(synth_out, records);
      std::cout << "wrote " << records.size() << " positives to " << synth_out
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
