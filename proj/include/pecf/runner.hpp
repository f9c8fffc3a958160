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
#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pecf/boosting.hpp"
#include "pecf/common.hpp"
#include "pecf/data.hpp"
#include "pecf/ensemble.hpp"
#include "pecf/eval.hpp"
#include "pecf/io.hpp"
#include "pecf/synthetic.hpp"
#include "pecf/wmf.hpp"

namespace pecf {

// Everything one experiment needs; fields map 1:1 onto config-file keys.
// All randomness derives from `seed` through fixed per-stage streams.
struct RunConfig {
  std::string data_path;
  std::string data_format = "triplet_csv";  // movielens_tabular|triplet_csv|prepared
  double binarize_threshold = 5.0;
  double c_pos = 1.0;
  double c_zero = 0.01;
  double zero_rate = -1.0;       // explicit sample rate; <= 0 derives from multiple
  double zero_multiple = 5.0;    // zeros ~ multiple x positives
  std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 1;

  std::string method = "pecf";  // wmf|pecf|l2boost|randem
  int d = 50;
  double lambda_u = 0.1;
  double lambda_v = 0.1;
  double sigma0 = 0.0;   // both sigmas > 0 override the lambdas with
  double sigma_r = 0.0;  // sigma_r^2 / sigma0^2
  int sweeps = 15;
  double init_scale = -1.0;

  double nu = 10.0;
  double sigma = 1.0;
  int rounds = 15;
  double shrinkage = 0.5;
  int num_components = 4;  // randem K
  int em_iters = 10;
  std::string alpha_strategy = "dynamic";  // dynamic|fixed
  double alpha = 0.5;
  std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

  std::vector<int> cutoffs{50, 100, 200};
  bool exclude_seen = true;
  int threads = 0;
  std::string out_dir = "out";

  void validate() const {
    if (data_path.empty()) throw ConfigError("data.path is required");
    if (data_format != "movielens_tabular" && data_format != "triplet_csv" &&
        data_format != "prepared")
      throw ConfigError("data.format must be movielens_tabular, triplet_csv "
                        "or prepared");
    if (method != "wmf" && method != "pecf" && method != "l2boost" &&
        method != "randem")
      throw ConfigError("method must be wmf, pecf, l2boost or randem");
    if (alpha_strategy != "dynamic" && alpha_strategy != "fixed")
      throw ConfigError("alpha.strategy must be dynamic or fixed");
    if (cutoffs.empty()) throw ConfigError("eval.cutoffs must be non-empty");
    for (int m : cutoffs)
      if (m < 1) throw ConfigError("eval.cutoffs must be >= 1");
    if (rounds < 0) throw ConfigError("rounds must be >= 0");
    if (num_components < 1) throw ConfigError("randem.components must be >= 1");
    if (em_iters < 0) throw ConfigError("randem.iters must be >= 0");
    wmf_config().validate();
  }

  WmfConfig wmf_config() const {
    WmfConfig cfg;
    cfg.d = d;
    cfg.lambda_u = lambda_u;
    cfg.lambda_v = lambda_v;
    if (sigma0 > 0.0 && sigma_r > 0.0) {
      PriorConfig prior{sigma0, sigma_r};
      cfg = prior.apply(cfg);
    }
    cfg.sweeps = sweeps;
    cfg.init_scale = init_scale;
    cfg.seed = derive_seed(seed, seed_stream::init);
    cfg.num_threads = threads;
    return cfg;
  }

  PecfConfig pecf_config() const {
    PecfConfig cfg;
    cfg.nu = nu;
    cfg.sigma = sigma;
    cfg.max_rounds = rounds;
    cfg.alpha_strategy = alpha_strategy == "fixed"
                             ? PecfConfig::AlphaStrategy::fixed
                             : PecfConfig::AlphaStrategy::dynamic_line_search;
    cfg.fixed_alpha = alpha;
    cfg.alpha_grid = alpha_grid;
    cfg.wmf = wmf_config();
    return cfg;
  }

  EvalConfig eval_config() const {
    EvalConfig cfg;
    cfg.cutoffs = cutoffs;
    cfg.exclude_seen = exclude_seen;
    cfg.num_threads = threads;
    return cfg;
  }

  PipelineConfig pipeline_config() const {
    PipelineConfig cfg;
    cfg.binarize_threshold = binarize_threshold;
    cfg.c_pos = c_pos;
    cfg.c_zero = c_zero;
    cfg.zero_sample_rate = zero_rate;
    cfg.zero_target_multiple = zero_multiple;
    cfg.split_spec.ratios = split_ratios;
    cfg.split_spec.seed = derive_seed(seed, seed_stream::split);
    cfg.zero_seed = derive_seed(seed, seed_stream::zeros);
    return cfg;
  }
};

namespace detail {

inline std::vector<double> parse_double_list(const std::string& text,
                                             const std::string& key) {
  std::vector<double> out;
  for (auto field : split_fields(text, ',')) {
    double v = 0;
    if (!parse_double(trim(field), v))
      throw ConfigError("invalid number in '" + key + "': " +
                        std::string(field));
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

inline double parse_double_or_throw(const std::string& text,
                                    const std::string& key) {
  double v = 0;
  if (!parse_double(trim(text), v))
    throw ConfigError("invalid number for '" + key + "': " + text);
  return v;
}

inline long long parse_int_or_throw(const std::string& text,
                                    const std::string& key) {
  const double v = parse_double_or_throw(text, key);
  const long long i = static_cast<long long>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("expected an integer for '" + key + "': " + text);
  return i;
}

inline bool parse_bool_or_throw(const std::string& text,
                                const std::string& key) {
  std::string t(trim(text));
  if (t == "true" || t == "1" || t == "on" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "off" || t == "no") return false;
  throw ConfigError("expected a boolean for '" + key + "': " + text);
}

}  // namespace detail

// One `key = value` assignment; shared by config files and CLI overrides.
inline void apply_setting(RunConfig& cfg, const std::string& key,
                          const std::string& value) {
  if (key == "data.path") cfg.data_path = value;
  else if (key == "data.format") cfg.data_format = value;
  else if (key == "binarize.threshold")
    cfg.binarize_threshold = detail::parse_double_or_throw(value, key);
  else if (key == "confidence.positive")
    cfg.c_pos = detail::parse_double_or_throw(value, key);
  else if (key == "confidence.zero")
    cfg.c_zero = detail::parse_double_or_throw(value, key);
  else if (key == "zeros.rate")
    cfg.zero_rate = detail::parse_double_or_throw(value, key);
  else if (key == "zeros.multiple")
    cfg.zero_multiple = detail::parse_double_or_throw(value, key);
  else if (key == "split.ratios") {
    auto r = detail::parse_double_list(value, key);
    if (r.size() != 3) throw ConfigError("split.ratios needs 3 values");
    double sum = r[0] + r[1] + r[2];
    if (!(sum > 0)) throw ConfigError("split.ratios must sum to > 0");
    cfg.split_ratios = {r[0] / sum, r[1] / sum, r[2] / sum};
  } else if (key == "seed")
    cfg.seed = static_cast<std::uint64_t>(detail::parse_int_or_throw(value, key));
  else if (key == "method") cfg.method = value;
  else if (key == "wmf.d")
    cfg.d = static_cast<int>(detail::parse_int_or_throw(value, key));
  else if (key == "wmf.lambda_u")
    cfg.lambda_u = detail::parse_double_or_throw(value, key);
  else if (key == "wmf.lambda_v")
    cfg.lambda_v = detail::parse_double_or_throw(value, key);
  else if (key == "wmf.sweeps")
    cfg.sweeps = static_cast<int>(detail::parse_int_or_throw(value, key));
  else if (key == "wmf.init_scale")
    cfg.init_scale = detail::parse_double_or_throw(value, key);
  else if (key == "prior.sigma0")
    cfg.sigma0 = detail::parse_double_or_throw(value, key);
  else if (key == "prior.sigma_r")
    cfg.sigma_r = detail::parse_double_or_throw(value, key);
  else if (key == "pecf.nu")
    cfg.nu = detail::parse_double_or_throw(value, key);
  else if (key == "pecf.sigma")
    cfg.sigma = detail::parse_double_or_throw(value, key);
  else if (key == "rounds")
    cfg.rounds = static_cast<int>(detail::parse_int_or_throw(value, key));
  else if (key == "boost.shrinkage")
    cfg.shrinkage = detail::parse_double_or_throw(value, key);
  else if (key == "randem.components")
    cfg.num_components = static_cast<int>(detail::parse_int_or_throw(value, key));
  else if (key == "randem.iters")
    cfg.em_iters = static_cast<int>(detail::parse_int_or_throw(value, key));
  else if (key == "alpha.strategy") cfg.alpha_strategy = value;
  else if (key == "alpha.value")
    cfg.alpha = detail::parse_double_or_throw(value, key);
  else if (key == "alpha.grid")
    cfg.alpha_grid = detail::parse_double_list(value, key);
  else if (key == "eval.cutoffs") {
    cfg.cutoffs.clear();
    for (double v : detail::parse_double_list(value, key))
      cfg.cutoffs.push_back(static_cast<int>(v));
  } else if (key == "eval.exclude_seen")
    cfg.exclude_seen = detail::parse_bool_or_throw(value, key);
  else if (key == "threads")
    cfg.threads = static_cast<int>(detail::parse_int_or_throw(value, key));
  else if (key == "out.dir") cfg.out_dir = value;
  else
    throw ConfigError("unknown config key '" + key + "'");
}

// Declarative `key = value` file; '#' starts a comment.
inline RunConfig parse_config_file(const std::string& path,
                                   RunConfig cfg = RunConfig{}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(path, line_number, "expected 'key = value'");
    const std::string key(detail::trim(sv.substr(0, eq)));
    const std::string value(detail::trim(sv.substr(eq + 1)));
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ParseError(path, line_number, e.what());
    }
  }
  return cfg;
}

inline RatingDataset load_run_dataset(const RunConfig& cfg) {
  if (cfg.data_format == "prepared") return load_dataset_tsv(cfg.data_path);
  const FileFormat fmt = cfg.data_format == "movielens_tabular"
                             ? FileFormat::movielens_tabular
                             : FileFormat::triplet_csv;
  return build_dataset(load_ratings(cfg.data_path, fmt), cfg.pipeline_config());
}

struct RunResult {
  std::vector<EvalReport> rounds;
  EvalReport final_excluded;  // seen items removed from the candidate ranking
  EvalReport final_all;       // every item ranked
  std::string model_path;
};

namespace detail {

inline std::string format_summary_row(const std::string& method,
                                      const EvalReport& report) {
  char buf[64];
  std::string row = method;
  for (const auto& [m, value] : report.recall_at) {
    std::snprintf(buf, sizeof(buf), ",%.6f", value);
    row += buf;
  }
  std::snprintf(buf, sizeof(buf), ",%.6f", report.wmse);
  row += buf;
  return row;
}

inline std::string summary_header(const std::vector<int>& cutoffs) {
  std::string header = "method";
  for (int m : cutoffs) header += ",recall@" + std::to_string(m);
  header += ",wmse";
  return header;
}

}  // namespace detail

// Runs one experiment end to end and writes manifest.txt, model.bin,
// metrics.csv and summary.txt under cfg.out_dir. Fully determined by
// (config, seed).
inline RunResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const RatingDataset ds = load_run_dataset(cfg);
  write_text_file(cfg.out_dir + "/manifest.txt", dataset_manifest(ds));

  const WmfConfig wmf_cfg = cfg.wmf_config();
  const EvalConfig eval_cfg = cfg.eval_config();
  const std::string model_path = cfg.out_dir + "/model.bin";

  RunResult result;
  result.model_path = model_path;
  UserScorer final_scorer;

  if (cfg.method == "wmf") {
    WmfConfig solo = wmf_cfg;
    solo.seed = component_seed(wmf_cfg.seed, 0);
    auto model = std::make_shared<FactorModel>(
        solve_wmf(ds, unit_weights(ds), solo));
    final_scorer = [model](int user) {
      return predict_scores_for_user(*model, user);
    };
    result.rounds.push_back(evaluate_model(ds, final_scorer, eval_cfg, 0));
    save_factor_model(model_path, *model);
  } else if (cfg.method == "pecf") {
    auto trained = std::make_shared<PecfResult>(
        train_pecf(ds, cfg.pecf_config(), &eval_cfg));
    result.rounds = trained->rounds;
    final_scorer = [trained](int user) {
      return ensemble_scores_for_user(trained->model, user);
    };
    save_ensemble_model(model_path, trained->model);
  } else if (cfg.method == "l2boost") {
    auto trained = std::make_shared<BoostResult>(
        train_l2boost(ds, cfg.rounds, cfg.shrinkage, wmf_cfg, &eval_cfg));
    result.rounds = trained->rounds;
    final_scorer = [trained](int user) {
      return boost_scores_for_user(trained->model, user);
    };
    save_boost_model(model_path, trained->model);
  } else {  // randem
    RandEmConfig rcfg;
    rcfg.wmf = wmf_cfg;
    rcfg.noise_sigma = cfg.sigma;
    rcfg.em_iters = cfg.em_iters;
    auto trained = std::make_shared<RandEmResult>(
        train_rand_em(ds, cfg.num_components, rcfg, &eval_cfg));
    result.rounds = trained->rounds;
    final_scorer = [trained](int user) {
      return ensemble_scores_for_user(trained->model, user);
    };
    save_ensemble_model(model_path, trained->model);
  }

  write_text_file(cfg.out_dir + "/metrics.csv", metrics_csv(result.rounds));

  EvalConfig excl = eval_cfg, all = eval_cfg;
  excl.exclude_seen = true;
  all.exclude_seen = false;
  const int final_round = result.rounds.empty() ? 0 : result.rounds.back().round;
  result.final_excluded = evaluate_model(ds, final_scorer, excl, final_round);
  result.final_all = evaluate_model(ds, final_scorer, all, final_round);

  std::ostringstream summary;
  summary << "method " << cfg.method << "\n"
          << "data " << cfg.data_path << "\n"
          << "seed " << cfg.seed << "\n"
          << "users " << ds.num_users << "\n"
          << "items " << ds.num_items << "\n"
          << "final_round " << final_round << "\n"
          << "\n"
          << "# candidate ranking excludes seen positives\n"
          << detail::summary_header(cfg.cutoffs) << "\n"
          << detail::format_summary_row(cfg.method, result.final_excluded)
          << "\n"
          << "\n"
          << "# all items ranked\n"
          << detail::summary_header(cfg.cutoffs) << "\n"
          << detail::format_summary_row(cfg.method, result.final_all) << "\n";
  write_text_file(cfg.out_dir + "/summary.txt", summary.str());
  return result;
}

// Writes the dataset manifest plus a prepared dataset container that later
// runs can consume with data.format = prepared.
inline void prepare_experiment(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const RatingDataset ds = load_run_dataset(cfg);
  write_text_file(cfg.out_dir + "/manifest.txt", dataset_manifest(ds));
  save_dataset_tsv(cfg.out_dir + "/dataset.tsv", ds);
}

// Evaluates a saved model on the test split of the configured dataset.
inline std::string evaluate_experiment(const RunConfig& cfg,
                                       const std::string& model_path) {
  cfg.validate();
  const RatingDataset ds = load_run_dataset(cfg);
  const LoadedModel model = load_model(model_path);
  auto scorer = [&model](int user) { return model.scores_for_user(user); };

  EvalConfig excl = cfg.eval_config(), all = cfg.eval_config();
  excl.exclude_seen = true;
  all.exclude_seen = false;
  const EvalReport rep_excl = evaluate_model(ds, scorer, excl);
  const EvalReport rep_all = evaluate_model(ds, scorer, all);

  std::ostringstream out;
  out << "model " << model_path << "\n"
      << "data " << cfg.data_path << "\n"
      << "\n"
      << "# candidate ranking excludes seen positives\n"
      << detail::summary_header(cfg.cutoffs) << "\n"
      << detail::format_summary_row(cfg.method, rep_excl) << "\n"
      << "\n"
      << "# all items ranked\n"
      << detail::summary_header(cfg.cutoffs) << "\n"
      << detail::format_summary_row(cfg.method, rep_all) << "\n";
  return out.str();
}

// Grid sweep over one or two hyperparameters; each run shares the base
// seed and lands in its own subdirectory.
struct SweepRow {
  std::string label;
  EvalReport final_report;
};

inline void apply_sweep_value(RunConfig& cfg, const std::string& parameter,
                              const std::string& value) {
  if (parameter == "d")
    cfg.d = static_cast<int>(detail::parse_int_or_throw(value, parameter));
  else if (parameter == "nu")
    cfg.nu = detail::parse_double_or_throw(value, parameter);
  else if (parameter == "sigma")
    cfg.sigma = detail::parse_double_or_throw(value, parameter);
  else if (parameter == "alpha") {
    if (value == "dynamic") {
      cfg.alpha_strategy = "dynamic";
    } else {
      cfg.alpha_strategy = "fixed";
      cfg.alpha = detail::parse_double_or_throw(value, parameter);
    }
  } else if (parameter == "rounds")
    cfg.rounds = static_cast<int>(detail::parse_int_or_throw(value, parameter));
  else if (parameter == "K")
    cfg.num_components =
        static_cast<int>(detail::parse_int_or_throw(value, parameter));
  else
    throw ConfigError("sweep parameter must be one of d, nu, sigma, alpha, "
                      "rounds, K (got '" + parameter + "')");
}

inline std::vector<SweepRow> sweep(const RunConfig& base,
                                   const std::string& parameter,
                                   const std::vector<std::string>& values,
                                   const std::string& parameter2 = "",
                                   const std::vector<std::string>& values2 = {}) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (!parameter2.empty() && values2.empty())
    throw ConfigError("second sweep parameter needs values");

  std::vector<SweepRow> rows;
  std::vector<std::string> inner = parameter2.empty()
                                       ? std::vector<std::string>{""}
                                       : values2;
  for (const auto& v1 : values) {
    for (const auto& v2 : inner) {
      RunConfig cfg = base;
      apply_sweep_value(cfg, parameter, v1);
      std::string label = parameter + "=" + v1;
      if (!parameter2.empty()) {
        apply_sweep_value(cfg, parameter2, v2);
        label += "," + parameter2 + "=" + v2;
      }
      cfg.out_dir = base.out_dir + "/sweep_" + label;
      for (auto& ch : cfg.out_dir)
        if (ch == ',' || ch == '=') ch = '_';
      const RunResult run = run_experiment(cfg);
      rows.push_back({label, run.final_excluded});
    }
  }

  std::string header = parameter;
  if (!parameter2.empty()) header += "," + parameter2;
  for (int m : base.cutoffs) header += ",recall@" + std::to_string(m);
  header += ",wmse\n";
  std::string table = header;
  char buf[64];
  for (const auto& row : rows) {
    table += row.label;
    for (const auto& [_, value] : row.final_report.recall_at) {
      std::snprintf(buf, sizeof(buf), ",%.6f", value);
      table += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.6f", row.final_report.wmse);
    table += buf;
    table += "\n";
  }
  std::filesystem::create_directories(base.out_dir);
  write_text_file(base.out_dir + "/sweep.csv", table);
  return rows;
}

}  // namespace pecf
