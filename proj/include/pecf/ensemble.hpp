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

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "pecf/common.hpp"
#include "pecf/data.hpp"
#include "pecf/eval.hpp"
#include "pecf/model.hpp"
#include "pecf/parallel.hpp"
#include "pecf/wmf.hpp"

namespace pecf {

// Mixture of factor components with prior weights pi. noise_sigma is the
// bandwidth of the error-to-density map exp(-e^2/sigma^2) shared by the
// E-step and the progressive re-weighting.
struct EnsembleModel {
  std::vector<FactorModel> components;
  std::vector<double> weights;  // pi, sums to 1
  double noise_sigma = 1.0;

  int size() const { return static_cast<int>(components.size()); }

  void validate() const {
    if (components.empty()) throw std::invalid_argument("empty ensemble");
    if (weights.size() != components.size())
      throw std::invalid_argument("pi size does not match component count");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("pi entries must be >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("pi must sum to 1");
    if (!(noise_sigma > 0.0))
      throw std::invalid_argument("noise_sigma must be positive");
    const int d = components.front().dim();
    const int m = components.front().num_users();
    const int n = components.front().num_items();
    for (const auto& comp : components)
      if (comp.dim() != d || comp.num_users() != m || comp.num_items() != n)
        throw std::invalid_argument("components must share d, m, n");
  }
};

inline EnsembleModel single_component_ensemble(FactorModel model,
                                               double noise_sigma) {
  EnsembleModel ens;
  ens.components.push_back(std::move(model));
  ens.weights.push_back(1.0);
  ens.noise_sigma = noise_sigma;
  return ens;
}

// Mixture-mean point prediction: sum_k pi_k u_i^(k) . v_j^(k).
inline double ensemble_predict(const EnsembleModel& model, int user, int item) {
  double out = 0.0;
  for (int k = 0; k < model.size(); ++k)
    out += model.weights[k] * predict(model.components[k], user, item);
  return out;
}

inline Vector ensemble_scores_for_user(const EnsembleModel& model, int user) {
  Vector scores = Vector::Zero(model.components.front().num_items());
  for (int k = 0; k < model.size(); ++k)
    scores.noalias() +=
        model.weights[k] * predict_scores_for_user(model.components[k], user);
  return scores;
}

// Unnormalized error density exp(-e^2/sigma^2). The Gaussian normalizer is
// absorbed into nu.
inline double component_density(double error, double sigma) {
  return std::exp(-(error * error) / (sigma * sigma));
}

// Posterior weight of an entry toward a prospective new component:
// rho = 1 / (1 + nu * exp(-e^2/sigma^2)). Increasing in |e|, from
// 1/(1+nu) at e = 0, saturating to 1.
inline double rho_weight(double error, double nu, double sigma) {
  return 1.0 / (1.0 + nu * component_density(error, sigma));
}

// Current-ensemble prediction error per training entry, in entry order.
inline std::vector<double> training_errors(const EnsembleModel& model,
                                           const RatingDataset& ds,
                                           int num_threads = 0) {
  const TrainView view = build_train_view(ds);
  std::vector<double> errors(view.size());
  parallel_for(
      0, view.size(),
      [&](std::size_t t) {
        const Observation& obs = ds.entries[view.train_idx[t]];
        errors[t] = obs.rating - ensemble_predict(model, obs.user, obs.item);
      },
      num_threads);
  return errors;
}

// E-step responsibilities over training entries: row t holds
// q_t^(k) proportional to pi_k * exp(-e_k^2/sigma^2), normalized to sum 1.
// Computed in the log domain; if every component underflows the row falls
// back to uniform.
inline Matrix em_e_step(const EnsembleModel& model, const RatingDataset& ds,
                        int num_threads = 0) {
  model.validate();
  const TrainView view = build_train_view(ds);
  const int K = model.size();
  const double sigma2 = model.noise_sigma * model.noise_sigma;
  Matrix q(view.size(), K);

  parallel_for(
      0, view.size(),
      [&](std::size_t t) {
        const Observation& obs = ds.entries[view.train_idx[t]];
        double best = -std::numeric_limits<double>::infinity();
        Eigen::ArrayXd logq(K);
        for (int k = 0; k < K; ++k) {
          const double err =
              obs.rating - predict(model.components[k], obs.user, obs.item);
          logq[k] = model.weights[k] > 0.0
                        ? std::log(model.weights[k]) - err * err / sigma2
                        : -std::numeric_limits<double>::infinity();
          best = std::max(best, logq[k]);
        }
        if (!std::isfinite(best)) {
          q.row(t).setConstant(1.0 / K);
          return;
        }
        double sum = 0.0;
        for (int k = 0; k < K; ++k) {
          logq[k] = std::exp(logq[k] - best);
          sum += logq[k];
        }
        for (int k = 0; k < K; ++k) q(t, k) = logq[k] / sum;
      },
      num_threads);
  return q;
}

// M-step: warm-start each component from its current factors and re-solve
// with the coefficient c_ij replaced by c_ij q_ij^(k); pi_k is recomputed
// proportional to sum_ij c_ij q_ij^(k). Warm starting makes the complete-data
// penalized objective non-increasing under fixed q.
inline EnsembleModel em_m_step(const EnsembleModel& current,
                               const RatingDataset& ds, const Matrix& q,
                               const WmfConfig& cfg) {
  current.validate();
  const TrainView view = build_train_view(ds);
  if (q.rows() != static_cast<Eigen::Index>(view.size()) ||
      q.cols() != current.size())
    throw std::invalid_argument("responsibility matrix shape mismatch");

  EnsembleModel next = current;
  const int K = current.size();
  std::vector<double> pi(K, 0.0);
  for (int k = 0; k < K; ++k) {
    TrainWeights weights(view.size());
    for (std::size_t t = 0; t < view.size(); ++t) weights[t] = q(t, k);
    refine_wmf(next.components[k], ds, weights, cfg);
    double mass = 0.0;
    for (std::size_t t = 0; t < view.size(); ++t)
      mass += ds.entries[view.train_idx[t]].confidence * q(t, k);
    pi[k] = mass;
  }
  double total = 0.0;
  for (double p : pi) total += p;
  if (!(total > 0.0))
    throw std::runtime_error("responsibility mass vanished in M-step");
  for (int k = 0; k < K; ++k) next.weights[k] = pi[k] / total;
  return next;
}

// Complete-data penalized objective at fixed responsibilities:
// sum_k [ sum_t c_t q_t^(k) e_t^(k)^2 + (lambda_u/2)||U_k||^2 +
// (lambda_v/2)||V_k||^2 ]. The M-step never increases it.
inline double em_surrogate_objective(const EnsembleModel& model,
                                     const RatingDataset& ds, const Matrix& q,
                                     const WmfConfig& cfg) {
  const TrainView view = build_train_view(ds);
  double total = 0.0;
  for (int k = 0; k < model.size(); ++k) {
    TrainWeights weights(view.size());
    for (std::size_t t = 0; t < view.size(); ++t) weights[t] = q(t, k);
    total += wmf_objective(model.components[k], ds, weights, cfg);
  }
  return total;
}

struct RandEmConfig {
  WmfConfig wmf;
  double noise_sigma = 1.0;
  int em_iters = 10;

  void validate() const {
    wmf.validate();
    if (!(noise_sigma > 0.0)) throw ConfigError("noise_sigma must be positive");
    if (em_iters < 0) throw ConfigError("em_iters must be >= 0");
  }
};

struct RandEmResult {
  EnsembleModel model;
  std::vector<EvalReport> rounds;  // round 0 = initial fit, then per EM iter
};

// EM from a seeded random hard partition of the training entries: fit one
// component per group, then alternate E/M steps.
inline RandEmResult train_rand_em(const RatingDataset& ds, int K,
                                  const RandEmConfig& cfg,
                                  const EvalConfig* eval = nullptr) {
  cfg.validate();
  if (K < 1) throw ConfigError("component count K must be >= 1");
  const TrainView view = build_train_view(ds);
  if (view.size() == 0)
    throw std::runtime_error("dataset has an empty training split");

  std::mt19937_64 rng(derive_seed(cfg.wmf.seed, seed_stream::partition));
  std::uniform_int_distribution<int> pick(0, K - 1);
  std::vector<int> group(view.size());
  for (auto& g : group) g = pick(rng);

  RandEmResult result;
  result.model.noise_sigma = cfg.noise_sigma;
  std::vector<double> pi(K, 0.0);
  for (int k = 0; k < K; ++k) {
    TrainWeights weights(view.size(), 0.0);
    double mass = 0.0;
    for (std::size_t t = 0; t < view.size(); ++t) {
      if (group[t] == k) {
        weights[t] = 1.0;
        mass += ds.entries[view.train_idx[t]].confidence;
      }
    }
    WmfConfig comp_cfg = cfg.wmf;
    comp_cfg.seed = component_seed(cfg.wmf.seed, k);
    result.model.components.push_back(solve_wmf(ds, weights, comp_cfg));
    pi[k] = mass;
  }
  double total = 0.0;
  for (double p : pi) total += p;
  for (int k = 0; k < K; ++k) pi[k] = total > 0.0 ? pi[k] / total : 1.0 / K;
  result.model.weights = pi;

  auto record = [&](int round) {
    if (!eval) return;
    const EnsembleModel& m = result.model;
    result.rounds.push_back(evaluate_model(
        ds, [&m](int user) { return ensemble_scores_for_user(m, user); },
        *eval, round));
  };
  record(0);

  for (int iter = 1; iter <= cfg.em_iters; ++iter) {
    const Matrix q = em_e_step(result.model, ds, cfg.wmf.num_threads);
    result.model = em_m_step(result.model, ds, q, cfg.wmf);
    record(iter);
  }
  return result;
}

struct PecfConfig {
  double nu = 10.0;
  double sigma = 1.0;
  int max_rounds = 15;

  enum class AlphaStrategy { dynamic_line_search, fixed };
  AlphaStrategy alpha_strategy = AlphaStrategy::dynamic_line_search;
  double fixed_alpha = 0.5;
  std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

  WmfConfig wmf;

  void validate() const {
    if (!(nu > 0.0)) throw ConfigError("nu must be positive");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (max_rounds < 0) throw ConfigError("max_rounds must be >= 0");
    if (alpha_strategy == AlphaStrategy::fixed) {
      if (!(fixed_alpha > 0.0) || !(fixed_alpha < 1.0))
        throw ConfigError("fixed alpha must lie in (0, 1)");
    } else {
      if (alpha_grid.empty()) throw ConfigError("alpha grid must be non-empty");
      double prev = 0.0;
      for (double a : alpha_grid) {
        if (!(a > 0.0) || a > 1.0)
          throw ConfigError("alpha grid values must lie in (0, 1]");
        if (a <= prev) throw ConfigError("alpha grid must be strictly ascending");
        prev = a;
      }
    }
    wmf.validate();
  }
};

// Weight for the incoming component: fixed, or the validation-WMSE minimizer
// over the grid (ties resolve to the smallest alpha). The blend is evaluated
// as current + alpha * (candidate - current), so an identical candidate ties
// exactly across the grid.
inline double choose_alpha(const EnsembleModel& current,
                           const FactorModel& candidate,
                           const RatingDataset& ds, const PecfConfig& cfg) {
  if (cfg.alpha_strategy == PecfConfig::AlphaStrategy::fixed)
    return cfg.fixed_alpha;

  const auto val_idx = ds.indices_of(Split::validation);
  if (val_idx.empty())
    throw std::runtime_error(
        "dynamic alpha line search needs a non-empty validation split; "
        "configure a fixed alpha instead");

  std::vector<double> base(val_idx.size()), delta(val_idx.size());
  parallel_for(
      0, val_idx.size(),
      [&](std::size_t t) {
        const Observation& obs = ds.entries[val_idx[t]];
        const double cur = ensemble_predict(current, obs.user, obs.item);
        base[t] = cur;
        delta[t] = predict(candidate, obs.user, obs.item) - cur;
      },
      cfg.wmf.num_threads);

  double best_alpha = cfg.alpha_grid.front();
  double best_wmse = std::numeric_limits<double>::infinity();
  for (double alpha : cfg.alpha_grid) {
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < val_idx.size(); ++t) {
      const Observation& obs = ds.entries[val_idx[t]];
      const double err = base[t] + alpha * delta[t] - obs.rating;
      num += obs.confidence * err * err;
      den += obs.confidence;
    }
    const double w = num / den;
    if (w < best_wmse) {
      best_wmse = w;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

// One progressive round: re-weight every training entry by its posterior
// rho toward a new component, fit that component, and fold it in with
// weight alpha. Existing factor matrices are untouched; only pi rescales.
inline EnsembleModel pecf_round(const EnsembleModel& current,
                                const RatingDataset& ds,
                                const PecfConfig& cfg) {
  cfg.validate();
  current.validate();

  std::vector<double> errors = training_errors(current, ds, cfg.wmf.num_threads);
  TrainWeights rho(errors.size());
  for (std::size_t t = 0; t < errors.size(); ++t)
    rho[t] = rho_weight(errors[t], cfg.nu, cfg.sigma);

  WmfConfig comp_cfg = cfg.wmf;
  comp_cfg.seed = component_seed(cfg.wmf.seed, current.size());
  FactorModel candidate = solve_wmf(ds, rho, comp_cfg);

  const double alpha = choose_alpha(current, candidate, ds, cfg);

  EnsembleModel next = current;
  for (double& w : next.weights) w *= 1.0 - alpha;
  next.components.push_back(std::move(candidate));
  next.weights.push_back(alpha);
  return next;
}

struct PecfResult {
  EnsembleModel model;
  std::vector<EvalReport> rounds;      // test metrics, round 0..R
  std::vector<double> chosen_alphas;   // one per round >= 1
};

// Progressive construction: round 0 is a plain unit-weight fit, then up to
// max_rounds complementary components.
inline PecfResult train_pecf(const RatingDataset& ds, const PecfConfig& cfg,
                             const EvalConfig* eval = nullptr) {
  cfg.validate();

  WmfConfig base_cfg = cfg.wmf;
  base_cfg.seed = component_seed(cfg.wmf.seed, 0);
  PecfResult result;
  result.model =
      single_component_ensemble(solve_wmf(ds, unit_weights(ds), base_cfg),
                                cfg.sigma);

  auto record = [&](int round) {
    if (!eval) return;
    const EnsembleModel& m = result.model;
    result.rounds.push_back(evaluate_model(
        ds, [&m](int user) { return ensemble_scores_for_user(m, user); },
        *eval, round));
  };
  record(0);

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    result.model = pecf_round(result.model, ds, cfg);
    result.chosen_alphas.push_back(result.model.weights.back());
    record(round);
  }
  return result;
}

}  // namespace pecf
