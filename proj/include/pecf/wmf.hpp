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
#include <random>
#include <vector>

#include "pecf/common.hpp"
#include "pecf/data.hpp"
#include "pecf/model.hpp"
#include "pecf/parallel.hpp"

namespace pecf {

struct WmfConfig {
  int d = 50;
  double lambda_u = 0.1;
  double lambda_v = 0.1;
  int sweeps = 15;
  // Std of the Gaussian init; <= 0 selects the dimension-stable default
  // 0.1 / sqrt(d).
  double init_scale = -1.0;
  std::uint64_t seed = 0;
  int num_threads = 0;  // 0 = hardware concurrency

  double effective_init_scale() const {
    return init_scale > 0.0 ? init_scale : 0.1 / std::sqrt(static_cast<double>(d));
  }

  void validate() const {
    if (d < 1) throw ConfigError("embedding dimension d must be >= 1");
    if (lambda_u < 0.0 || lambda_v < 0.0)
      throw ConfigError("regularization coefficients must be non-negative");
    if (sweeps < 1) throw ConfigError("sweeps must be >= 1");
    if (!(effective_init_scale() > 0.0))
      throw ConfigError("init_scale must be positive");
  }
};

// Gaussian generative view of the same problem: embeddings drawn with prior
// std sigma0, ratings with noise std sigma_r. MAP estimation reduces to the
// weighted factorization objective with lambda_u = lambda_v = sigma_r^2/sigma0^2.
struct PriorConfig {
  double sigma0 = 1.0;
  double sigma_r = 1.0;

  void validate() const {
    if (!(sigma0 > 0.0) || !(sigma_r > 0.0))
      throw ConfigError("prior and noise stds must be positive");
  }

  double regularizer() const { return sigma_r * sigma_r / (sigma0 * sigma0); }

  WmfConfig apply(WmfConfig cfg) const {
    validate();
    cfg.lambda_u = regularizer();
    cfg.lambda_v = regularizer();
    return cfg;
  }
};

// Per-observation multiplicative weights layered over the base confidences,
// aligned with the training split in entry order.
using TrainWeights = std::vector<double>;

// Deterministic seed for the k-th component fitted under a shared base seed.
// All ensemble constructors use this so their round-0 models coincide.
inline std::uint64_t component_seed(std::uint64_t base, int k) {
  return derive_seed(base, 0x1000ull + static_cast<std::uint64_t>(k));
}

// Training-split adjacency, built once per solve.
struct TrainView {
  std::vector<std::size_t> train_idx;     // entry index per training slot
  std::vector<std::vector<int>> by_user;  // slots grouped by user
  std::vector<std::vector<int>> by_item;

  std::size_t size() const { return train_idx.size(); }
};

inline TrainView build_train_view(const RatingDataset& ds) {
  TrainView view;
  view.train_idx = ds.indices_of(Split::train);
  view.by_user.resize(ds.num_users);
  view.by_item.resize(ds.num_items);
  for (std::size_t t = 0; t < view.train_idx.size(); ++t) {
    const Observation& obs = ds.entries[view.train_idx[t]];
    view.by_user[obs.user].push_back(static_cast<int>(t));
    view.by_item[obs.item].push_back(static_cast<int>(t));
  }
  return view;
}

inline TrainWeights unit_weights(const RatingDataset& ds) {
  return TrainWeights(ds.count_of(Split::train), 1.0);
}

// Ratings of the training split in entry order; the default solve target.
inline std::vector<double> training_targets(const RatingDataset& ds) {
  std::vector<double> targets;
  for (const auto& obs : ds.entries)
    if (obs.split == Split::train) targets.push_back(obs.rating);
  return targets;
}

namespace detail {

inline void check_weights(const TrainView& view, const TrainWeights& weights) {
  if (weights.size() != view.size())
    throw std::invalid_argument("weights must match the training split size");
  for (double w : weights)
    if (!(w >= 0.0)) throw std::invalid_argument("weights must be >= 0");
}

inline double objective_impl(const FactorModel& model, const RatingDataset& ds,
                             const TrainView& view,
                             const std::vector<double>& targets,
                             const TrainWeights& weights,
                             const WmfConfig& cfg) {
  double loss = 0.0;
  for (std::size_t t = 0; t < view.size(); ++t) {
    const Observation& obs = ds.entries[view.train_idx[t]];
    const double cw = obs.confidence * weights[t];
    if (cw == 0.0) continue;
    const double err =
        targets[t] -
        model.user_factors.col(obs.user).dot(model.item_factors.col(obs.item));
    loss += cw * err * err;
  }
  loss += 0.5 * cfg.lambda_u * model.user_factors.squaredNorm();
  loss += 0.5 * cfg.lambda_v * model.item_factors.squaredNorm();
  return loss;
}

// Exact block minimizer for one side of the alternation. Solving the
// objective in u_i with V fixed gives the normal equations
//   (sum cw v v^T + (lambda/2) I) u_i = sum cw target v,
// the lambda/2 matching the lambda/2 ||u||^2 term of the objective.
inline void half_sweep(Matrix& solved, const Matrix& fixed,
                       const std::vector<std::vector<int>>& adjacency,
                       const TrainView& view, const RatingDataset& ds,
                       const std::vector<double>& targets,
                       const TrainWeights& weights, double lambda,
                       bool user_side, const WmfConfig& cfg) {
  const int d = cfg.d;
  parallel_for(
      0, adjacency.size(),
      [&](std::size_t idx) {
        Matrix normal = Matrix::Zero(d, d);
        normal.diagonal().setConstant(0.5 * lambda);
        Vector rhs = Vector::Zero(d);
        for (int t : adjacency[idx]) {
          const Observation& obs = ds.entries[view.train_idx[t]];
          const double cw = obs.confidence * weights[t];
          if (cw == 0.0) continue;
          const auto other = fixed.col(user_side ? obs.item : obs.user);
          normal.selfadjointView<Eigen::Lower>().rankUpdate(other, cw);
          rhs.noalias() += cw * targets[t] * other;
        }
        Eigen::LLT<Matrix> llt(normal.selfadjointView<Eigen::Lower>());
        if (llt.info() != Eigen::Success)
          throw std::runtime_error(
              "singular normal matrix in alternating solve; set lambda_u and "
              "lambda_v > 0");
        solved.col(static_cast<int>(idx)) = llt.solve(rhs);
      },
      cfg.num_threads);
}

}  // namespace detail

// Eq-style training objective: sum over training entries of
// c*w*(target - u^T v)^2 plus (lambda_u/2)||U||_F^2 + (lambda_v/2)||V||_F^2.
inline double wmf_objective(const FactorModel& model, const RatingDataset& ds,
                            const std::vector<double>& targets,
                            const TrainWeights& weights,
                            const WmfConfig& cfg) {
  if (model.num_users() != ds.num_users || model.num_items() != ds.num_items ||
      model.dim() != cfg.d)
    throw std::invalid_argument("model dimensions do not match dataset/config");
  TrainView view = build_train_view(ds);
  detail::check_weights(view, weights);
  if (targets.size() != view.size())
    throw std::invalid_argument("targets must match the training split size");
  return detail::objective_impl(model, ds, view, targets, weights, cfg);
}

inline double wmf_objective(const FactorModel& model, const RatingDataset& ds,
                            const TrainWeights& weights,
                            const WmfConfig& cfg) {
  return wmf_objective(model, ds, training_targets(ds), weights, cfg);
}

// Seeded zero-mean Gaussian factors, filled column by column, U then V.
inline FactorModel init_factors(int d, int num_users, int num_items,
                                double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  FactorModel model;
  model.user_factors.resize(d, num_users);
  model.item_factors.resize(d, num_items);
  for (int c = 0; c < num_users; ++c)
    for (int r = 0; r < d; ++r) model.user_factors(r, c) = gauss(rng);
  for (int c = 0; c < num_items; ++c)
    for (int r = 0; r < d; ++r) model.item_factors(r, c) = gauss(rng);
  return model;
}

// Runs `cfg.sweeps` alternations from the factors already in `model`.
// Each half-sweep is an exact block minimization, so the objective is
// non-increasing half-sweep by half-sweep; pass `trace` to record it.
inline void refine_wmf(FactorModel& model, const RatingDataset& ds,
                       const std::vector<double>& targets,
                       const TrainWeights& weights, const WmfConfig& cfg,
                       std::vector<double>* trace = nullptr) {
  cfg.validate();
  if (model.num_users() != ds.num_users || model.num_items() != ds.num_items ||
      model.dim() != cfg.d)
    throw std::invalid_argument("model dimensions do not match dataset/config");
  TrainView view = build_train_view(ds);
  if (view.size() == 0)
    throw std::runtime_error("dataset has an empty training split");
  detail::check_weights(view, weights);
  if (targets.size() != view.size())
    throw std::invalid_argument("targets must match the training split size");

  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    detail::half_sweep(model.user_factors, model.item_factors, view.by_user,
                       view, ds, targets, weights, cfg.lambda_u, true, cfg);
    if (trace)
      trace->push_back(
          detail::objective_impl(model, ds, view, targets, weights, cfg));
    detail::half_sweep(model.item_factors, model.user_factors, view.by_item,
                       view, ds, targets, weights, cfg.lambda_v, false, cfg);
    if (trace)
      trace->push_back(
          detail::objective_impl(model, ds, view, targets, weights, cfg));
  }
}

inline FactorModel solve_wmf(const RatingDataset& ds,
                             const std::vector<double>& targets,
                             const TrainWeights& weights, const WmfConfig& cfg,
                             std::vector<double>* trace = nullptr) {
  cfg.validate();
  FactorModel model = init_factors(cfg.d, ds.num_users, ds.num_items,
                                   cfg.effective_init_scale(), cfg.seed);
  refine_wmf(model, ds, targets, weights, cfg, trace);
  return model;
}

inline FactorModel solve_wmf(const RatingDataset& ds,
                             const TrainWeights& weights, const WmfConfig& cfg,
                             std::vector<double>* trace = nullptr) {
  return solve_wmf(ds, training_targets(ds), weights, cfg, trace);
}

inline void refine_wmf(FactorModel& model, const RatingDataset& ds,
                       const TrainWeights& weights, const WmfConfig& cfg,
                       std::vector<double>* trace = nullptr) {
  refine_wmf(model, ds, training_targets(ds), weights, cfg, trace);
}

}  // namespace pecf
