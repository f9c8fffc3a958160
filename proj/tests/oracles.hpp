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
// Test-only reference implementations, kept independent of the library's
// solve and ranking paths: a scalar-loop objective, a full-gradient-descent
// factorization solver, and a sort-and-count recall.
#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "pecf/data.hpp"
#include "pecf/model.hpp"
#include "pecf/wmf.hpp"

namespace oracle {

// Objective by naive scalar summation, no Eigen reductions.
inline double objective(const pecf::FactorModel& model,
                        const pecf::RatingDataset& ds,
                        const std::vector<double>& weights,
                        const pecf::WmfConfig& cfg) {
  double loss = 0.0;
  std::size_t t = 0;
  for (const auto& obs : ds.entries) {
    if (obs.split != pecf::Split::train) continue;
    double dot = 0.0;
    for (int r = 0; r < cfg.d; ++r)
      dot += model.user_factors(r, obs.user) * model.item_factors(r, obs.item);
    const double err = obs.rating - dot;
    loss += obs.confidence * weights[t] * err * err;
    ++t;
  }
  double reg_u = 0.0;
  for (int c = 0; c < model.num_users(); ++c)
    for (int r = 0; r < cfg.d; ++r)
      reg_u += model.user_factors(r, c) * model.user_factors(r, c);
  double reg_v = 0.0;
  for (int c = 0; c < model.num_items(); ++c)
    for (int r = 0; r < cfg.d; ++r)
      reg_v += model.item_factors(r, c) * model.item_factors(r, c);
  return loss + 0.5 * cfg.lambda_u * reg_u + 0.5 * cfg.lambda_v * reg_v;
}

struct Gradient {
  pecf::Matrix user;  // d x m
  pecf::Matrix item;  // d x n

  double norm() const {
    return std::sqrt(user.squaredNorm() + item.squaredNorm());
  }
};

inline Gradient gradient(const pecf::FactorModel& model,
                         const pecf::RatingDataset& ds,
                         const std::vector<double>& weights,
                         const pecf::WmfConfig& cfg) {
  Gradient g;
  g.user = cfg.lambda_u * model.user_factors;
  g.item = cfg.lambda_v * model.item_factors;
  std::size_t t = 0;
  for (const auto& obs : ds.entries) {
    if (obs.split != pecf::Split::train) continue;
    const double cw = obs.confidence * weights[t];
    ++t;
    if (cw == 0.0) continue;
    const double err =
        obs.rating -
        model.user_factors.col(obs.user).dot(model.item_factors.col(obs.item));
    g.user.col(obs.user) -= 2.0 * cw * err * model.item_factors.col(obs.item);
    g.item.col(obs.item) -= 2.0 * cw * err * model.user_factors.col(obs.user);
  }
  return g;
}

// Plain full-gradient descent with Armijo backtracking, run until the
// gradient norm drops below `tol`. Starts from the factors in `model`.
inline pecf::FactorModel gradient_descent(pecf::FactorModel model,
                                          const pecf::RatingDataset& ds,
                                          const std::vector<double>& weights,
                                          const pecf::WmfConfig& cfg,
                                          double tol = 1e-10,
                                          long max_iters = 2000000) {
  double obj = objective(model, ds, weights, cfg);
  double step = 1.0;
  for (long iter = 0; iter < max_iters; ++iter) {
    const Gradient g = gradient(model, ds, weights, cfg);
    const double gnorm2 = g.user.squaredNorm() + g.item.squaredNorm();
    if (std::sqrt(gnorm2) < tol) break;

    step *= 2.0;  // allow recovery after conservative steps
    while (true) {
      pecf::FactorModel trial = model;
      trial.user_factors -= step * g.user;
      trial.item_factors -= step * g.item;
      const double trial_obj = objective(trial, ds, weights, cfg);
      if (trial_obj <= obj - 1e-4 * step * gnorm2) {
        model = std::move(trial);
        obj = trial_obj;
        break;
      }
      step *= 0.5;
      if (step < 1e-18) return model;  // stuck at numerical floor
    }
  }
  return model;
}

// Recall by full sort; ties break toward the lower item index.
inline double recall_bruteforce(
    const std::vector<pecf::Vector>& scores_by_user,
    const std::vector<std::vector<int>>& positives_by_user, int M,
    const std::vector<std::vector<int>>& exclusions_by_user) {
  double total = 0.0;
  int counted = 0;
  for (std::size_t u = 0; u < scores_by_user.size(); ++u) {
    if (positives_by_user[u].empty()) continue;
    const auto& scores = scores_by_user[u];
    std::vector<int> order;
    for (int i = 0; i < scores.size(); ++i) order.push_back(i);
    if (u < exclusions_by_user.size()) {
      for (int excluded : exclusions_by_user[u])
        order.erase(std::remove(order.begin(), order.end(), excluded),
                    order.end());
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    int hits = 0;
    for (int r = 0; r < M && r < static_cast<int>(order.size()); ++r)
      for (int p : positives_by_user[u])
        if (order[r] == p) ++hits;
    total += static_cast<double>(hits) / positives_by_user[u].size();
    ++counted;
  }
  return total / counted;
}

// Random dense dataset for solver tests: every (user, item) pair observed,
// all entries in the training split unless told otherwise.
inline pecf::RatingDataset random_dataset(int m, int n, std::uint64_t seed,
                                          bool random_confidence = true,
                                          double positive_rate = 0.35) {
  pecf::RatingDataset ds;
  ds.num_users = m;
  ds.num_items = n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int u = 0; u < m; ++u) {
    ds.user_ids.push_back(std::to_string(u));
    ds.user_index.emplace(std::to_string(u), u);
  }
  for (int i = 0; i < n; ++i) {
    ds.item_ids.push_back(std::to_string(i));
    ds.item_index.emplace(std::to_string(i), i);
  }
  for (int u = 0; u < m; ++u) {
    for (int i = 0; i < n; ++i) {
      pecf::Observation obs;
      obs.user = u;
      obs.item = i;
      obs.rating = unif(rng) < positive_rate ? 1.0 : 0.0;
      obs.confidence = random_confidence ? 0.05 + unif(rng) : 1.0;
      obs.split = pecf::Split::train;
      ds.entries.push_back(obs);
    }
  }
  return ds;
}

inline std::vector<double> random_weights(std::size_t count,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::vector<double> w(count);
  for (auto& x : w) x = unif(rng);
  return w;
}

}  // namespace oracle
