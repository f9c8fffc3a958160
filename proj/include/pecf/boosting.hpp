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

#include <vector>

#include "pecf/common.hpp"
#include "pecf/data.hpp"
#include "pecf/eval.hpp"
#include "pecf/model.hpp"
#include "pecf/wmf.hpp"

namespace pecf {

// Stage-wise additive ensemble. The first component fits the raw ratings at
// full scale; later stages fit residuals and enter shrunk:
//   prediction = f_0 + shrinkage * sum_{k>=1} f_k.
struct BoostModel {
  std::vector<FactorModel> components;
  double shrinkage = 0.5;

  int size() const { return static_cast<int>(components.size()); }
};

inline double boost_predict(const BoostModel& model, int user, int item) {
  double out = predict(model.components.front(), user, item);
  for (int k = 1; k < model.size(); ++k)
    out += model.shrinkage * predict(model.components[k], user, item);
  return out;
}

inline Vector boost_scores_for_user(const BoostModel& model, int user) {
  Vector scores = predict_scores_for_user(model.components.front(), user);
  for (int k = 1; k < model.size(); ++k)
    scores.noalias() +=
        model.shrinkage * predict_scores_for_user(model.components[k], user);
  return scores;
}

struct BoostResult {
  BoostModel model;
  std::vector<EvalReport> rounds;
};

// L2 boosting over factor components: stage k fits the residual
// r - prediction_{k-1} under the base confidences, no re-weighting.
inline BoostResult train_l2boost(const RatingDataset& ds, int rounds,
                                 double shrinkage, const WmfConfig& cfg,
                                 const EvalConfig* eval = nullptr) {
  cfg.validate();
  if (rounds < 0) throw ConfigError("rounds must be >= 0");
  if (!(shrinkage > 0.0) || shrinkage > 1.0)
    throw ConfigError("shrinkage must lie in (0, 1]");

  const TrainView view = build_train_view(ds);
  const TrainWeights weights(view.size(), 1.0);

  BoostResult result;
  result.model.shrinkage = shrinkage;

  WmfConfig stage_cfg = cfg;
  stage_cfg.seed = component_seed(cfg.seed, 0);
  result.model.components.push_back(
      solve_wmf(ds, training_targets(ds), weights, stage_cfg));

  std::vector<double> prediction(view.size());
  for (std::size_t t = 0; t < view.size(); ++t) {
    const Observation& obs = ds.entries[view.train_idx[t]];
    prediction[t] = predict(result.model.components.front(), obs.user, obs.item);
  }

  auto record = [&](int round) {
    if (!eval) return;
    const BoostModel& m = result.model;
    result.rounds.push_back(evaluate_model(
        ds, [&m](int user) { return boost_scores_for_user(m, user); }, *eval,
        round));
  };
  record(0);

  for (int round = 1; round <= rounds; ++round) {
    std::vector<double> residual(view.size());
    for (std::size_t t = 0; t < view.size(); ++t)
      residual[t] = ds.entries[view.train_idx[t]].rating - prediction[t];

    stage_cfg.seed = component_seed(cfg.seed, round);
    FactorModel stage = solve_wmf(ds, residual, weights, stage_cfg);
    for (std::size_t t = 0; t < view.size(); ++t) {
      const Observation& obs = ds.entries[view.train_idx[t]];
      prediction[t] += shrinkage * predict(stage, obs.user, obs.item);
    }
    result.model.components.push_back(std::move(stage));
    record(round);
  }
  return result;
}

}  // namespace pecf
