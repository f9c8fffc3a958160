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

#include <algorithm>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "pecf/common.hpp"
#include "pecf/data.hpp"
#include "pecf/parallel.hpp"

namespace pecf {

struct EvalConfig {
  std::vector<int> cutoffs{50, 100, 200};
  // Drop the user's train/validation positives from the ranked candidates.
  bool exclude_seen = true;
  int num_threads = 0;
};

struct EvalReport {
  int round = 0;
  std::vector<std::pair<int, double>> recall_at;  // (M, mean recall)
  double wmse = 0.0;

  double recall(int cutoff) const {
    for (const auto& [m, value] : recall_at)
      if (m == cutoff) return value;
    throw std::invalid_argument("no recall recorded at cutoff " +
                                std::to_string(cutoff));
  }
};

namespace detail {

// Recall for one user: fraction of their positives found in the top-M
// non-excluded items. Ties break toward the lower item index.
inline double user_recall(const Vector& scores,
                          const std::vector<int>& positives,
                          const std::vector<char>& excluded, int M) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> candidates;
  candidates.reserve(n);
  for (int i = 0; i < n; ++i)
    if (excluded.empty() || !excluded[i]) candidates.push_back(i);
  if (M > static_cast<int>(candidates.size()))
    throw std::invalid_argument("recall cutoff exceeds candidate item count");

  auto better = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + M,
                    candidates.end(), better);

  std::vector<char> is_positive(n, 0);
  for (int p : positives) is_positive[p] = 1;
  int hits = 0;
  for (int r = 0; r < M; ++r) hits += is_positive[candidates[r]];
  return static_cast<double>(hits) / static_cast<double>(positives.size());
}

}  // namespace detail

// Mean recall over users with at least one positive. Users with empty
// positive lists are skipped; exclusions_by_user may be empty (no exclusions).
inline double recall_at_m(
    const std::vector<Vector>& scores_by_user,
    const std::vector<std::vector<int>>& positives_by_user, int M,
    const std::vector<std::vector<int>>& exclusions_by_user = {}) {
  if (M < 1) throw std::invalid_argument("recall cutoff must be >= 1");
  if (positives_by_user.size() != scores_by_user.size())
    throw std::invalid_argument("positives/scores user count mismatch");

  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t u = 0; u < scores_by_user.size(); ++u) {
    if (positives_by_user[u].empty()) continue;
    std::vector<char> excluded;
    if (u < exclusions_by_user.size() && !exclusions_by_user[u].empty()) {
      excluded.assign(scores_by_user[u].size(), 0);
      for (int i : exclusions_by_user[u]) excluded[i] = 1;
    }
    total += detail::user_recall(scores_by_user[u], positives_by_user[u],
                                 excluded, M);
    ++counted;
  }
  if (counted == 0)
    throw std::invalid_argument("no user has a positive to recall");
  return total / static_cast<double>(counted);
}

// Confidence-weighted mean squared error over the given entries;
// predictions aligned with `entries`.
inline double wmse(const std::vector<double>& predictions,
                   const std::vector<Observation>& entries) {
  if (entries.empty()) throw std::invalid_argument("wmse over an empty set");
  if (predictions.size() != entries.size())
    throw std::invalid_argument("predictions/entries size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const double err = predictions[k] - entries[k].rating;
    num += entries[k].confidence * err * err;
    den += entries[k].confidence;
  }
  return num / den;
}

// Scores every item for one user; the model-independent evaluation hook.
using UserScorer = std::function<Vector(int user)>;

// Recall@M over the test positives plus WMSE over all test entries.
// Per-user work runs in parallel; the reduction is a fixed-order sum, so the
// result does not depend on the schedule.
inline EvalReport evaluate_model(const RatingDataset& ds,
                                 const UserScorer& scorer,
                                 const EvalConfig& cfg, int round = 0) {
  std::vector<std::vector<int>> positives(ds.num_users);
  std::vector<std::vector<int>> exclusions(ds.num_users);
  std::vector<std::vector<std::size_t>> test_entries(ds.num_users);
  std::size_t num_test = 0;
  for (std::size_t e = 0; e < ds.entries.size(); ++e) {
    const Observation& obs = ds.entries[e];
    if (obs.split == Split::test) {
      test_entries[obs.user].push_back(e);
      ++num_test;
      if (obs.rating > 0.0) positives[obs.user].push_back(obs.item);
    } else if (cfg.exclude_seen && obs.rating > 0.0) {
      exclusions[obs.user].push_back(obs.item);
    }
  }
  if (num_test == 0)
    throw std::invalid_argument("dataset has an empty test split");

  struct UserStat {
    std::vector<double> recall;  // per cutoff
    double wmse_num = 0.0;
    double wmse_den = 0.0;
    bool counted = false;
  };
  std::vector<UserStat> stats(ds.num_users);

  parallel_for(
      0, static_cast<std::size_t>(ds.num_users),
      [&](std::size_t u) {
        const int user = static_cast<int>(u);
        if (test_entries[user].empty()) return;
        const Vector scores = scorer(user);
        UserStat& st = stats[user];
        for (std::size_t e : test_entries[user]) {
          const Observation& obs = ds.entries[e];
          const double err = scores[obs.item] - obs.rating;
          st.wmse_num += obs.confidence * err * err;
          st.wmse_den += obs.confidence;
        }
        if (positives[user].empty()) return;
        std::vector<char> excluded;
        if (cfg.exclude_seen && !exclusions[user].empty()) {
          excluded.assign(ds.num_items, 0);
          for (int i : exclusions[user]) excluded[i] = 1;
        }
        st.counted = true;
        st.recall.reserve(cfg.cutoffs.size());
        for (int M : cfg.cutoffs)
          st.recall.push_back(
              detail::user_recall(scores, positives[user], excluded, M));
      },
      cfg.num_threads);

  EvalReport report;
  report.round = round;
  std::vector<double> recall_sum(cfg.cutoffs.size(), 0.0);
  std::size_t counted = 0;
  double num = 0.0, den = 0.0;
  for (const auto& st : stats) {
    num += st.wmse_num;
    den += st.wmse_den;
    if (!st.counted) continue;
    ++counted;
    for (std::size_t c = 0; c < recall_sum.size(); ++c)
      recall_sum[c] += st.recall[c];
  }
  report.wmse = num / den;
  for (std::size_t c = 0; c < cfg.cutoffs.size(); ++c)
    report.recall_at.emplace_back(
        cfg.cutoffs[c],
        counted ? recall_sum[c] / static_cast<double>(counted) : 0.0);
  return report;
}

}  // namespace pecf
