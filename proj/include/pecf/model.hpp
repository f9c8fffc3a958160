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

#include <stdexcept>
#include <string>

#include "pecf/common.hpp"

namespace pecf {

// One latent-factor component: user embeddings U (d x m) and item
// embeddings V (d x n), one column per user / item.
struct FactorModel {
  Matrix user_factors;  // d x m
  Matrix item_factors;  // d x n

  int dim() const { return static_cast<int>(user_factors.rows()); }
  int num_users() const { return static_cast<int>(user_factors.cols()); }
  int num_items() const { return static_cast<int>(item_factors.cols()); }
};

inline void check_user_item(const FactorModel& model, int user, int item) {
  if (user < 0 || user >= model.num_users())
    throw std::out_of_range("user index " + std::to_string(user) +
                            " out of range [0, " +
                            std::to_string(model.num_users()) + ")");
  if (item < 0 || item >= model.num_items())
    throw std::out_of_range("item index " + std::to_string(item) +
                            " out of range [0, " +
                            std::to_string(model.num_items()) + ")");
}

inline double predict(const FactorModel& model, int user, int item) {
  check_user_item(model, user, item);
  return model.user_factors.col(user).dot(model.item_factors.col(item));
}

// Scores of every item for one user: V^T u.
inline Vector predict_scores_for_user(const FactorModel& model, int user) {
  check_user_item(model, user, 0);
  return model.item_factors.transpose() * model.user_factors.col(user);
}

}  // namespace pecf
