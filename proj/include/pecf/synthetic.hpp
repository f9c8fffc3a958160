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
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pecf/common.hpp"
#include "pecf/data.hpp"

namespace pecf {

// Block-diagonal synthetic ratings: users and items are partitioned into
// `blocks` groups, each with its own low-rank score matrix. A pair is
// positive when its block-local score exceeds the block's quantile
// threshold; cross-block pairs are never positive. This produces the kind
// of diverse data one global factorization struggles with.
struct SyntheticConfig {
  int num_users = 400;
  int num_items = 300;
  int blocks = 2;
  int rank = 5;
  double noise = 0.1;
  double positive_quantile = 0.8;
  std::uint64_t seed = 1;

  void validate() const {
    if (blocks < 1) throw ConfigError("blocks must be >= 1");
    if (num_users < blocks || num_items < blocks)
      throw ConfigError("need at least one user and item per block");
    if (rank < 1) throw ConfigError("rank must be >= 1");
    if (noise < 0.0) throw ConfigError("noise must be >= 0");
    if (!(positive_quantile > 0.0) || !(positive_quantile < 1.0))
      throw ConfigError("positive quantile must lie in (0, 1)");
  }
};

// Positive records only (rating 5); zeros come later from densify_zeros.
inline std::vector<RawRecord> generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.rank));

  std::vector<RawRecord> records;
  for (int b = 0; b < cfg.blocks; ++b) {
    const int u0 = b * cfg.num_users / cfg.blocks;
    const int u1 = (b + 1) * cfg.num_users / cfg.blocks;
    const int i0 = b * cfg.num_items / cfg.blocks;
    const int i1 = (b + 1) * cfg.num_items / cfg.blocks;
    const int bu = u1 - u0, bi = i1 - i0;

    Matrix user_f(cfg.rank, bu), item_f(cfg.rank, bi);
    for (int c = 0; c < bu; ++c)
      for (int r = 0; r < cfg.rank; ++r) user_f(r, c) = gauss(rng);
    for (int c = 0; c < bi; ++c)
      for (int r = 0; r < cfg.rank; ++r) item_f(r, c) = gauss(rng);

    std::vector<double> scores(static_cast<std::size_t>(bu) * bi);
    for (int u = 0; u < bu; ++u)
      for (int i = 0; i < bi; ++i)
        scores[static_cast<std::size_t>(u) * bi + i] =
            scale * user_f.col(u).dot(item_f.col(i)) + cfg.noise * gauss(rng);

    std::vector<double> sorted = scores;
    const std::size_t k = std::min<std::size_t>(
        sorted.size() - 1,
        static_cast<std::size_t>(cfg.positive_quantile *
                                 static_cast<double>(sorted.size())));
    std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
    const double threshold = sorted[k];

    for (int u = 0; u < bu; ++u) {
      for (int i = 0; i < bi; ++i) {
        if (scores[static_cast<std::size_t>(u) * bi + i] <= threshold) continue;
        RawRecord rec;
        rec.user_id = std::to_string(u0 + u + 1);
        rec.item_id = std::to_string(i0 + i + 1);
        rec.rating = 5.0;
        records.push_back(std::move(rec));
      }
    }
  }
  if (records.empty())
    throw std::runtime_error("synthetic generator produced no positives");
  return records;
}

inline void write_triplet_csv(const std::string& path,
                              const std::vector<RawRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  char buf[32];
  for (const auto& rec : records) {
    std::snprintf(buf, sizeof(buf), "%.17g", rec.rating);
    out << rec.user_id << ',' << rec.item_id << ',' << buf << '\n';
  }
}

}  // namespace pecf
