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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pecf/common.hpp"

namespace pecf {

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

enum class FileFormat { movielens_tabular, triplet_csv };

// One record as it appears in the input file, ids not yet re-indexed.
struct RawRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
};

// One re-indexed observation. `confidence` is the weight the entry carries
// in the training loss; `split` tags which partition it belongs to.
struct Observation {
  int user = 0;
  int item = 0;
  double rating = 0.0;
  double confidence = 1.0;
  Split split = Split::train;
};

struct SplitSpec {
  std::array<double, 3> ratios{0.6, 0.2, 0.2};  // train : validation : test
  std::uint64_t seed = 0;

  void validate() const {
    double sum = 0.0;
    for (double r : ratios) {
      if (r < 0.0) throw ConfigError("split ratios must be non-negative");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("split ratios must sum to 1");
  }
};

// Sparse implicit-feedback dataset. Immutable once built; safe to share
// across threads.
struct RatingDataset {
  int num_users = 0;
  int num_items = 0;
  std::vector<Observation> entries;
  std::vector<std::string> user_ids;  // dense index -> external id
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> user_index;  // external id -> dense
  std::unordered_map<std::string, int> item_index;
  std::size_t duplicates_dropped = 0;

  std::vector<std::size_t> indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < entries.size(); ++e)
      if (entries[e].split == s) out.push_back(e);
    return out;
  }

  std::size_t count_of(Split s) const {
    std::size_t c = 0;
    for (const auto& obs : entries)
      if (obs.split == s) ++c;
    return c;
  }

  std::size_t positives() const {
    std::size_t c = 0;
    for (const auto& obs : entries)
      if (obs.rating > 0.0) ++c;
    return c;
  }
};

namespace detail {

inline bool parse_double(std::string_view sv, double& out) {
  const char* begin = sv.data();
  const char* end = sv.data() + sv.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

inline std::string_view trim(std::string_view sv) {
  while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\r')) sv.remove_prefix(1);
  while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\r')) sv.remove_suffix(1);
  return sv;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace detail

// Reads (user, item, rating) records from a text file. Tab-separated for
// movielens_tabular, comma-separated for triplet_csv; columns beyond the
// third are ignored. Blank lines are skipped.
inline std::vector<RawRecord> load_ratings(const std::string& path,
                                           FileFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rating file: " + path);
  const char sep = format == FileFormat::movielens_tabular ? '\t' : ',';

  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    auto fields = detail::split_fields(sv, sep);
    if (fields.size() < 3)
      throw ParseError(path, line_number, "expected at least 3 fields");
    RawRecord rec;
    rec.user_id = std::string(detail::trim(fields[0]));
    rec.item_id = std::string(detail::trim(fields[1]));
    if (rec.user_id.empty() || rec.item_id.empty())
      throw ParseError(path, line_number, "empty user or item id");
    if (!detail::parse_double(detail::trim(fields[2]), rec.rating))
      throw ParseError(path, line_number, "bad rating value");
    records.push_back(std::move(rec));
  }
  if (records.empty())
    throw std::runtime_error("rating file has no records: " + path);
  return records;
}

// rating <- 1 if rating >= threshold else 0.
inline std::vector<RawRecord> binarize(std::vector<RawRecord> records,
                                       double threshold) {
  for (auto& rec : records) rec.rating = rec.rating >= threshold ? 1.0 : 0.0;
  return records;
}

// Assigns dense indices in first-appearance order. Duplicate (user, item)
// pairs keep the first occurrence; the drop count lands in the manifest.
inline RatingDataset index_records(const std::vector<RawRecord>& records) {
  RatingDataset ds;
  std::unordered_set<std::int64_t> seen;
  seen.reserve(records.size() * 2);
  for (const auto& rec : records) {
    auto [uit, unew] = ds.user_index.try_emplace(
        rec.user_id, static_cast<int>(ds.user_ids.size()));
    if (unew) ds.user_ids.push_back(rec.user_id);
    auto [iit, inew] = ds.item_index.try_emplace(
        rec.item_id, static_cast<int>(ds.item_ids.size()));
    if (inew) ds.item_ids.push_back(rec.item_id);

    Observation obs;
    obs.user = uit->second;
    obs.item = iit->second;
    obs.rating = rec.rating;

    const std::int64_t key =
        static_cast<std::int64_t>(obs.user) * (1ll << 32) + obs.item;
    if (!seen.insert(key).second) {
      ++ds.duplicates_dropped;
      continue;
    }
    ds.entries.push_back(obs);
  }
  ds.num_users = static_cast<int>(ds.user_ids.size());
  ds.num_items = static_cast<int>(ds.item_ids.size());
  return ds;
}

// Adds rating-0 observations for a seeded uniform sample of the unobserved
// (user, item) pairs. Existing pairs are never duplicated.
inline void densify_zeros(RatingDataset& ds, double sample_rate,
                          std::uint64_t seed) {
  if (!(sample_rate > 0.0) || sample_rate > 1.0)
    throw ConfigError("zero sample rate must lie in (0, 1]");
  std::unordered_set<std::int64_t> seen;
  seen.reserve(ds.entries.size() * 2);
  for (const auto& obs : ds.entries)
    seen.insert(static_cast<std::int64_t>(obs.user) * (1ll << 32) + obs.item);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool take_all = sample_rate >= 1.0;
  for (int u = 0; u < ds.num_users; ++u) {
    for (int i = 0; i < ds.num_items; ++i) {
      const std::int64_t key = static_cast<std::int64_t>(u) * (1ll << 32) + i;
      if (seen.count(key)) continue;
      if (!take_all && unif(rng) >= sample_rate) continue;
      Observation obs;
      obs.user = u;
      obs.item = i;
      obs.rating = 0.0;
      ds.entries.push_back(obs);
    }
  }
}

// c_pos for positive entries, c_zero for zero entries.
inline void assign_confidence(RatingDataset& ds, double c_pos, double c_zero) {
  if (!(c_pos > 0.0) || !(c_zero > 0.0))
    throw ConfigError("confidence coefficients must be positive");
  for (auto& obs : ds.entries)
    obs.confidence = obs.rating > 0.0 ? c_pos : c_zero;
}

// Tags every entry with a split drawn independently from the seeded stream.
// Splits with a positive ratio are guaranteed non-empty on datasets with
// >= 100 entries: if a draw leaves one empty, the lowest-index entry of the
// largest split moves over.
inline void split(RatingDataset& ds, const SplitSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double t0 = spec.ratios[0];
  const double t1 = spec.ratios[0] + spec.ratios[1];
  for (auto& obs : ds.entries) {
    const double u = unif(rng);
    obs.split = u < t0 ? Split::train
                       : (u < t1 ? Split::validation : Split::test);
  }

  if (ds.entries.size() < 100) return;
  for (int s = 0; s < 3; ++s) {
    if (spec.ratios[s] <= 0.0) continue;
    if (ds.count_of(static_cast<Split>(s)) > 0) continue;
    std::array<std::size_t, 3> counts{ds.count_of(Split::train),
                                      ds.count_of(Split::validation),
                                      ds.count_of(Split::test)};
    int donor = 0;
    for (int d = 1; d < 3; ++d)
      if (counts[d] > counts[donor]) donor = d;
    for (auto& obs : ds.entries) {
      if (obs.split == static_cast<Split>(donor)) {
        obs.split = static_cast<Split>(s);
        break;
      }
    }
  }
}

// Key-value text block with dataset statistics, for logging.
inline std::string dataset_manifest(const RatingDataset& ds) {
  const std::size_t pos = ds.positives();
  const double cells =
      static_cast<double>(ds.num_users) * static_cast<double>(ds.num_items);
  char density[64];
  std::snprintf(density, sizeof(density), "%.6f",
                cells > 0 ? static_cast<double>(pos) / cells : 0.0);
  std::ostringstream out;
  out << "users " << ds.num_users << "\n"
      << "items " << ds.num_items << "\n"
      << "entries " << ds.entries.size() << "\n"
      << "positives " << pos << "\n"
      << "zeros " << (ds.entries.size() - pos) << "\n"
      << "train " << ds.count_of(Split::train) << "\n"
      << "validation " << ds.count_of(Split::validation) << "\n"
      << "test " << ds.count_of(Split::test) << "\n"
      << "positive_density " << density << "\n"
      << "duplicates_dropped " << ds.duplicates_dropped << "\n";
  return out.str();
}

// Full pipeline from raw records to a split dataset.
struct PipelineConfig {
  double binarize_threshold = 5.0;
  double c_pos = 1.0;
  double c_zero = 0.01;
  // Explicit sample rate for unobserved pairs; when <= 0 the rate is derived
  // so that zeros land near zero_target_multiple times the positive count.
  double zero_sample_rate = -1.0;
  double zero_target_multiple = 5.0;
  SplitSpec split_spec;
  std::uint64_t zero_seed = 0;
};

inline RatingDataset build_dataset(const std::vector<RawRecord>& raw,
                                   const PipelineConfig& cfg) {
  auto binarized = binarize(raw, cfg.binarize_threshold);
  RatingDataset ds = index_records(binarized);

  const double cells =
      static_cast<double>(ds.num_users) * static_cast<double>(ds.num_items);
  const double unobserved = cells - static_cast<double>(ds.entries.size());
  double rate = cfg.zero_sample_rate;
  if (rate <= 0.0) {
    const double wanted = cfg.zero_target_multiple * static_cast<double>(ds.positives());
    rate = unobserved > 0.0 ? std::min(1.0, wanted / unobserved) : 0.0;
  }
  if (unobserved > 0.0 && rate > 0.0) densify_zeros(ds, rate, cfg.zero_seed);

  assign_confidence(ds, cfg.c_pos, cfg.c_zero);
  split(ds, cfg.split_spec);
  return ds;
}

}  // namespace pecf
