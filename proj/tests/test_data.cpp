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

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "pecf/data.hpp"

using namespace pecf;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path =
      (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

std::vector<RawRecord> make_records(
    const std::vector<std::tuple<std::string, std::string, double>>& rows) {
  std::vector<RawRecord> records;
  for (const auto& [u, i, r] : rows) records.push_back({u, i, r});
  return records;
}

}  // namespace

TEST_CASE("load_ratings parses csv triplets") {
  const auto path = write_temp("pecf_t1.csv", "1,10,5.0\n2,10,3.0\n");
  const auto records = load_ratings(path, FileFormat::triplet_csv);
  REQUIRE(records.size() == 2);
  CHECK(records[0].user_id == "1");
  CHECK(records[0].item_id == "10");
  CHECK(records[0].rating == 5.0);
  CHECK(records[1].rating == 3.0);
}

TEST_CASE("load_ratings parses movielens tabs and ignores extra columns") {
  const auto path =
      write_temp("pecf_t2.data", "196\t242\t3\t881250949\n186\t302\t3\t891717742\n");
  const auto records = load_ratings(path, FileFormat::movielens_tabular);
  REQUIRE(records.size() == 2);
  CHECK(records[0].user_id == "196");
  CHECK(records[0].item_id == "242");
  CHECK(records[0].rating == 3.0);
}

TEST_CASE("load_ratings reports the offending line") {
  const auto path = write_temp("pecf_t3.csv", "1,10,abc\n");
  try {
    load_ratings(path, FileFormat::triplet_csv);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 1);
  }

  const auto path2 = write_temp("pecf_t4.csv", "1,10,5.0\n1,10\n");
  try {
    load_ratings(path2, FileFormat::triplet_csv);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 2);
  }
}

TEST_CASE("load_ratings rejects an empty file") {
  const auto path = write_temp("pecf_t5.csv", "");
  CHECK_THROWS(load_ratings(path, FileFormat::triplet_csv));
}

TEST_CASE("binarize thresholds ratings") {
  auto records = make_records({{"1", "1", 5.0}, {"1", "2", 4.0}, {"2", "1", 5.0}});
  auto out = binarize(records, 5.0);
  CHECK(out[0].rating == 1.0);
  CHECK(out[1].rating == 0.0);
  CHECK(out[2].rating == 1.0);

  out = binarize(records, 0.0);
  for (const auto& rec : out) CHECK(rec.rating == 1.0);
}

TEST_CASE("binarize is idempotent once ratings are binary") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rating(0.0, 6.0);
  std::uniform_real_distribution<double> thr(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RawRecord> records;
    for (int k = 0; k < 50; ++k)
      records.push_back({std::to_string(k % 7), std::to_string(k % 11),
                         rating(rng)});
    const double t = 5.0;
    const auto once = binarize(records, t);
    // Re-binarizing binary data at any threshold in (0, 1] is a no-op.
    const double t2 = thr(rng) + 1e-12;
    const auto twice = binarize(once, t2);
    for (std::size_t k = 0; k < once.size(); ++k)
      CHECK(once[k].rating == twice[k].rating);
  }
}

TEST_CASE("assign_confidence uses c_pos and c_zero") {
  auto ds = index_records(
      make_records({{"1", "1", 1.0}, {"1", "2", 0.0}, {"2", "1", 0.0}}));
  assign_confidence(ds, 1.0, 0.01);
  CHECK(ds.entries[0].confidence == 1.0);
  CHECK(ds.entries[1].confidence == 0.01);
  CHECK(ds.entries[2].confidence == 0.01);

  assign_confidence(ds, 1.0, 1.0);
  CHECK(ds.entries[1].confidence == 1.0);

  CHECK_THROWS_AS(assign_confidence(ds, 0.0, 0.01), ConfigError);
  CHECK_THROWS_AS(assign_confidence(ds, 1.0, -1.0), ConfigError);
}

TEST_CASE("index_records assigns dense ids in first-appearance order") {
  auto ds = index_records(make_records(
      {{"u9", "i3", 1.0}, {"u2", "i3", 0.0}, {"u9", "i7", 1.0}}));
  CHECK(ds.num_users == 2);
  CHECK(ds.num_items == 2);
  CHECK(ds.user_index.at("u9") == 0);
  CHECK(ds.user_index.at("u2") == 1);
  CHECK(ds.item_index.at("i3") == 0);
  CHECK(ds.item_index.at("i7") == 1);

  // ids round-trip through the index maps
  for (int u = 0; u < ds.num_users; ++u)
    CHECK(ds.user_index.at(ds.user_ids[u]) == u);
  for (int i = 0; i < ds.num_items; ++i)
    CHECK(ds.item_index.at(ds.item_ids[i]) == i);
}

TEST_CASE("index_records drops duplicate pairs") {
  auto ds = index_records(make_records(
      {{"1", "1", 1.0}, {"1", "1", 0.0}, {"1", "2", 1.0}}));
  CHECK(ds.entries.size() == 2);
  CHECK(ds.duplicates_dropped == 1);
  CHECK(ds.entries[0].rating == 1.0);  // first occurrence wins
}

TEST_CASE("split assigns every entry exactly one tag and is deterministic") {
  std::vector<RawRecord> records;
  for (int u = 0; u < 100; ++u)
    for (int i = 0; i < 10; ++i)
      records.push_back({std::to_string(u), std::to_string(i), 1.0});
  auto ds = index_records(records);

  SplitSpec spec;
  spec.ratios = {0.6, 0.2, 0.2};
  spec.seed = 7;
  split(ds, spec);

  CHECK(ds.count_of(Split::train) + ds.count_of(Split::validation) +
            ds.count_of(Split::test) ==
        ds.entries.size());
  CHECK(ds.count_of(Split::train) > 0);
  CHECK(ds.count_of(Split::validation) > 0);
  CHECK(ds.count_of(Split::test) > 0);

  auto ds2 = index_records(records);
  split(ds2, spec);
  for (std::size_t e = 0; e < ds.entries.size(); ++e)
    CHECK(ds.entries[e].split == ds2.entries[e].split);
}

TEST_CASE("split respects ratios within a binomial bound") {
  std::vector<RawRecord> records;
  for (int u = 0; u < 200; ++u)
    for (int i = 0; i < 500; ++i)
      records.push_back({std::to_string(u), std::to_string(i), 1.0});
  auto ds = index_records(records);
  REQUIRE(ds.entries.size() == 100000);

  SplitSpec spec;
  spec.ratios = {0.6, 0.2, 0.2};
  spec.seed = 7;
  split(ds, spec);
  const double train_fraction =
      static_cast<double>(ds.count_of(Split::train)) / ds.entries.size();
  CHECK(train_fraction == Catch::Approx(0.6).margin(0.01));
}

TEST_CASE("degenerate split puts everything in train") {
  auto ds = index_records(make_records({{"1", "1", 1.0}, {"2", "2", 0.0}}));
  SplitSpec spec;
  spec.ratios = {1.0, 0.0, 0.0};
  spec.seed = 3;
  split(ds, spec);
  CHECK(ds.count_of(Split::train) == ds.entries.size());
}

TEST_CASE("split rejects bad ratios") {
  SplitSpec spec;
  spec.ratios = {0.5, 0.2, 0.2};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.ratios = {-0.2, 0.6, 0.6};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("densify_zeros adds the exhaustive complement at rate 1") {
  auto ds = index_records(make_records({{"1", "1", 1.0}, {"2", "2", 1.0}}));
  REQUIRE(ds.num_users == 2);
  REQUIRE(ds.num_items == 2);
  densify_zeros(ds, 1.0, 5);
  CHECK(ds.entries.size() == 4);

  // nothing unobserved left: a second pass adds nothing
  densify_zeros(ds, 1.0, 6);
  CHECK(ds.entries.size() == 4);
}

TEST_CASE("densify_zeros never duplicates a pair") {
  std::mt19937_64 rng(19);
  std::vector<RawRecord> records;
  for (int k = 0; k < 50; ++k)
    records.push_back({std::to_string(rng() % 20), std::to_string(rng() % 20),
                       1.0});
  auto ds = index_records(records);
  densify_zeros(ds, 0.5, 23);
  std::set<std::pair<int, int>> pairs;
  for (const auto& obs : ds.entries)
    CHECK(pairs.emplace(obs.user, obs.item).second);
}

TEST_CASE("densify_zeros sampling count lands near its expectation") {
  std::vector<RawRecord> records;
  std::mt19937_64 rng(3);
  std::set<std::pair<int, int>> seen;
  while (seen.size() < 50) {
    const int u = static_cast<int>(rng() % 100);
    const int i = static_cast<int>(rng() % 100);
    if (seen.emplace(u, i).second)
      records.push_back({std::to_string(u), std::to_string(i), 1.0});
  }
  // make sure every index exists so the grid is exactly 100x100
  for (int k = 0; k < 100; ++k) {
    records.push_back({std::to_string(k), std::to_string((k + 1) % 100), 1.0});
  }
  auto ds = index_records(records);
  REQUIRE(ds.num_users == 100);
  REQUIRE(ds.num_items == 100);
  const std::size_t before = ds.entries.size();
  const double unobserved = 100.0 * 100.0 - static_cast<double>(before);
  densify_zeros(ds, 0.1, 11);
  const double added = static_cast<double>(ds.entries.size() - before);
  CHECK(std::abs(added - 0.1 * unobserved) <= 150.0);
}

TEST_CASE("densify_zeros validates the rate") {
  auto ds = index_records(make_records({{"1", "1", 1.0}}));
  CHECK_THROWS_AS(densify_zeros(ds, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(densify_zeros(ds, 1.5, 1), ConfigError);
}

TEST_CASE("build_dataset runs the full pipeline deterministically") {
  std::vector<RawRecord> raw;
  std::mt19937_64 rng(5);
  for (int u = 0; u < 30; ++u)
    for (int i = 0; i < 20; ++i)
      if (rng() % 4 == 0)
        raw.push_back({std::to_string(u), std::to_string(i),
                       static_cast<double>(1 + rng() % 5)});

  PipelineConfig cfg;
  cfg.binarize_threshold = 5.0;
  cfg.split_spec.seed = 42;
  cfg.zero_seed = 43;
  auto ds = build_dataset(raw, cfg);

  for (const auto& obs : ds.entries) {
    CHECK((obs.rating == 0.0 || obs.rating == 1.0));
    CHECK(obs.confidence == (obs.rating > 0.0 ? 1.0 : 0.01));
    CHECK(obs.user >= 0);
    CHECK(obs.user < ds.num_users);
    CHECK(obs.item >= 0);
    CHECK(obs.item < ds.num_items);
  }
  // zeros land near 5x positives (cap: the unobserved complement)
  const double pos = static_cast<double>(ds.positives());
  const double zeros = static_cast<double>(ds.entries.size()) - pos;
  CHECK(zeros >= 2.0 * pos);

  auto ds2 = build_dataset(raw, cfg);
  REQUIRE(ds.entries.size() == ds2.entries.size());
  for (std::size_t e = 0; e < ds.entries.size(); ++e) {
    CHECK(ds.entries[e].user == ds2.entries[e].user);
    CHECK(ds.entries[e].item == ds2.entries[e].item);
    CHECK(ds.entries[e].split == ds2.entries[e].split);
  }
}

TEST_CASE("manifest lists counts") {
  auto ds = index_records(make_records({{"1", "1", 1.0}, {"1", "2", 0.0}}));
  assign_confidence(ds, 1.0, 0.01);
  const std::string manifest = dataset_manifest(ds);
  CHECK(manifest.find("users 1") != std::string::npos);
  CHECK(manifest.find("items 2") != std::string::npos);
  CHECK(manifest.find("entries 2") != std::string::npos);
  CHECK(manifest.find("positives 1") != std::string::npos);
}
