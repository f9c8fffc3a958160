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

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pecf/boosting.hpp"
#include "pecf/common.hpp"
#include "pecf/data.hpp"
#include "pecf/ensemble.hpp"
#include "pecf/eval.hpp"
#include "pecf/model.hpp"

namespace pecf {

// Binary model container. Little-endian, versioned:
//   "PECF" | u32 version | u8 kind | payload
// kind 0 (factor):   one factor block
// kind 1 (mixture):  u32 K | f64 noise_sigma | K f64 pi | K factor blocks
// kind 2 (additive): u32 K | f64 shrinkage | K factor blocks
// A factor block is u32 d | u32 m | u32 n | d*m f64 (U, row-major) |
// d*n f64 (V, row-major). Write/read round-trips bit-exactly.
enum class ModelKind : std::uint8_t { factor = 0, mixture = 1, additive = 2 };

namespace detail {

inline constexpr char kModelMagic[4] = {'P', 'E', 'C', 'F'};
inline constexpr std::uint32_t kModelVersion = 1;

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("truncated model file");
  return v;
}
inline double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("truncated model file");
  return v;
}

inline void write_factor_block(std::ostream& out, const FactorModel& model) {
  write_u32(out, static_cast<std::uint32_t>(model.dim()));
  write_u32(out, static_cast<std::uint32_t>(model.num_users()));
  write_u32(out, static_cast<std::uint32_t>(model.num_items()));
  for (int r = 0; r < model.dim(); ++r)
    for (int c = 0; c < model.num_users(); ++c)
      write_f64(out, model.user_factors(r, c));
  for (int r = 0; r < model.dim(); ++r)
    for (int c = 0; c < model.num_items(); ++c)
      write_f64(out, model.item_factors(r, c));
}

inline FactorModel read_factor_block(std::istream& in) {
  const int d = static_cast<int>(read_u32(in));
  const int m = static_cast<int>(read_u32(in));
  const int n = static_cast<int>(read_u32(in));
  FactorModel model;
  model.user_factors.resize(d, m);
  model.item_factors.resize(d, n);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < m; ++c) model.user_factors(r, c) = read_f64(in);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < n; ++c) model.item_factors(r, c) = read_f64(in);
  return model;
}

inline void write_header(std::ostream& out, ModelKind kind) {
  out.write(kModelMagic, 4);
  write_u32(out, kModelVersion);
  const std::uint8_t k = static_cast<std::uint8_t>(kind);
  out.write(reinterpret_cast<const char*>(&k), 1);
}

inline ModelKind read_header(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw std::runtime_error("not a model file (bad magic)");
  const std::uint32_t version = read_u32(in);
  if (version != kModelVersion)
    throw std::runtime_error("unsupported model format version " +
                             std::to_string(version));
  std::uint8_t k = 0;
  in.read(reinterpret_cast<char*>(&k), 1);
  if (!in || k > 2) throw std::runtime_error("bad model kind");
  return static_cast<ModelKind>(k);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  return in;
}

}  // namespace detail

inline void save_factor_model(const std::string& path, const FactorModel& model) {
  auto out = detail::open_out(path);
  detail::write_header(out, ModelKind::factor);
  detail::write_factor_block(out, model);
}

inline void save_ensemble_model(const std::string& path,
                                const EnsembleModel& model) {
  model.validate();
  auto out = detail::open_out(path);
  detail::write_header(out, ModelKind::mixture);
  detail::write_u32(out, static_cast<std::uint32_t>(model.size()));
  detail::write_f64(out, model.noise_sigma);
  for (double w : model.weights) detail::write_f64(out, w);
  for (const auto& comp : model.components)
    detail::write_factor_block(out, comp);
}

inline void save_boost_model(const std::string& path, const BoostModel& model) {
  auto out = detail::open_out(path);
  detail::write_header(out, ModelKind::additive);
  detail::write_u32(out, static_cast<std::uint32_t>(model.size()));
  detail::write_f64(out, model.shrinkage);
  for (const auto& comp : model.components)
    detail::write_factor_block(out, comp);
}

struct LoadedModel {
  ModelKind kind = ModelKind::factor;
  FactorModel factor;
  EnsembleModel mixture;
  BoostModel additive;

  // Per-user scores regardless of kind.
  Vector scores_for_user(int user) const {
    switch (kind) {
      case ModelKind::factor: return predict_scores_for_user(factor, user);
      case ModelKind::mixture: return ensemble_scores_for_user(mixture, user);
      case ModelKind::additive: return boost_scores_for_user(additive, user);
    }
    throw std::logic_error("bad model kind");
  }
};

inline LoadedModel load_model(const std::string& path) {
  auto in = detail::open_in(path);
  LoadedModel loaded;
  loaded.kind = detail::read_header(in);
  switch (loaded.kind) {
    case ModelKind::factor:
      loaded.factor = detail::read_factor_block(in);
      break;
    case ModelKind::mixture: {
      const int K = static_cast<int>(detail::read_u32(in));
      loaded.mixture.noise_sigma = detail::read_f64(in);
      loaded.mixture.weights.resize(K);
      for (int k = 0; k < K; ++k)
        loaded.mixture.weights[k] = detail::read_f64(in);
      for (int k = 0; k < K; ++k)
        loaded.mixture.components.push_back(detail::read_factor_block(in));
      break;
    }
    case ModelKind::additive: {
      const int K = static_cast<int>(detail::read_u32(in));
      loaded.additive.shrinkage = detail::read_f64(in);
      for (int k = 0; k < K; ++k)
        loaded.additive.components.push_back(detail::read_factor_block(in));
      break;
    }
  }
  return loaded;
}

inline FactorModel load_factor_model(const std::string& path) {
  LoadedModel loaded = load_model(path);
  if (loaded.kind != ModelKind::factor)
    throw std::runtime_error("model file does not hold a single component");
  return loaded.factor;
}

// Round-by-round metrics as comma-separated rows.
inline std::string metrics_csv(const std::vector<EvalReport>& rounds) {
  std::string out = "round";
  if (!rounds.empty())
    for (const auto& [m, _] : rounds.front().recall_at)
      out += ",recall@" + std::to_string(m);
  out += ",wmse\n";
  char buf[64];
  for (const auto& report : rounds) {
    out += std::to_string(report.round);
    for (const auto& [_, value] : report.recall_at) {
      std::snprintf(buf, sizeof(buf), ",%.6f", value);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.6f", report.wmse);
    out += buf;
    out += "\n";
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  auto out = detail::open_out(path);
  out << text;
}

// Prepared-dataset text container: header, id tables, then one line per
// entry. Floats print with %.17g so a load reproduces the build exactly.
inline void save_dataset_tsv(const std::string& path, const RatingDataset& ds) {
  auto out = detail::open_out(path);
  out << "pecf-dataset 1\n"
      << "users " << ds.num_users << "\n"
      << "items " << ds.num_items << "\n"
      << "entries " << ds.entries.size() << "\n";
  for (const auto& id : ds.user_ids) out << "U " << id << "\n";
  for (const auto& id : ds.item_ids) out << "I " << id << "\n";
  char buf[96];
  for (const auto& obs : ds.entries) {
    std::snprintf(buf, sizeof(buf), "E %d %d %.17g %.17g %d\n", obs.user,
                  obs.item, obs.rating, obs.confidence,
                  static_cast<int>(obs.split));
    out << buf;
  }
}

inline RatingDataset load_dataset_tsv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string header;
  std::getline(in, header);
  if (header != "pecf-dataset 1")
    throw std::runtime_error("not a prepared dataset file: " + path);

  auto read_count = [&](const std::string& key) {
    std::string word;
    std::size_t value = 0;
    if (!(in >> word >> value) || word != key)
      throw std::runtime_error("malformed dataset file near '" + key + "'");
    return value;
  };
  RatingDataset ds;
  ds.num_users = static_cast<int>(read_count("users"));
  ds.num_items = static_cast<int>(read_count("items"));
  const std::size_t entries = read_count("entries");

  std::string tag, id;
  for (int u = 0; u < ds.num_users; ++u) {
    if (!(in >> tag >> id) || tag != "U")
      throw std::runtime_error("malformed user id table");
    ds.user_index.emplace(id, u);
    ds.user_ids.push_back(id);
  }
  for (int i = 0; i < ds.num_items; ++i) {
    if (!(in >> tag >> id) || tag != "I")
      throw std::runtime_error("malformed item id table");
    ds.item_index.emplace(id, i);
    ds.item_ids.push_back(id);
  }
  ds.entries.reserve(entries);
  for (std::size_t e = 0; e < entries; ++e) {
    Observation obs;
    int split_tag = 0;
    if (!(in >> tag >> obs.user >> obs.item >> obs.rating >> obs.confidence >>
          split_tag) ||
        tag != "E" || split_tag < 0 || split_tag > 2)
      throw std::runtime_error("malformed dataset entry " + std::to_string(e));
    obs.split = static_cast<Split>(split_tag);
    ds.entries.push_back(obs);
  }
  return ds;
}

}  // namespace pecf
