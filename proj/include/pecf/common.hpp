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
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pecf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown when a configuration value violates its contract.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown on malformed input files; carries the offending line number.
struct ParseError : std::runtime_error {
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_number(line) {}
  std::size_t line_number;
};

// splitmix64 finalizer; used to derive independent per-stage seeds from one
// root seed so that individual pipeline stages stay decoupled.
inline std::uint64_t mix_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t salt) {
  return mix_seed(root ^ mix_seed(salt));
}

// Named seed streams for the experiment pipeline.
namespace seed_stream {
inline constexpr std::uint64_t split = 0x51ull;
inline constexpr std::uint64_t zeros = 0x52ull;
inline constexpr std::uint64_t init = 0x53ull;
inline constexpr std::uint64_t partition = 0x54ull;
}  // namespace seed_stream

}  // namespace pecf
