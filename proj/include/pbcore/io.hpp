// Copyright 2026 The pbcore Authors
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

// Vote files, money handling and synthetic elections.

#ifndef PBCORE_IO_HPP
#define PBCORE_IO_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbcore/model.hpp"

namespace pbcore {

struct VoteMatrix {
  std::vector<std::string> voter_ids;
  std::vector<std::string> items;
  std::vector<double> cells;  // voters*items row-major

  std::size_t voters() const noexcept { return voter_ids.size(); }
};

// Header "voter_id,<item>,..." then one row per voter. Errors name the
// 1-based line and column.
VoteMatrix parse_votes(std::string_view csv);
VoteMatrix read_votes(const std::string& path);
std::string format_votes(const VoteMatrix& votes);

// Money is carried as integer cents across file boundaries.
std::int64_t to_cents(double amount);
double from_cents(std::int64_t cents) noexcept;

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
std::string sha256_hex(std::string_view data);

struct SyntheticParams {
  std::string profile;
  std::size_t agents = 100;
  std::size_t items = 5;
  std::uint64_t seed = 0;
  double p = 0.5;  // approval probability for the random profiles
};

struct SyntheticElection {
  VoteMatrix votes;
  std::int64_t budget_cents = 0;
  std::vector<std::int64_t> size_cents;
  std::string family;  // suggested utility family
  Instance instance() const;
};

// Profiles: disjoint-groups, independent-bernoulli, block-correlated,
// figure1a, figure1b, figure1c, figure2a, figure2b, boston-marginal.
SyntheticElection gen_synthetic(const SyntheticParams& params);

const std::vector<std::string>& synthetic_profiles();

}  // namespace pbcore

#endif  // PBCORE_IO_HPP
