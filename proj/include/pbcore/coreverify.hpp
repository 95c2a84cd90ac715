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

// Core membership: certificates from equilibrium residuals and brute-force
// searches for a blocking coalition.
//
// A coalition S blocks x if some y costing at most (|S|/n) B makes every
// member strictly better off. The searches below are exhaustive over a
// grid and meant for small instances only.

#ifndef PBCORE_COREVERIFY_HPP
#define PBCORE_COREVERIFY_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbcore/model.hpp"

namespace pbcore {

struct CoreCertificate {
  // Largest equilibrium violation: |r_j| on funded items, max(0, r_j) else.
  double epsilon = 0.0;
  double spend = 0.0;
  // B / (1 - epsilon); infinite once epsilon >= 1.
  double spend_bound = 0.0;
  double budget_slack = 0.0;  // spend_bound - spend
  // Each coalition S cannot block using budget (|S|/n - epsilon) B.
  std::string guarantee;
};

// Items at or below funded_threshold count as unfunded.
CoreCertificate certify_from_residual(const UtilityModel& model, std::span<const double> x,
                                      double funded_threshold = 0.0);

enum class GainMode { kAdditive, kMultiplicative };

struct Deviation {
  std::vector<std::size_t> coalition;
  Allocation y;
  // min over the coalition of U_i(y) - U_i(x), or U_i(y) / U_i(x).
  double min_gain = 0.0;
  GainMode mode = GainMode::kAdditive;
};

struct ContinuousSearch {
  std::size_t grid_steps = 200;
  GainMode mode = GainMode::kAdditive;
  // Additive: gain must exceed threshold. Multiplicative: U_i(y) must exceed
  // threshold * U_i(x).
  double threshold = 1e-3;
  // Coalition budgets become (|S|/n - budget_reduction) B.
  double budget_reduction = 0.0;
};

// Exhaustive for n <= 12 and k <= 4. Linear and Cobb-Douglas utilities scale
// with the budget, which collapses the coalition search to a sort per grid
// direction; those are accepted up to n = 2000.
std::optional<Deviation> find_deviation_continuous(const UtilityModel& model,
                                                   std::span<const double> x,
                                                   const ContinuousSearch& search = {});

// Integral deviations for saturating utilities: an item set T with cost at
// most (|S|/n) B such that every member of S gets U_i(T) > (1 + eps) U_i(x).
// k <= 12.
std::optional<Deviation> find_deviation_integral(const Instance& instance,
                                                 std::span<const double> x,
                                                 double epsilon_mult);

}  // namespace pbcore

#endif  // PBCORE_COREVERIFY_HPP
