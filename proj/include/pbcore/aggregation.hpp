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

// Integral funding decisions from fractional solutions, similarity measures
// between schemes, and tests of the independent-voter explanation.

#ifndef PBCORE_AGGREGATION_HPP
#define PBCORE_AGGREGATION_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbcore/model.hpp"

namespace pbcore {

enum class Scheme { kCore, kWelfare };

const char* scheme_name(Scheme scheme) noexcept;

struct RankedScheme {
  Scheme scheme = Scheme::kWelfare;
  std::vector<std::size_t> order;
  // x_j / s_j for Core, votes / s_j for Welfare.
  std::vector<double> scores;
  Allocation fractional;
  Allocation integral;
};

// Items are ranked by descending score with ties going to the lower index.
// The integral set adds items in that order whenever they fit in what is
// left of the budget. Welfare's fractional allocation funds items fully in
// order and the first one that does not fit with the remainder; Core's is
// the supplied allocation.
RankedScheme rank_and_round(const Instance& instance, Scheme scheme,
                            const std::optional<Allocation>& fractional_core = std::nullopt);

// |A and B| / |A or B| over funded items; 1 when both are empty.
double jaccard(const Allocation& a, const Allocation& b);

// sum_j min(x_j, z_j) / budget.
double budget_similarity(std::span<const double> x, std::span<const double> z, double budget);

struct SimilarityReport {
  double jaccard = 0.0;
  double budget_similarity = 0.0;
};

SimilarityReport compare_schemes(const RankedScheme& a, const RankedScheme& b, double budget);

struct IndependenceConfig {
  // The textbook 2x2 test has one degree of freedom; two is kept as the
  // default to match the reference analysis.
  int dof = 2;
  double alpha = 0.1;
  std::size_t min_voters = 20;
};

struct Merge {
  // Leaves are 0..m-1 in the order of IndependenceReport::clustered; the
  // cluster formed by merge t gets id m + t.
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct IndependenceReport {
  std::size_t items = 0;
  // k*k row-major; the diagonal is 0 and degenerate pairs hold NaN.
  std::vector<double> statistic;
  std::vector<double> p_value;
  std::vector<bool> correlated;
  std::vector<bool> degenerate;
  // Items whose approval column is constant.
  std::vector<std::size_t> constant_items;
  // Items entering the clustering.
  std::vector<std::size_t> clustered;
  std::vector<Merge> dendrogram;
  bool small_sample = false;
  std::vector<std::string> warnings;

  double p(std::size_t a, std::size_t b) const { return p_value[a * items + b]; }
  bool is_correlated(std::size_t a, std::size_t b) const { return correlated[a * items + b]; }
};

// Approval means u_ij > 0.
IndependenceReport chi2_pairwise(const Instance& instance, const IndependenceConfig& config = {});

// Average-linkage agglomeration of a symmetric m*m distance matrix.
std::vector<Merge> average_linkage(std::span<const double> distance, std::size_t m);

struct RandomModelOutcome {
  bool precondition = false;
  double expected_welfare = 0.0;  // sum over S* of p_j u_j
  double precondition_threshold = 0.0;
  std::vector<std::size_t> welfare_set;
  bool deviation_found = false;
  std::vector<std::size_t> coalition;
  std::vector<std::size_t> deviation_items;
};

// Unit-cost items. Utility of agent i for a set S is sum over approved
// j in S of item_utility[j]. Checks the welfare-top-B set for a
// (1 + eps) integral deviation.
RandomModelOutcome welfare_set_deviation(const std::vector<std::vector<bool>>& approvals,
                                         std::span<const double> approval_prob,
                                         std::span<const double> item_utility, std::size_t budget,
                                         double eps);

// Draws n voters with independent Bernoulli(p_j) approvals, then runs
// welfare_set_deviation.
RandomModelOutcome random_model_trial(std::span<const double> approval_prob,
                                      std::span<const double> item_utility, std::size_t budget,
                                      std::size_t agents, double eps, std::uint64_t seed);

}  // namespace pbcore

#endif  // PBCORE_AGGREGATION_HPP
