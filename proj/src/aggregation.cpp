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

#include "pbcore/aggregation.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pbcore/coreverify.hpp"
#include "pbcore/error.hpp"

namespace pbcore {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<bool> funded(const Allocation& a) {
  std::vector<bool> out(a.x.size());
  for (std::size_t j = 0; j < a.x.size(); ++j) out[j] = a.x[j] > 0.0;
  return out;
}

}  // namespace

const char* scheme_name(Scheme scheme) noexcept {
  return scheme == Scheme::kCore ? "core" : "welfare";
}

RankedScheme rank_and_round(const Instance& instance, Scheme scheme,
                            const std::optional<Allocation>& fractional_core) {
  require(instance.has_sizes(), ErrorCode::kInvalidArgument, "ranking needs item sizes");
  const std::size_t k = instance.items();
  const auto sizes = instance.sizes();
  const double budget = instance.budget();

  RankedScheme out;
  out.scheme = scheme;
  out.scores.resize(k);
  if (scheme == Scheme::kCore) {
    require(fractional_core.has_value(), ErrorCode::kInvalidArgument,
            "core ranking needs the fractional core allocation");
    require(fractional_core->x.size() == k, ErrorCode::kDimensionMismatch,
            "core allocation length must equal the item count");
    for (std::size_t j = 0; j < k; ++j) out.scores[j] = fractional_core->x[j] / sizes[j];
  } else {
    for (std::size_t j = 0; j < k; ++j) {
      out.scores[j] = static_cast<double>(instance.votes(j)) / sizes[j];
    }
  }
  out.order = descending(out.scores);

  out.integral.kind = AllocationKind::kIntegral;
  out.integral.x.assign(k, 0.0);
  double spent = 0.0;
  for (std::size_t j : out.order) {
    if (spent + sizes[j] <= budget) {
      out.integral.x[j] = sizes[j];
      spent += sizes[j];
    }
  }

  if (scheme == Scheme::kCore) {
    out.fractional = *fractional_core;
    out.fractional.kind = AllocationKind::kFractional;
  } else {
    out.fractional.x.assign(k, 0.0);
    double used = 0.0;
    for (std::size_t j : out.order) {
      if (used + sizes[j] <= budget) {
        out.fractional.x[j] = sizes[j];
        used += sizes[j];
      } else {
        out.fractional.x[j] = std::max(0.0, budget - used);
        break;
      }
    }
  }
  return out;
}

double jaccard(const Allocation& a, const Allocation& b) {
  require(a.x.size() == b.x.size(), ErrorCode::kDimensionMismatch,
          "allocations cover different item sets");
  const auto fa = funded(a), fb = funded(b);
  std::size_t both = 0, either = 0;
  for (std::size_t j = 0; j < fa.size(); ++j) {
    both += fa[j] && fb[j];
    either += fa[j] || fb[j];
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

double budget_similarity(std::span<const double> x, std::span<const double> z, double budget) {
  require(x.size() == z.size(), ErrorCode::kDimensionMismatch,
          "allocations cover different item sets");
  require(budget > 0.0, ErrorCode::kInvalidArgument, "budget must be positive");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += std::min(x[j], z[j]);
  return s / budget;
}

SimilarityReport compare_schemes(const RankedScheme& a, const RankedScheme& b, double budget) {
  return {jaccard(a.integral, b.integral),
          budget_similarity(a.fractional.x, b.fractional.x, budget)};
}

std::vector<Merge> average_linkage(std::span<const double> distance, std::size_t m) {
  require(distance.size() == m * m, ErrorCode::kDimensionMismatch,
          "distance matrix must be m by m");
  struct Cluster {
    std::size_t id;
    std::vector<std::size_t> leaves;
  };
  std::vector<Cluster> active;
  for (std::size_t i = 0; i < m; ++i) active.push_back({i, {i}});
  auto link = [&](const Cluster& p, const Cluster& q) {
    double s = 0.0;
    for (std::size_t a : p.leaves) {
      for (std::size_t b : q.leaves) s += distance[a * m + b];
    }
    return s / static_cast<double>(p.leaves.size() * q.leaves.size());
  };

  std::vector<Merge> merges;
  std::size_t next_id = m;
  while (active.size() > 1) {
    std::size_t best_p = 0, best_q = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < active.size(); ++p) {
      for (std::size_t q = p + 1; q < active.size(); ++q) {
        const double d = link(active[p], active[q]);
        if (d < best) {
          best = d;
          best_p = p;
          best_q = q;
        }
      }
    }
    Cluster joined{next_id++, active[best_p].leaves};
    joined.leaves.insert(joined.leaves.end(), active[best_q].leaves.begin(),
                         active[best_q].leaves.end());
    merges.push_back({std::min(active[best_p].id, active[best_q].id),
                      std::max(active[best_p].id, active[best_q].id), best,
                      joined.leaves.size()});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_q));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_p));
    active.push_back(std::move(joined));
  }
  return merges;
}

IndependenceReport chi2_pairwise(const Instance& instance, const IndependenceConfig& config) {
  require(config.dof >= 1, ErrorCode::kInvalidArgument, "degrees of freedom must be positive");
  require(config.alpha > 0.0 && config.alpha < 1.0, ErrorCode::kInvalidArgument,
          "significance level must lie in (0, 1)");
  const std::size_t n = instance.agents(), k = instance.items();
  IndependenceReport r;
  r.items = k;
  r.statistic.assign(k * k, 0.0);
  r.p_value.assign(k * k, 0.0);
  r.correlated.assign(k * k, false);
  r.degenerate.assign(k * k, false);

  std::vector<std::size_t> ones(k, 0);
  for (std::size_t j = 0; j < k; ++j) ones[j] = instance.votes(j);
  std::vector<bool> constant(k);
  for (std::size_t j = 0; j < k; ++j) {
    constant[j] = ones[j] == 0 || ones[j] == n;
    if (constant[j]) {
      r.constant_items.push_back(j);
      r.warnings.push_back("item " + instance.item_names()[j] +
                           " has a constant approval column and is left out of clustering");
    } else {
      r.clustered.push_back(j);
    }
  }
  if (n < config.min_voters) {
    r.small_sample = true;
    r.warnings.push_back("fewer voters than the chi-square approximation needs");
  }

  const double half_dof = 0.5 * static_cast<double>(config.dof);
  const double nd = static_cast<double>(n);
  for (std::size_t a = 0; a < k; ++a) {
    r.correlated[a * k + a] = true;
    for (std::size_t b = a + 1; b < k; ++b) {
      double stat = kNaN, p = kNaN;
      const bool degenerate = constant[a] || constant[b];
      if (!degenerate) {
        std::size_t both = 0;
        for (std::size_t i = 0; i < n; ++i) {
          both += instance.utility(i, a) > 0.0 && instance.utility(i, b) > 0.0;
        }
        const double n11 = static_cast<double>(both);
        const double n10 = static_cast<double>(ones[a]) - n11;
        const double n01 = static_cast<double>(ones[b]) - n11;
        const double n00 = nd - n11 - n10 - n01;
        const double cross = n11 * n00 - n10 * n01;
        const double margins = static_cast<double>(ones[a]) * (nd - static_cast<double>(ones[a])) *
                               static_cast<double>(ones[b]) * (nd - static_cast<double>(ones[b]));
        stat = nd * cross * cross / margins;
        p = boost::math::gamma_q(half_dof, 0.5 * stat);
      }
      for (auto [s, t] : {std::pair{a, b}, std::pair{b, a}}) {
        r.statistic[s * k + t] = stat;
        r.p_value[s * k + t] = p;
        r.degenerate[s * k + t] = degenerate;
        r.correlated[s * k + t] = !degenerate && p < config.alpha;
      }
    }
  }

  const std::size_t m = r.clustered.size();
  std::vector<double> distance(m * m, 0.0);
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t t = 0; t < m; ++t) {
      if (s != t) distance[s * m + t] = r.is_correlated(r.clustered[s], r.clustered[t]) ? 0.0 : 1.0;
    }
  }
  if (m > 1) r.dendrogram = average_linkage(distance, m);
  return r;
}

RandomModelOutcome welfare_set_deviation(const std::vector<std::vector<bool>>& approvals,
                                         std::span<const double> approval_prob,
                                         std::span<const double> item_utility, std::size_t budget,
                                         double eps) {
  const std::size_t k = item_utility.size();
  const std::size_t n = approvals.size();
  require(approval_prob.size() == k, ErrorCode::kDimensionMismatch,
          "approval probabilities and utilities differ in length");
  require(n > 0 && k > 0, ErrorCode::kInvalidArgument, "empty instance");
  require(budget >= 1 && budget <= k, ErrorCode::kInvalidArgument,
          "budget must be between one item and every item");
  require(eps >= 0.0, ErrorCode::kInvalidArgument, "epsilon must be nonnegative");

  std::vector<double> expected(k);
  for (std::size_t j = 0; j < k; ++j) expected[j] = approval_prob[j] * item_utility[j];
  const auto order = descending(expected);

  RandomModelOutcome out;
  out.welfare_set.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(budget));
  std::sort(out.welfare_set.begin(), out.welfare_set.end());
  for (std::size_t j : out.welfare_set) out.expected_welfare += expected[j];
  const double b = static_cast<double>(budget);
  out.precondition_threshold = eps > 0.0 ? std::sqrt(b * std::log(b)) / eps
                                         : std::numeric_limits<double>::infinity();
  out.precondition = out.expected_welfare > out.precondition_threshold;

  std::vector<double> u(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    require(approvals[i].size() == k, ErrorCode::kDimensionMismatch,
            "approval row length differs from the item count");
    for (std::size_t j = 0; j < k; ++j) u[i * k + j] = approvals[i][j] ? item_utility[j] : 0.0;
  }
  const Instance inst(n, k, b, std::move(u), std::vector<double>(k, 1.0), {},
                      Instance::ZeroRows::kAllow);
  std::vector<double> x(k, 0.0);
  for (std::size_t j : out.welfare_set) x[j] = 1.0;
  if (const auto d = find_deviation_integral(inst, x, eps)) {
    out.deviation_found = true;
    out.coalition = d->coalition;
    for (std::size_t j = 0; j < k; ++j) {
      if (d->y.x[j] > 0.0) out.deviation_items.push_back(j);
    }
  }
  return out;
}

RandomModelOutcome random_model_trial(std::span<const double> approval_prob,
                                      std::span<const double> item_utility, std::size_t budget,
                                      std::size_t agents, double eps, std::uint64_t seed) {
  for (double p : approval_prob) {
    require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument,
            "approval probabilities must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  std::vector<std::vector<bool>> approvals(agents, std::vector<bool>(approval_prob.size()));
  for (auto& row : approvals) {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = unit(rng) < approval_prob[j];
  }
  return welfare_set_deviation(approvals, approval_prob, item_utility, budget, eps);
}

}  // namespace pbcore
