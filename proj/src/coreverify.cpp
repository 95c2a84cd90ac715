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

#include "pbcore/coreverify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "pbcore/error.hpp"
#include "pbcore/lindahl.hpp"

namespace pbcore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::size_t kMaxItems = 4;
constexpr std::size_t kMaxAgents = 12;
constexpr std::size_t kMaxAgentsHomogeneous = 2000;
constexpr std::size_t kMaxIntegralItems = 12;

// Calls visit(t) for every t in N^k with sum t = total.
void for_each_composition(std::size_t k, std::size_t total,
                          const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> t(k, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t j, std::size_t left) {
    if (j + 1 == k) {
      t[j] = left;
      visit(t);
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      t[j] = v;
      rec(j + 1, left - v);
    }
  };
  rec(0, total);
}

double gain_of(GainMode mode, double now, double then) {
  if (mode == GainMode::kAdditive) return then - now;
  return now > 0.0 ? then / now : (then > 0.0 ? kInf : 0.0);
}

struct Best {
  double min_gain = -kInf;
  std::size_t size = 0;
  std::vector<double> y;
  std::vector<double> gains;
};

// Among agents, the best coalition of exactly `size` members is the top
// `size` gains; it blocks iff its smallest gain beats the threshold.
void consider(const std::vector<double>& gains, std::size_t size, const std::vector<double>& y,
              const ContinuousSearch& search, std::vector<double>& scratch, Best& best) {
  scratch = gains;
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(size - 1),
                   scratch.end(), std::greater<>());
  const double kth = scratch[size - 1];
  if (!(kth > search.threshold)) return;
  if (kth > best.min_gain) {
    best.min_gain = kth;
    best.size = size;
    best.y = y;
    best.gains = gains;
  }
}

std::optional<Deviation> materialise(const Best& best, GainMode mode) {
  if (best.size == 0) return std::nullopt;
  std::vector<std::size_t> order(best.gains.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return best.gains[a] > best.gains[b]; });
  Deviation d;
  d.coalition.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best.size));
  std::sort(d.coalition.begin(), d.coalition.end());
  d.y.x = best.y;
  d.min_gain = best.min_gain;
  d.mode = mode;
  return d;
}

}  // namespace

CoreCertificate certify_from_residual(const UtilityModel& model, std::span<const double> x,
                                      double funded_threshold) {
  const auto r = lindahl_residuals(model, x);
  CoreCertificate c;
  c.epsilon = kkt_violation(r, x, funded_threshold);
  c.spend = std::accumulate(x.begin(), x.end(), 0.0);
  const double budget = model.instance().budget();
  c.spend_bound = c.epsilon < 1.0 ? budget / (1.0 - c.epsilon) : kInf;
  c.budget_slack = c.spend_bound - c.spend;
  std::ostringstream text;
  text << "spend " << c.spend << " <= B/(1-eps) = " << c.spend_bound
       << "; no coalition S can make all members strictly better off using budget (|S|/n - "
       << c.epsilon << ") B";
  c.guarantee = text.str();
  return c;
}

std::optional<Deviation> find_deviation_continuous(const UtilityModel& model,
                                                   std::span<const double> x,
                                                   const ContinuousSearch& search) {
  const Instance& inst = model.instance();
  const std::size_t n = inst.agents();
  const std::size_t k = inst.items();
  require(x.size() == k, ErrorCode::kDimensionMismatch,
          "allocation length must equal the item count");
  require(search.grid_steps >= 1, ErrorCode::kInvalidArgument, "grid_steps must be positive");
  require(k <= kMaxItems, ErrorCode::kTooLarge, "continuous core search supports at most 4 items");
  require(n <= (model.homogeneous() ? kMaxAgentsHomogeneous : kMaxAgents), ErrorCode::kTooLarge,
          "too many agents for exhaustive core search");

  std::vector<double> now(n);
  for (std::size_t i = 0; i < n; ++i) now[i] = evaluate_utility(model, i, x);
  const double budget = inst.budget();
  const double steps = static_cast<double>(search.grid_steps);
  auto coalition_budget = [&](std::size_t size) {
    return (static_cast<double>(size) / static_cast<double>(n) - search.budget_reduction) * budget;
  };

  Best best;
  std::vector<double> gains(n);
  std::vector<double> scratch;
  std::vector<double> y(k);

  // Nondecreasing utilities: a blocking y can always be pushed out to spend
  // the full coalition budget, so only that face is searched.
  if (model.homogeneous()) {
    // U_i(b t) = b U_i(t). Agent i gains enough at coalition size s iff
    // s exceeds a per-agent threshold, so blocking at size s needs s agents
    // with threshold below s.
    std::vector<double> unit_value(n);
    std::vector<double> need(n);
    for_each_composition(k, search.grid_steps, [&](const std::vector<std::size_t>& t) {
      for (std::size_t j = 0; j < k; ++j) y[j] = static_cast<double>(t[j]) / steps;
      for (std::size_t i = 0; i < n; ++i) {
        unit_value[i] = evaluate_utility(model, i, y);
        const double target = search.mode == GainMode::kAdditive ? now[i] + search.threshold
                                                                  : search.threshold * now[i];
        // Smallest spend b with b * unit_value > target, in coalition-size units.
        need[i] = unit_value[i] > 0.0
                      ? static_cast<double>(n) * (target / (budget * unit_value[i]) +
                                                  search.budget_reduction)
                      : kInf;
      }
      std::vector<double> sorted = need;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t s = 1; s <= n; ++s) {
        if (!(sorted[s - 1] < static_cast<double>(s))) continue;
        const double b = coalition_budget(s);
        if (!(b > 0.0)) continue;
        std::vector<double> ys(k);
        for (std::size_t j = 0; j < k; ++j) ys[j] = b * y[j];
        for (std::size_t i = 0; i < n; ++i) gains[i] = gain_of(search.mode, now[i], b * unit_value[i]);
        consider(gains, s, ys, search, scratch, best);
      }
    });
    return materialise(best, search.mode);
  }

  for (std::size_t s = 1; s <= n; ++s) {
    const double b = coalition_budget(s);
    if (!(b > 0.0)) continue;
    for_each_composition(k, search.grid_steps, [&](const std::vector<std::size_t>& t) {
      for (std::size_t j = 0; j < k; ++j) y[j] = b * static_cast<double>(t[j]) / steps;
      for (std::size_t i = 0; i < n; ++i) {
        gains[i] = gain_of(search.mode, now[i], evaluate_utility(model, i, y));
      }
      consider(gains, s, y, search, scratch, best);
    });
  }
  return materialise(best, search.mode);
}

std::optional<Deviation> find_deviation_integral(const Instance& instance,
                                                 std::span<const double> x,
                                                 double epsilon_mult) {
  const std::size_t n = instance.agents();
  const std::size_t k = instance.items();
  require(instance.has_sizes(), ErrorCode::kInvalidArgument, "integral search needs item sizes");
  require(x.size() == k, ErrorCode::kDimensionMismatch,
          "allocation length must equal the item count");
  require(k <= kMaxIntegralItems, ErrorCode::kTooLarge,
          "integral core search supports at most 12 items");
  require(epsilon_mult >= 0.0, ErrorCode::kInvalidArgument, "epsilon must be nonnegative");
  const auto sizes = instance.sizes();

  std::vector<double> now(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      now[i] += instance.utility(i, j) * std::min(x[j] / sizes[j], 1.0);
    }
  }

  std::optional<Deviation> best;
  const double per_agent = instance.budget() / static_cast<double>(n);
  for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
    double cost = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (mask >> j & 1U) cost += sizes[j];
    }
    if (cost > instance.budget()) continue;
    // The largest possible coalition is everyone who strictly gains.
    std::vector<std::size_t> members;
    double min_ratio = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      double then = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (mask >> j & 1U) then += instance.utility(i, j);
      }
      if (then > (1.0 + epsilon_mult) * now[i]) {
        members.push_back(i);
        min_ratio = std::min(min_ratio, now[i] > 0.0 ? then / now[i] : kInf);
      }
    }
    if (members.empty() || static_cast<double>(members.size()) * per_agent < cost) continue;
    if (!best || min_ratio > best->min_gain) {
      Deviation d;
      d.coalition = std::move(members);
      d.y.kind = AllocationKind::kIntegral;
      d.y.x.assign(k, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        if (mask >> j & 1U) d.y.x[j] = sizes[j];
      }
      d.min_gain = min_ratio;
      d.mode = GainMode::kMultiplicative;
      best = std::move(d);
    }
  }
  return best;
}

}  // namespace pbcore
