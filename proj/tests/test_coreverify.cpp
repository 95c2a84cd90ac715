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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pbcore/coreverify.hpp"
#include "pbcore/error.hpp"
#include "pbcore/lindahl.hpp"
#include "pbcore/saturating.hpp"

using namespace pbcore;

namespace {

// Explicit enumeration of every coalition and every grid point on its
// budget face. Returns the best min-gain over blocking pairs, or -inf.
double brute_force_best_gain(const UtilityModel& model, const std::vector<double>& x,
                             std::size_t steps, double threshold, double reduction = 0.0) {
  const auto& inst = model.instance();
  const std::size_t n = inst.agents();
  const std::size_t k = inst.items();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> now(n);
  for (std::size_t i = 0; i < n; ++i) now[i] = evaluate_utility(model, i, x);
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    const auto size = static_cast<double>(__builtin_popcountll(mask));
    const double b = (size / static_cast<double>(n) - reduction) * inst.budget();
    if (!(b > 0.0)) continue;
    std::vector<double> y(k);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t j, std::size_t left) {
      if (j + 1 == k) {
        y[j] = b * static_cast<double>(left) / static_cast<double>(steps);
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
          if (mask >> i & 1U) worst = std::min(worst, evaluate_utility(model, i, y) - now[i]);
        }
        if (worst > threshold) best = std::max(best, worst);
        return;
      }
      for (std::size_t v = 0; v <= left; ++v) {
        y[j] = b * static_cast<double>(v) / static_cast<double>(steps);
        rec(j + 1, left - v);
      }
    };
    rec(0, steps);
  }
  return best;
}

std::shared_ptr<const Instance> figure1a(std::size_t n) {
  const std::size_t majority = (n + 1) / 2 + 1;
  std::vector<double> u(n * 2, 0.0);
  for (std::size_t i = 0; i < n; ++i) u[i * 2 + (i < majority ? 0 : 1)] = 1.0;
  return oracle::make(n, 2, 1.0, u);
}

}  // namespace

TEST_CASE("residual certificates") {
  auto fig1c = UtilityModel::linear(oracle::disjoint_groups({4, 1}, 1.0));
  const auto pf = solve_proportional_fairness(fig1c, SolverConfig::for_budget(1.0));
  const auto cert = certify_from_residual(fig1c, pf.x.x);
  CHECK(cert.epsilon <= 1e-8);
  CHECK(cert.spend <= cert.spend_bound + 1e-12);
  CHECK(cert.guarantee.find("coalition") != std::string::npos);

  auto sym = UtilityModel::linear(oracle::disjoint_groups({2, 2}, 1.0));
  CHECK(certify_from_residual(sym, std::vector<double>{0.5, 0.5}).epsilon == 0.0);
  CHECK_THROWS_AS(certify_from_residual(fig1c, std::vector<double>{1.0, 0.0}), DegenerateAgentError);
}

TEST_CASE("continuous oracle examples") {
  auto fig1a = UtilityModel::linear(figure1a(10));
  const auto pf = solve_proportional_fairness(fig1a, SolverConfig::for_budget(1.0));
  ContinuousSearch search;
  search.grid_steps = 100;
  CHECK(!find_deviation_continuous(fig1a, pf.x.x, search).has_value());

  const auto dev = find_deviation_continuous(fig1a, std::vector<double>{1.0, 0.0}, search);
  REQUIRE(dev.has_value());
  CHECK(dev->coalition == std::vector<std::size_t>{6, 7, 8, 9});
  CHECK(oracle::linf(dev->y.x, {0.0, 0.4}) <= 1e-12);
  CHECK(dev->min_gain == doctest::Approx(0.4));
}

TEST_CASE("sharing incentive at solver outputs") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    auto inst = oracle::make(5, 3, 1.0, oracle::random_utilities(5, 3, rng, 0.3));
    const auto model = UtilityModel::power_sum(inst, {0.6, 0.8, 1.0});
    const auto r = solve_potential(model, SolverConfig::for_budget(1.0));
    for (std::size_t i = 0; i < 5; ++i) {
      double best = 0.0;
      for (int a = 0; a <= 200; ++a) {
        for (int b = 0; a + b <= 200; ++b) {
          const std::vector<double> y{a / 1000.0, b / 1000.0, (200 - a - b) / 1000.0};
          best = std::max(best, evaluate_utility(model, i, y));
        }
      }
      CHECK(evaluate_utility(model, i, r.x.x) >= best - 1e-3);
    }
  }
}

TEST_CASE("oracle agrees with explicit coalition enumeration") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + rng() % 5;
    const std::size_t k = 2 + rng() % 2;
    auto inst = oracle::make(n, k, 1.0, oracle::random_utilities(n, k, rng));
    std::vector<double> x(k);
    double s = 0.0;
    for (double& v : x) s += v = unit(rng);
    for (double& v : x) v /= s;
    std::vector<double> alpha(k, 0.7);
    for (const auto& model : {UtilityModel::linear(inst), UtilityModel::power_sum(inst, alpha),
                              UtilityModel::cobb_douglas(inst)}) {
      ContinuousSearch search;
      search.grid_steps = 24;
      const double expect = brute_force_best_gain(model, x, 24, 1e-3);
      const auto got = find_deviation_continuous(model, x, search);
      CHECK(got.has_value() == std::isfinite(expect));
      if (got) {
        CHECK(got->min_gain == doctest::Approx(expect).epsilon(1e-9));
        // The reported deviation is valid on its own terms.
        double cost = 0.0;
        for (double v : got->y.x) cost += v;
        CHECK(cost <= static_cast<double>(got->coalition.size()) / static_cast<double>(n) + 1e-12);
        for (std::size_t i : got->coalition) {
          CHECK(evaluate_utility(model, i, got->y.x) - evaluate_utility(model, i, x) > 1e-3);
        }
      }
    }
  }
}

TEST_CASE("certificate soundness against the reduced-budget oracle") {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + rng() % 5;
    const std::size_t k = 2 + rng() % 2;
    auto inst = oracle::make(n, k, 1.0, oracle::random_utilities(n, k, rng));
    const auto model = UtilityModel::linear(inst);
    // A perturbed solver output: an approximate equilibrium.
    auto x = solve_proportional_fairness(model, SolverConfig::for_budget(1.0)).x.x;
    for (double& v : x) v = std::max(1e-3, v * (1.0 + 0.2 * (unit(rng) - 0.5)));
    const auto cert = certify_from_residual(model, x);
    if (cert.epsilon >= 1.0) continue;
    ContinuousSearch search;
    search.grid_steps = 60;
    search.threshold = 0.0;
    search.budget_reduction = cert.epsilon;
    CHECK(!find_deviation_continuous(model, x, search).has_value());
  }
}

TEST_CASE("oracle symmetry under permutation") {
  auto fig1a = figure1a(7);
  std::vector<double> u(fig1a->utilities().begin(), fig1a->utilities().end());
  // Swap the two items.
  std::vector<double> swapped(u.size());
  for (std::size_t i = 0; i < 7; ++i) {
    swapped[i * 2] = u[i * 2 + 1];
    swapped[i * 2 + 1] = u[i * 2];
  }
  auto a = UtilityModel::linear(fig1a);
  auto b = UtilityModel::linear(oracle::make(7, 2, 1.0, swapped));
  ContinuousSearch search;
  search.grid_steps = 50;
  const auto da = find_deviation_continuous(a, std::vector<double>{1.0, 0.0}, search);
  const auto db = find_deviation_continuous(b, std::vector<double>{0.0, 1.0}, search);
  REQUIRE(da.has_value());
  REQUIRE(db.has_value());
  CHECK(da->coalition == db->coalition);
  CHECK(da->y.x[0] == db->y.x[1]);
  CHECK(da->min_gain == db->min_gain);
}

TEST_CASE("grid refinement keeps deviations") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    auto inst = oracle::make(5, 3, 1.0, oracle::random_utilities(5, 3, rng, 0.4));
    const auto model = UtilityModel::linear(inst);
    const std::vector<double> x{0.7, 0.2, 0.1};
    ContinuousSearch coarse;
    coarse.grid_steps = 20;
    ContinuousSearch fine = coarse;
    fine.grid_steps = 40;
    if (find_deviation_continuous(model, x, coarse)) {
      CHECK(find_deviation_continuous(model, x, fine).has_value());
    }
  }
}

TEST_CASE("oracle size guards") {
  auto big = oracle::make(13, 2, 1.0, std::vector<double>(26, 1.0));
  std::vector<double> alpha{0.5, 0.5};
  CHECK_THROWS_AS(find_deviation_continuous(UtilityModel::power_sum(big, alpha),
                                            std::vector<double>{0.5, 0.5}),
                  Error);
  CHECK_NOTHROW(find_deviation_continuous(UtilityModel::linear(big), std::vector<double>{0.5, 0.5}));
  auto wide = oracle::make(1, 5, 1.0, std::vector<double>(5, 1.0));
  CHECK_THROWS_AS(find_deviation_continuous(UtilityModel::linear(wide), std::vector<double>(5, 0.2)),
                  Error);
}

TEST_CASE("multiplicative mode") {
  auto fig1c = UtilityModel::linear(oracle::disjoint_groups({4, 1}, 1.0));
  ContinuousSearch search;
  search.mode = GainMode::kMultiplicative;
  search.threshold = 1.0;
  search.grid_steps = 100;
  // The lone voter gets 0.1 but could buy 0.2 alone: ratio 2.
  auto dev = find_deviation_continuous(fig1c, std::vector<double>{0.9, 0.1}, search);
  REQUIRE(dev.has_value());
  CHECK(dev->min_gain == doctest::Approx(2.0));
  search.threshold = 2.5;
  CHECK(!find_deviation_continuous(fig1c, std::vector<double>{0.9, 0.1}, search).has_value());
}

TEST_CASE("integral oracle examples") {
  auto inst = oracle::make(4, 2, 1.0, {1, 0, 1, 0, 0, 1, 0, 1}, std::vector<double>{0.5, 0.5});
  CHECK(!find_deviation_integral(*inst, std::vector<double>{0.5, 0.5}, 0.0).has_value());

  auto dev = find_deviation_integral(*inst, std::vector<double>{0.5, 0.0}, 0.0);
  REQUIRE(dev.has_value());
  CHECK(dev->coalition == std::vector<std::size_t>{2, 3});
  CHECK(dev->y.x == std::vector<double>{0.0, 0.5});

  const std::vector<double> partial{0.5, 0.25};
  CHECK(find_deviation_integral(*inst, partial, 0.9).has_value());
  CHECK(!find_deviation_integral(*inst, partial, 1.1).has_value());

  auto wide = oracle::make(1, 13, 13.0, std::vector<double>(13, 1.0), std::vector<double>(13, 1.0));
  CHECK_THROWS_AS(find_deviation_integral(*wide, std::vector<double>(13, 1.0), 0.0), Error);
}

TEST_CASE("converged heuristic output resists small coalitions") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 6;
    const std::size_t k = 3;
    std::vector<double> u(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      u[i * k + rng() % k] = 1.0;
      u[i * k + rng() % k] = 1.0;
    }
    for (std::size_t j = 0; j < k; ++j) u[j * k + j] = 1.0;
    std::vector<double> sizes{0.3 + unit(rng), 0.3 + unit(rng), 0.3 + unit(rng)};
    auto inst = oracle::make(n, k, 0.6 * (sizes[0] + sizes[1] + sizes[2]), u, sizes);
    HeuristicConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto r = heuristic_solve(*inst, cfg);
    REQUIRE(r.converged);
    REQUIRE(r.max_violation < 1.0);
    auto perturbed = std::make_shared<const Instance>(inst->with_utilities(r.perturbed_utilities));
    ContinuousSearch search;
    search.grid_steps = 60;
    search.threshold = 0.0;
    search.budget_reduction = r.max_violation;
    CHECK(!find_deviation_continuous(UtilityModel::saturating(perturbed), r.x.x, search).has_value());
  }
}
