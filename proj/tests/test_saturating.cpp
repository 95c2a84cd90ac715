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
#include "pbcore/error.hpp"
#include "pbcore/saturating.hpp"

using namespace pbcore;

namespace {

// Each voter approves `approvals` distinct items drawn with popularity weights.
std::shared_ptr<const Instance> approval_instance(std::size_t n, std::size_t k,
                                                  std::size_t approvals, std::uint64_t seed,
                                                  double budget_share = 0.4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> weight(k);
  for (double& w : weight) w = 0.3 + unit(rng);
  std::vector<double> u(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto w = weight;
    for (std::size_t c = 0; c < approvals; ++c) {
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      const std::size_t j = pick(rng);
      u[i * k + j] = 1.0;
      w[j] = 0.0;
    }
  }
  std::vector<double> sizes(k);
  double total = 0.0;
  for (double& s : sizes) total += s = 0.5 + unit(rng);
  return std::make_shared<const Instance>(n, k, budget_share * total, u, sizes);
}

}  // namespace

TEST_CASE("smoothing relaxation") {
  auto inst = oracle::make(1, 1, 4.0, {1.0}, std::vector<double>{1.0});
  auto sat = UtilityModel::saturating(inst);
  for (double eps : {0.1, 0.5, 1.0}) {
    const auto g = smooth_relax(sat, eps);
    CHECK(g.item_value(0, 1.0) == doctest::Approx(1.0));
    // Differentiable at the knee.
    CHECK(g.item_derivative(0, 1.0 - 1e-9) == doctest::Approx(g.item_derivative(0, 1.0 + 1e-9)));
    CHECK(g.non_satiating());
  }
  CHECK(smooth_relax(sat, 0.5).item_value(0, 4.0) == doctest::Approx(3.0));
  CHECK(smoothing_alpha_bound(0.5, 4.0) == doctest::Approx(3.0));
  CHECK(smoothing_alpha_bound(0.25, 16.0) == doctest::Approx(5.0));
  // B/s = e^2 at eps = 1/2: 2e + 1 - 2.
  CHECK(smoothing_alpha_bound(0.5, std::exp(2.0)) == doctest::Approx(2.0 * std::exp(1.0) - 1.0));
  for (double eps : {0.05, 0.3, 1.0}) CHECK(smoothing_alpha_bound(eps, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(smoothing_alpha_bound(0.0, 2.0), Error);
  CHECK_THROWS_AS(smoothing_alpha_bound(1.5, 2.0), Error);
  CHECK_THROWS_AS(smooth_relax(UtilityModel::linear(inst), 0.5), Error);
}

TEST_CASE("smoothed solve") {
  auto one = UtilityModel::saturating(oracle::make(3, 1, 2.0, {1, 1, 1}, std::vector<double>{2.0}));
  const auto a = solve_smoothed(one, 0.3, SolverConfig::for_budget(2.0));
  CHECK(a.result.x.x[0] == doctest::Approx(2.0));
  CHECK(a.alpha_bound == doctest::Approx(1.0));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unit(0.2, 1.0);
  for (int t = 0; t < 10; ++t) {
    auto inst = oracle::make(6, 3, 1.5, oracle::random_utilities(6, 3, rng, 0.3),
                             std::vector<double>{unit(rng), unit(rng), unit(rng)});
    const auto sat = UtilityModel::saturating(inst);
    const auto cfg = SolverConfig::for_budget(1.5);
    const auto sol = solve_smoothed(sat, 0.4, cfg);
    CHECK(sol.result.converged);
    const auto r = lindahl_residuals(smooth_relax(sat, 0.4), sol.result.x.x);
    CHECK(kkt_violation(r, sol.result.x.x, 10.0 * cfg.z_floor) <= 1e-8);
  }
}

TEST_CASE("heuristic trivial cases") {
  auto sym = oracle::make(4, 2, 1.0, {1, 0, 1, 0, 0, 1, 0, 1}, std::vector<double>{0.5, 0.5});
  HeuristicConfig cfg;
  cfg.perturb_alpha = 0.0;
  auto r = heuristic_solve(*sym, cfg);
  CHECK(r.converged);
  CHECK(oracle::linf(r.x.x, {0.5, 0.5}) <= 1e-12);
  cfg.perturb_alpha.reset();
  r = heuristic_solve(*sym, cfg);
  CHECK(oracle::linf(r.x.x, {0.5, 0.5}) <= 1e-12);

  auto one = oracle::make(3, 1, 2.0, {1, 1, 1}, std::vector<double>{1.5});
  r = heuristic_solve(*one, HeuristicConfig{});
  CHECK(r.converged);
  CHECK(r.x.x[0] == 1.5);

  // Symmetric and tight: the equilibrium splits the budget.
  auto tight = oracle::make(4, 2, 1.0, {1, 0, 1, 0, 0, 1, 0, 1}, std::vector<double>{0.8, 0.8});
  cfg.perturb_alpha = 0.0;
  cfg.eps_target = 1e-9;
  r = heuristic_solve(*tight, cfg);
  CHECK(r.converged);
  CHECK(oracle::linf(r.x.x, {0.5, 0.5}) <= 1e-6);
}

TEST_CASE("heuristic config validation") {
  HeuristicConfig cfg;
  cfg.eps_target = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = HeuristicConfig{};
  cfg.perturb_alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = HeuristicConfig{};
  cfg.eps_target = 1e-12;
  CHECK_THROWS_AS(cfg.validate(), Error);
  auto no_sizes = oracle::make(1, 1, 1.0, {1.0});
  CHECK_THROWS_AS(heuristic_solve(*no_sizes, HeuristicConfig{}), Error);
}

TEST_CASE("heuristic on approval instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = approval_instance(200, 8, 4, seed);
    HeuristicConfig cfg;
    cfg.seed = seed;
    const auto r = heuristic_solve(*inst, cfg);
    REQUIRE(r.converged);
    CHECK(r.max_violation <= 1.0 / 200.0);
    // Complementarity.
    for (std::size_t j = 0; j < 8; ++j) {
      const double s = inst->size(j);
      CHECK(r.y[j] <= 1.0 / s);
      CHECK(r.x.x[j] >= 0.0);
      CHECK(r.x.x[j] <= s);
      if (r.x.x[j] < s) CHECK(std::abs(r.y[j] - 1.0 / s) <= 1e-10);
    }
    // The reported violation agrees with an independent recomputation.
    const auto v = saturating_violations(*inst, r.perturbed_utilities, r.x.x, r.y);
    CHECK(*std::max_element(v.begin(), v.end()) <= 1.0 / 200.0 + 1e-9);
    // Perturbation stays within its range.
    const double alpha = 1.0 / 64.0;
    for (std::size_t e = 0; e < r.perturbed_utilities.size(); ++e) {
      const double d = r.perturbed_utilities[e] - inst->utilities()[e];
      CHECK(d >= 0.0);
      CHECK(d <= alpha);
    }
    CHECK(!r.budget_flag);
    CHECK(r.trace.front().iteration == 0);
  }
}

TEST_CASE("heuristic is deterministic per seed") {
  auto inst = approval_instance(300, 10, 4, 9);
  HeuristicConfig cfg;
  cfg.seed = 42;
  const auto a = heuristic_solve(*inst, cfg);
  const auto b = heuristic_solve(*inst, cfg);
  CHECK(a.x.x == b.x.x);
  CHECK(a.y == b.y);
  CHECK(a.perturbed_utilities == b.perturbed_utilities);
  cfg.seed = 43;
  const auto c = heuristic_solve(*inst, cfg);
  CHECK(c.perturbed_utilities != a.perturbed_utilities);
}

TEST_CASE("heuristic matches proportional fairness when saturation never binds") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 5 + rng() % 20;
    const std::size_t k = 2 + rng() % 4;
    const double budget = 1.0;
    std::vector<double> sizes(k);
    for (double& s : sizes) s = budget * (1.0 + unit(rng));
    const auto u = oracle::random_utilities(n, k, rng);
    auto inst = oracle::make(n, k, budget, u, sizes);
    HeuristicConfig cfg;
    cfg.perturb_alpha = 0.0;
    cfg.eps_target = 1e-9;
    cfg.max_sweeps = 200000;
    const auto r = heuristic_solve(*inst, cfg);
    CHECK(r.converged);
    // Below saturation the utility is linear with weights u_ij / s_j.
    std::vector<double> scaled(u);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) scaled[i * k + j] /= sizes[j];
    }
    auto lin = UtilityModel::linear(oracle::make(n, k, budget, scaled));
    const auto pf = solve_proportional_fairness(lin, SolverConfig::for_budget(budget));
    CHECK(oracle::linf(r.x.x, pf.x.x) <= 1e-3);
  }
}
