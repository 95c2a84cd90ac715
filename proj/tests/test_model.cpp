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
#include "pbcore/model.hpp"

using namespace pbcore;

namespace {

std::vector<UtilityModel> every_family(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> sizes(k);
  for (double& s : sizes) s = 0.2 + unit(rng);
  auto inst = std::make_shared<const Instance>(n, k, 2.0, oracle::random_utilities(n, k, rng),
                                               sizes);
  std::vector<double> alpha(k);
  for (double& a : alpha) a = 0.1 + 0.9 * unit(rng);
  std::vector<UtilityModel> out;
  out.push_back(UtilityModel::linear(inst));
  out.push_back(UtilityModel::power_sum(inst, alpha));
  out.push_back(UtilityModel::cobb_douglas(inst));
  out.push_back(UtilityModel::saturating(inst));
  out.push_back(UtilityModel::smoothed_saturating(inst, 0.1 + 0.9 * unit(rng)));
  return out;
}

}  // namespace

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(Instance(0, 1, 1.0, {}), Error);
  CHECK_THROWS_AS(Instance(1, 1, 0.0, {1.0}), Error);
  CHECK_THROWS_AS(Instance(1, 2, 1.0, {1.0}), Error);
  CHECK_THROWS_AS(Instance(1, 1, 1.0, {-1.0}), Error);
  CHECK_THROWS_AS(Instance(2, 1, 1.0, {1.0, 0.0}), Error);
  CHECK_NOTHROW(Instance(2, 1, 1.0, {1.0, 0.0}, std::nullopt, {}, Instance::ZeroRows::kAllow));
  CHECK_THROWS_AS(Instance(1, 2, 1.0, {1.0, 1.0}, std::vector<double>{1.0, 0.0}), Error);
  CHECK_THROWS_AS(Instance(1, 2, 1.0, {1.0, 1.0}, std::nullopt, {"a", "a"}), Error);
  const Instance ok(1, 2, 1.0, {1.0, 0.0});
  CHECK(ok.item_names()[1] == "item2");
  CHECK(ok.votes(0) == 1);
  CHECK(ok.votes(1) == 0);
  CHECK_THROWS_AS(UtilityModel::saturating(std::make_shared<const Instance>(ok)), Error);
}

TEST_CASE("utility evaluation examples") {
  auto lin = UtilityModel::linear(oracle::make(1, 2, 1.0, {1.0, 0.0}));
  CHECK(evaluate_utility(lin, 0, std::vector<double>{0.5, 0.5}) == doctest::Approx(0.5));

  auto sat = UtilityModel::saturating(oracle::make(1, 2, 3.0, {1.0, 1.0}, std::vector<double>{2.0, 2.0}));
  CHECK(evaluate_utility(sat, 0, std::vector<double>{2.0, 1.0}) == doctest::Approx(1.5));

  auto cd = UtilityModel::cobb_douglas(oracle::make(1, 2, 1.0, {1.0, 1.0}),
                                       std::vector<double>{0.5, 0.5});
  CHECK(evaluate_utility(cd, 0, std::vector<double>{4.0, 1.0}) == doctest::Approx(2.0));
  const auto g = utility_gradient(cd, 0, std::vector<double>{4.0, 1.0}).values;
  CHECK(g[0] == doctest::Approx(0.25));
  CHECK(g[1] == doctest::Approx(1.0));

  auto lin2 = UtilityModel::linear(oracle::make(1, 2, 1.0, {2.0, 3.0}));
  const auto gl = utility_gradient(lin2, 0, std::vector<double>{0.3, 0.1}).values;
  CHECK(gl[0] == 2.0);
  CHECK(gl[1] == 3.0);

  auto ps = UtilityModel::power_sum(oracle::make(1, 2, 1.0, {1.0, 1.0}), {0.5, 0.5});
  const auto gp = utility_gradient(ps, 0, std::vector<double>{1.0, 4.0}).values;
  CHECK(gp[0] == doctest::Approx(0.5));
  CHECK(gp[1] == doctest::Approx(0.25));

  CHECK_THROWS_AS(evaluate_utility(lin, 0, std::vector<double>{1.0}), Error);
}

TEST_CASE("saturating kink returns the left derivative and flags it") {
  auto sat = UtilityModel::saturating(oracle::make(1, 2, 3.0, {1.0, 1.0}, std::vector<double>{2.0, 2.0}));
  const auto g = utility_gradient(sat, 0, std::vector<double>{2.0, 1.0});
  CHECK(g.at_kink);
  CHECK(g.values[0] == doctest::Approx(0.5));
  const auto above = utility_gradient(sat, 0, std::vector<double>{2.5, 1.0});
  CHECK(above.values[0] == 0.0);
}

TEST_CASE("gradients match central differences on every family") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    for (const auto& model : every_family(rng, 3, 4)) {
      std::vector<double> x(4);
      for (double& v : x) v = 0.05 + 2.0 * unit(rng);
      const auto& inst = model.instance();
      if (model.family() == Family::kSaturating || model.family() == Family::kSmoothedSaturating) {
        bool near_kink = false;
        for (std::size_t j = 0; j < 4; ++j) near_kink |= std::abs(x[j] - inst.size(j)) < 1e-3;
        if (near_kink) continue;
      }
      for (std::size_t i = 0; i < inst.agents(); ++i) {
        const auto g = utility_gradient(model, i, x).values;
        auto f = [&](const std::vector<double>& p) { return evaluate_utility(model, i, p); };
        for (std::size_t j = 0; j < 4; ++j) {
          const double fd = oracle::central_difference(f, x, j);
          CHECK(std::abs(g[j] - fd) <= std::max(1e-6, 1e-4 * std::abs(g[j])));
        }
      }
    }
  }
}

TEST_CASE("power sum with unit exponents is linear") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  auto inst = oracle::make(4, 3, 1.0, oracle::random_utilities(4, 3, rng));
  auto lin = UtilityModel::linear(inst);
  auto ps = UtilityModel::power_sum(inst, {1.0, 1.0, 1.0});
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x{unit(rng), unit(rng), unit(rng)};
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(evaluate_utility(lin, i, x) - evaluate_utility(ps, i, x)) <= 1e-12);
      const auto a = utility_gradient(lin, i, x).values;
      const auto b = utility_gradient(ps, i, x).values;
      CHECK(oracle::linf(a, b) <= 1e-12);
    }
  }
}

TEST_CASE("z transform examples") {
  auto lin = UtilityModel::linear(oracle::make(1, 1, 1.0, {1.0}));
  const ZTransform zl(lin);
  CHECK(zl.z(0, 2.0) == 2.0);
  CHECK(zl.inverse(0, 2.0) == 2.0);
  CHECK(zl.ratio(0, 2.0) == 1.0);

  auto ps = UtilityModel::power_sum(oracle::make(1, 1, 1.0, {1.0}), {0.5});
  const ZTransform zp(ps);
  CHECK(zp.z(0, 4.0) == doctest::Approx(1.0));
  const double inverted = oracle::bisect_increasing([&](double x) { return 0.5 * std::sqrt(x); },
                                                    1.0, 0.0, 100.0);
  CHECK(zp.inverse(0, 1.0) == doctest::Approx(inverted).epsilon(1e-12));

  auto sm = UtilityModel::smoothed_saturating(
      oracle::make(1, 1, 8.0, {1.0}, std::vector<double>{1.0}), 0.5);
  const ZTransform zs(sm);
  CHECK(zs.z(0, 4.0) == doctest::Approx(2.0));
  CHECK(zs.z(0, 0.0) == 0.0);

  auto sat = UtilityModel::saturating(oracle::make(1, 1, 8.0, {1.0}, std::vector<double>{1.0}));
  CHECK_THROWS_AS(z_transform(sat), Error);
  auto cd = UtilityModel::cobb_douglas(oracle::make(1, 1, 1.0, {1.0}));
  CHECK_THROWS_AS(z_transform(cd), Error);
}

TEST_CASE("z transform properties") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    for (const auto& model : every_family(rng, 2, 3)) {
      if (!model.non_satiating()) continue;
      const ZTransform zt(model);
      const double budget = model.instance().budget();
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(zt.z(j, 0.0) == 0.0);
        // Round trip on a log grid and strict monotonicity.
        double prev = 0.0;
        for (int g = 0; g < 100; ++g) {
          const double x = 1e-6 * std::pow(budget / 1e-6, g / 99.0);
          const double z = zt.z(j, x);
          CHECK(z > prev);
          prev = z;
          CHECK(std::abs(zt.inverse(j, z) - x) <= 1e-8 * std::max(1.0, x));
          CHECK(zt.ratio(j, z) == doctest::Approx(zt.inverse(j, z) / z).epsilon(1e-10));
        }
        // R is the integral of r and convex.
        const double ztop = zt.z(j, budget);
        const double quad = oracle::simpson([&](double s) { return s > 0.0 ? zt.ratio(j, s) : 0.0; },
                                            0.0, ztop, 1e-12);
        CHECK(zt.integral(j, ztop) == doctest::Approx(quad).epsilon(1e-6));
        const double step = ztop / 50.0;
        for (int g = 1; g < 49; ++g) {
          const double second = zt.integral(j, (g + 1) * step) - 2.0 * zt.integral(j, g * step) +
                                zt.integral(j, (g - 1) * step);
          CHECK(second >= -1e-9);
        }
        // r' against a central difference away from the smoothing kink.
        const double zm = 0.37 * ztop;
        if (std::abs(zm - 1.0) > 1e-3) {
          auto r = [&](const std::vector<double>& p) { return zt.ratio(j, p[0]); };
          CHECK(zt.ratio_derivative(j, zm) ==
                doctest::Approx(oracle::central_difference(r, {zm}, 0)).epsilon(1e-4));
        }
      }
    }
  }
}

TEST_CASE("allocation validation") {
  const Instance inst(1, 2, 1.0, {1.0, 1.0}, std::vector<double>{0.4, 0.6});
  CHECK_NOTHROW(validate_allocation(inst, {{0.4, 0.6}, AllocationKind::kIntegral}));
  CHECK_THROWS_AS(validate_allocation(inst, {{0.3, 0.6}, AllocationKind::kIntegral}), Error);
  CHECK_THROWS_AS(validate_allocation(inst, {{0.6, 0.6}, AllocationKind::kFractional}), Error);
  CHECK_THROWS_AS(validate_allocation(inst, {{-0.1, 0.6}, AllocationKind::kFractional}), Error);
  CHECK_NOTHROW(validate_allocation(inst, {{0.5, 0.5 + 1e-12}, AllocationKind::kFractional}));
}

TEST_CASE("marginal shares name the degenerate agent") {
  auto lin = UtilityModel::linear(oracle::make(2, 2, 1.0, {1.0, 0.0, 0.0, 1.0}));
  try {
    marginal_shares(lin, std::vector<double>{1.0, 0.0});
    FAIL("expected a degenerate agent");
  } catch (const DegenerateAgentError& e) {
    CHECK(e.agent() == 1);
    CHECK(e.code() == ErrorCode::kDegenerate);
  }
}
