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

// Lindahl equilibria for non-satiating utilities.
//
// An allocation x is a Lindahl equilibrium iff for every item j
//
//   (B/n) sum_i (dU_i/dx_j) / (sum_m x_m dU_i/dx_m) <= 1,
//
// with equality whenever x_j > 0. The left side minus one is the residual
// reported throughout this module. With z_j = x_j f_j'(x_j) the conditions
// are the optimality conditions of the concave potential
//
//   Phi(z) = sum_i log(sum_j u_ij z_j) - (n/B) sum_j R_j(z_j),
//
// which solve_potential maximises. For homogeneous utilities the potential
// reduces to proportional fairness, sum_i log U_i(x) on the budget simplex.

#ifndef PBCORE_LINDAHL_HPP
#define PBCORE_LINDAHL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pbcore/model.hpp"

namespace pbcore {

struct SolverConfig {
  double residual_tol = 1e-8;
  std::size_t max_iters = 50000;
  // Lower bound on every coordinate, in money. for_budget() sets 1e-12 * B.
  double z_floor = 1e-12;
  double step_init = 1.0;
  std::uint64_t seed = 0;

  static SolverConfig for_budget(double budget);
  void validate() const;
};

struct TracePoint {
  std::size_t iteration = 0;
  double max_abs_residual = 0.0;
};

struct LindahlResult {
  Allocation x;
  std::vector<double> residuals;
  std::size_t iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<TracePoint> trace;
  // Objective after every accepted step (potential or log-welfare).
  std::vector<double> objective;
};

// Per-agent, per-item Lindahl prices
//   p_ij = (B/n) (dU_i/dx_j) / (sum_m x_m dU_i/dx_m).
struct PriceVectors {
  std::size_t agents = 0;
  std::size_t items = 0;
  std::vector<double> p;  // agents*items row-major

  double price(std::size_t agent, std::size_t item) const { return p[agent * items + item]; }
  double column_sum(std::size_t item) const;
  double spend(std::size_t agent, std::span<const double> x) const;
};

std::vector<double> lindahl_residuals(const UtilityModel& model, std::span<const double> x);

// max over items of |r_j| where x_j > funded_threshold and max(0, r_j)
// elsewhere.
double kkt_violation(std::span<const double> residuals, std::span<const double> x,
                     double funded_threshold = 0.0);

// Linear or Cobb-Douglas only.
LindahlResult solve_proportional_fairness(const UtilityModel& model, const SolverConfig& config);

// Any non-satiating family. Cobb-Douglas is forwarded to
// solve_proportional_fairness; unsmoothed saturating utilities are rejected.
LindahlResult solve_potential(const UtilityModel& model, const SolverConfig& config);

// Phi(z) for a non-satiating model.
double potential_value(const UtilityModel& model, std::span<const double> z);

// Maximises sum_i log U_i(x) over {x >= lower, sum_j x_j <= total} for linear
// utilities. The floor makes this differ from the plain budget simplex.
LindahlResult solve_proportional_fairness_bounded(const UtilityModel& model, double lower,
                                                  double total, const SolverConfig& config);

struct SgdOptions {
  std::size_t rounds = 100000;
  // eta_t = step_scale * B^2 / t^step_exponent
  double step_scale = 0.005;
  double step_exponent = 0.5;
  // Iterates are kept at or above x_floor * B.
  double x_floor = 1e-4;
  // converged is reported when the final KKT violation is at most this.
  double tolerance = 0.05;
  std::size_t trace_every = 1000;
  std::uint64_t seed = 0;
};

// Direction reported by the simulated quadratic-voting voter: the unit
// vector along grad U_i(x).
std::vector<double> quadratic_voting_direction(const UtilityModel& model, std::size_t agent,
                                               std::span<const double> x);

// One agent's contribution to grad F for
//   F(x) = (1/n) sum_i log U_i(x) - (1/B) ||x||_1,
// built from the voting direction only. Averaging over a uniformly random
// agent gives grad F exactly.
std::vector<double> sgd_gradient_sample(const UtilityModel& model, std::size_t agent,
                                        std::span<const double> x);

// Exact grad F, for checking the sampled estimator.
std::vector<double> welfare_gradient(const UtilityModel& model, std::span<const double> x);

LindahlResult sgd_elicitation(const UtilityModel& model, const SgdOptions& options);

PriceVectors recover_prices(const UtilityModel& model, std::span<const double> x);

}  // namespace pbcore

#endif  // PBCORE_LINDAHL_HPP
