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

// Core allocations under saturating utilities u_ij min(x_j / s_j, 1).
//
// Two routes: a smoothed non-satiating relaxation solved exactly, which is
// an alpha-approximate multiplicative core, and a coordinate heuristic that
// drives the equilibrium conditions
//
//   (B/n) sum_i u_ij y_j / (sum_m u_im x_m y_m) <= 1   (tight when x_j > 0)
//
// to zero, where y_j is the marginal value of item j. y_j <= 1/s_j always,
// with equality while the item is not yet fully funded.

#ifndef PBCORE_SATURATING_HPP
#define PBCORE_SATURATING_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pbcore/lindahl.hpp"
#include "pbcore/model.hpp"

namespace pbcore {

UtilityModel smooth_relax(const UtilityModel& saturating, double eps_smooth);

// (1/eps) (B/s)^eps + 1 - 1/eps, the multiplicative approximation factor of
// the smoothed solution when s is the smallest item size.
double smoothing_alpha_bound(double eps_smooth, double budget_over_size);

struct SmoothedSolution {
  LindahlResult result;
  double alpha_bound = 1.0;
};

SmoothedSolution solve_smoothed(const UtilityModel& saturating, double eps_smooth,
                                const SolverConfig& config);

struct HeuristicConfig {
  // Unset values resolve to 1/n and 1/k^2 for the instance at hand.
  std::optional<double> eps_target;
  std::optional<double> perturb_alpha;
  std::size_t max_sweeps = 10000;
  double bisection_tol = 1e-10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct HeuristicResult {
  Allocation x;
  std::vector<double> y;
  // One entry per sweep (a single-item update), starting at sweep 0.
  std::vector<TracePoint> trace;
  bool converged = false;
  std::size_t sweeps = 0;
  double max_violation = 0.0;
  // Set when the total spend misses B by more than eps_target * B.
  bool budget_flag = false;
  std::vector<double> perturbed_utilities;
};

// Per-item violation of the equilibrium conditions at (x, y) for the given
// utility matrix: |L_j - 1| for funded items, max(0, L_j - 1) otherwise.
std::vector<double> saturating_violations(const Instance& instance,
                                          const std::vector<double>& utilities,
                                          const std::vector<double>& x,
                                          const std::vector<double>& y);

HeuristicResult heuristic_solve(const Instance& instance, const HeuristicConfig& config);

}  // namespace pbcore

#endif  // PBCORE_SATURATING_HPP
