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

// Bound-constrained maximisation of a smooth concave function over
// {v : v_j >= lower_j}. Internal to the solvers.

#ifndef PBCORE_SRC_PROJECTED_NEWTON_HPP
#define PBCORE_SRC_PROJECTED_NEWTON_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace pbcore::detail {

struct ConcaveProblem {
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> value;
  // Objective change value(to) - value(from), computed without cancellation
  // where the caller can. Near the optimum the raw difference drowns in
  // rounding noise long before the stationarity target is met.
  std::function<double(std::span<const double> from, std::span<const double> to)> improvement;
  // Gradient and (negative semidefinite) Hessian.
  std::function<void(std::span<const double>, Eigen::VectorXd&, Eigen::MatrixXd&)> derivatives;
  // Caller-defined optimality violation; the iteration stops once it is at or
  // below the tolerance.
  std::function<double(std::span<const double>)> stationarity;
};

struct AscentOptions {
  std::vector<double> lower;  // one bound per coordinate
  double tol = 1e-8;
  std::size_t max_iters = 50000;
  double step_init = 1.0;
  double armijo = 1e-4;
  double shrink = 0.5;
  double min_step = 1e-16;
};

struct AscentResult {
  std::vector<double> v;
  std::size_t iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  double violation = 0.0;
  std::vector<std::pair<std::size_t, double>> trace;
  // Objective after every accepted step, starting with the initial point.
  std::vector<double> values;
};

AscentResult projected_newton_ascent(const ConcaveProblem& problem, std::vector<double> start,
                                     const AscentOptions& options);

}  // namespace pbcore::detail

#endif  // PBCORE_SRC_PROJECTED_NEWTON_HPP
