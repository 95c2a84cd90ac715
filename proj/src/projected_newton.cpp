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

#include "projected_newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pbcore::detail {

namespace {

// Gradient projection with the Newton metric on the free variables and a
// diagonally scaled gradient on the epsilon-active ones (Bertsekas 1982).
Eigen::VectorXd ascent_direction(const Eigen::VectorXd& g, const Eigen::MatrixXd& hess,
                                 std::span<const double> v,
                                 std::span<const double> lower) {
  const Eigen::Index dim = g.size();
  Eigen::VectorXd curvature = (-hess.diagonal()).cwiseMax(0.0);
  const double max_curv = std::max(curvature.maxCoeff(), std::numeric_limits<double>::min());

  double vmax = 0.0;
  double width = 0.0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    vmax = std::max(vmax, v[j]);
    const double h = curvature[j] > 0.0 ? curvature[j] : max_curv;
    const double moved = std::max(lower[j], v[j] + g[j] / h) - v[j];
    width = std::max(width, std::abs(moved));
  }
  const double delta = std::min(1e-6 * vmax, width);


  std::vector<Eigen::Index> free;
  std::vector<bool> active(static_cast<std::size_t>(dim), false);
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (v[j] - lower[j] <= delta && g[j] < 0.0) {
      active[static_cast<std::size_t>(j)] = true;
    } else {
      free.push_back(j);
    }
  }

  Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (active[static_cast<std::size_t>(j)]) {
      d[j] = g[j] / std::max(curvature[j], std::numeric_limits<double>::min());
    }
  }
  if (free.empty()) return d;

  const auto m = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd reduced(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    rhs[a] = g[free[a]];
    for (Eigen::Index b = 0; b < m; ++b) reduced(a, b) = -hess(free[a], free[b]);
  }
  double damping = 1e-12 * max_curv;
  for (int attempt = 0; attempt < 30; ++attempt) {
    Eigen::MatrixXd shifted = reduced;
    shifted.diagonal().array() += damping;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd step = llt.solve(rhs);
      if (step.allFinite() && step.dot(rhs) > 0.0) {
        for (Eigen::Index a = 0; a < m; ++a) d[free[a]] = step[a];
        return d;
      }
    }
    damping = std::max(damping * 100.0, 1e-300);
  }
  // Fall back to the scaled gradient.
  for (Eigen::Index a = 0; a < m; ++a) {
    const Eigen::Index j = free[a];
    d[j] = g[j] / (curvature[j] > 0.0 ? curvature[j] : max_curv);
  }
  return d;
}

Eigen::VectorXd scaled_gradient(const Eigen::VectorXd& g, const Eigen::MatrixXd& hess) {
  Eigen::VectorXd curvature = (-hess.diagonal()).cwiseMax(0.0);
  const double max_curv = std::max(curvature.maxCoeff(), std::numeric_limits<double>::min());
  Eigen::VectorXd d(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    d[j] = g[j] / (curvature[j] > 0.0 ? curvature[j] : max_curv);
  }
  return d;
}

// Armijo backtracking along the projected arc v + t d. Updates result on
// success.
bool line_search(const ConcaveProblem& problem, const AscentOptions& options,
                 const Eigen::VectorXd& d, const Eigen::VectorXd& g, std::vector<double>& trial,
                 AscentResult& result) {
  const std::size_t dim = problem.dim;
  for (double step = options.step_init; step >= options.min_step; step *= options.shrink) {
    double predicted = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      trial[j] = std::max(options.lower[j], result.v[j] + step * d[jj]);
      predicted += g[jj] * (trial[j] - result.v[j]);
    }
    if (!(predicted > 0.0)) continue;
    const double gain = problem.improvement(result.v, trial);
    if (std::isfinite(gain) && gain >= options.armijo * predicted) {
      if (trial == result.v) return false;
      result.v = trial;
      result.values.push_back(result.values.back() + gain);
      return true;
    }
  }
  return false;
}

}  // namespace

AscentResult projected_newton_ascent(const ConcaveProblem& problem, std::vector<double> start,
                                     const AscentOptions& options) {
  const std::size_t dim = problem.dim;
  AscentResult result;
  result.v = std::move(start);
  for (std::size_t j = 0; j < dim; ++j) {
    result.v[j] = std::max(result.v[j], options.lower[j]);
  }
  result.values.push_back(problem.value(result.v));

  Eigen::VectorXd g(static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd hess(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  std::vector<double> trial(dim);

  for (std::size_t iter = 0;; ++iter) {
    result.iterations = iter;
    result.violation = problem.stationarity(result.v);
    result.trace.emplace_back(iter, result.violation);
    if (result.violation <= options.tol) {
      result.converged = true;
      break;
    }
    if (iter >= options.max_iters) break;

    problem.derivatives(result.v, g, hess);
    bool accepted = line_search(problem, options, ascent_direction(g, hess, result.v, options.lower),
                                g, trial, result);
    if (!accepted) {
      // Projection can cut a Newton step down to a non-ascent move; the
      // diagonally scaled gradient always ascends for small enough steps.
      accepted = line_search(problem, options, scaled_gradient(g, hess), g, trial, result);
    }
    if (!accepted) {
      result.line_search_failed = true;
      break;
    }
  }
  return result;
}

}  // namespace pbcore::detail
