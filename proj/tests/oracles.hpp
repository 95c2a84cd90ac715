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

// Reference computations for the tests. Nothing here calls into the
// solvers; each oracle recomputes its answer from first principles.

#ifndef PBCORE_TESTS_ORACLES_HPP
#define PBCORE_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "pbcore/model.hpp"

namespace oracle {

inline std::shared_ptr<const pbcore::Instance> make(std::size_t n, std::size_t k, double budget,
                                                    std::vector<double> u,
                                                    std::optional<std::vector<double>> sizes = {}) {
  return std::make_shared<const pbcore::Instance>(n, k, budget, std::move(u), std::move(sizes));
}

// Agents split into groups; each group likes exactly one item.
inline std::shared_ptr<const pbcore::Instance> disjoint_groups(const std::vector<std::size_t>& groups,
                                                               double budget) {
  const std::size_t k = groups.size();
  const std::size_t n = std::accumulate(groups.begin(), groups.end(), std::size_t{0});
  std::vector<double> u(n * k, 0.0);
  std::size_t i = 0;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < groups[j]; ++c, ++i) u[i * k + j] = 1.0;
  }
  return make(n, k, budget, std::move(u));
}

// Uniform(0,1) utilities with one guaranteed positive entry per row.
inline std::vector<double> random_utilities(std::size_t n, std::size_t k, std::mt19937_64& rng,
                                            double zero_prob = 0.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> u(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = unit(rng) < zero_prob ? 0.0 : 0.05 + unit(rng);
      u[i * k + j] = v;
      any = any || v > 0.0;
    }
    if (!any) u[i * k + (rng() % k)] = 0.5;
  }
  return u;
}

// Central finite difference of f at x along coordinate j.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t j) {
  const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
  const double x0 = x[j];
  x[j] = x0 + h;
  const double up = f(x);
  x[j] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-10, int depth = 60) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps,
          int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid);
    const double rm = 0.5 * (mid + hi);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
      return left + right + (left + right - whole) / 15.0;
    }
    return rec(lo, mid, flo, flm, fmid, left, eps / 2.0, d - 1) +
           rec(mid, hi, fmid, frm, fhi, right, eps / 2.0, d - 1);
  };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

// Bisection for a root of an increasing function on [lo, hi].
inline double bisect_increasing(const std::function<double(double)>& f, double target, double lo,
                                double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Raw linear utilities u_i . x.
inline double linear_utility(const pbcore::Instance& inst, std::size_t i,
                             const std::vector<double>& x) {
  double v = 0.0;
  for (std::size_t j = 0; j < inst.items(); ++j) v += inst.utility(i, j) * x[j];
  return v;
}

// Grid maximisation of sum_i log U_i over the 3-item budget simplex.
inline std::vector<double> grid_pf3(const pbcore::Instance& inst, double step) {
  const double budget = inst.budget();
  const auto steps = static_cast<long>(std::llround(1.0 / step));
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> arg(3, 0.0);
  std::vector<double> x(3);
  for (long a = 0; a <= steps; ++a) {
    for (long b = 0; a + b <= steps; ++b) {
      x[0] = budget * static_cast<double>(a) / static_cast<double>(steps);
      x[1] = budget * static_cast<double>(b) / static_cast<double>(steps);
      x[2] = budget - x[0] - x[1];
      double v = 0.0;
      for (std::size_t i = 0; i < inst.agents(); ++i) v += std::log(linear_utility(inst, i, x));
      if (v > best) {
        best = v;
        arg = x;
      }
    }
  }
  return arg;
}

// Cobb-Douglas equilibrium: the average of each agent's own optimal spend.
inline std::vector<double> cobb_douglas_average(std::size_t n, std::size_t k,
                                                const std::vector<double>& exponents,
                                                double budget) {
  std::vector<double> x(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) x[j] += exponents[i * k + j] * budget / static_cast<double>(n);
  }
  return x;
}

inline double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

// Row-normalised utilities, budget one: the scale the mechanism works in.
inline std::vector<double> unit_rows(const pbcore::Instance& inst) {
  const std::size_t k = inst.items();
  std::vector<double> u(inst.utilities().begin(), inst.utilities().end());
  for (std::size_t i = 0; i < inst.agents(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += u[i * k + j];
    for (std::size_t j = 0; j < k; ++j) u[i * k + j] /= s;
  }
  return u;
}

// sum_i U_i(y) / U_i(x) on unit rows.
inline double ratio_sum(const std::vector<double>& u, std::size_t k, const std::vector<double>& x,
                        const std::vector<double>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i * k < u.size(); ++i) {
    double ux = 0.0, uy = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      ux += u[i * k + j] * x[j];
      uy += u[i * k + j] * y[j];
    }
    total += uy / ux;
  }
  return total;
}

// Maximum of ratio_sum over the k + 1 vertices of {y >= lower, sum y <= 1}.
inline double vertex_max(const std::vector<double>& u, std::size_t k, const std::vector<double>& x,
                         double lower) {
  std::vector<double> y(k, lower);
  double best = ratio_sum(u, k, x, y);
  for (std::size_t j = 0; j < k; ++j) {
    y.assign(k, lower);
    y[j] = 1.0 - lower * static_cast<double>(k - 1);
    best = std::max(best, ratio_sum(u, k, x, y));
  }
  return best;
}

// Cell probabilities of a density on the two-item set {x >= lower,
// x1 + x2 <= 1}, over a cells x cells grid of its bounding box, integrated by
// a sub x sub midpoint rule with exact membership per sub-point.
inline std::vector<double> discretized_density(const std::function<double(double, double)>& log_f,
                                               double lower, int cells, int sub) {
  const double h = (1.0 - 2.0 * lower) / cells;
  std::vector<double> mass(static_cast<std::size_t>(cells * cells), 0.0);
  std::vector<double> logs;
  std::vector<std::size_t> where;
  for (int a = 0; a < cells; ++a) {
    for (int b = 0; b < cells; ++b) {
      for (int p = 0; p < sub; ++p) {
        for (int q = 0; q < sub; ++q) {
          const double x1 = lower + (a + (p + 0.5) / sub) * h;
          const double x2 = lower + (b + (q + 0.5) / sub) * h;
          if (x1 + x2 > 1.0) continue;
          logs.push_back(log_f(x1, x2));
          where.push_back(static_cast<std::size_t>(a * cells + b));
        }
      }
    }
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (std::size_t s = 0; s < logs.size(); ++s) {
    const double w = std::exp(logs[s] - top);
    mass[where[s]] += w;
    total += w;
  }
  for (double& m : mass) m /= total;
  return mass;
}

inline std::vector<double> histogram2(const std::vector<std::vector<double>>& points, double lower,
                                      int cells) {
  const double h = (1.0 - 2.0 * lower) / cells;
  std::vector<double> mass(static_cast<std::size_t>(cells * cells), 0.0);
  for (const auto& x : points) {
    const int a = std::clamp(static_cast<int>((x[0] - lower) / h), 0, cells - 1);
    const int b = std::clamp(static_cast<int>((x[1] - lower) / h), 0, cells - 1);
    mass[static_cast<std::size_t>(a * cells + b)] += 1.0 / static_cast<double>(points.size());
  }
  return mass;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) s += std::abs(p[c] - q[c]);
  return 0.5 * s;
}

// Two-item proportional fairness on the face x1 + x2 = 1 with both x >= lower,
// by bisection on the derivative of sum_i log U_i.
inline std::vector<double> pf_two_items(const std::vector<double>& u, double lower) {
  auto slope = [&](double t) {
    double d = 0.0;
    for (std::size_t i = 0; 2 * i < u.size(); ++i) {
      const double a = u[2 * i], b = u[2 * i + 1];
      d += (a - b) / (a * t + b * (1.0 - t));
    }
    return -d;
  };
  double t;
  if (slope(lower) >= 0.0) {
    t = lower;
  } else if (slope(1.0 - lower) <= 0.0) {
    t = 1.0 - lower;
  } else {
    t = bisect_increasing(slope, 0.0, lower, 1.0 - lower);
  }
  return {t, 1.0 - t};
}

}  // namespace oracle

#endif  // PBCORE_TESTS_ORACLES_HPP
