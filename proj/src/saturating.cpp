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

#include "pbcore/saturating.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pbcore/error.hpp"

namespace pbcore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Working state of the heuristic. denom_[i] caches sum_m u_im x_m y_m.
class Dynamics {
 public:
  Dynamics(const Instance& inst, std::vector<double> u, double tol)
      : n_(inst.agents()),
        k_(inst.items()),
        scale_(inst.budget() / static_cast<double>(inst.agents())),
        sizes_(inst.sizes().begin(), inst.sizes().end()),
        u_(std::move(u)),
        tol_(tol),
        x_(k_),
        y_(k_),
        denom_(n_, 0.0),
        load_(k_, 0.0) {
    const double total = std::accumulate(sizes_.begin(), sizes_.end(), 0.0);
    const double fill = std::min(1.0, inst.budget() / total);
    for (std::size_t j = 0; j < k_; ++j) {
      x_[j] = sizes_[j] * fill;
      y_[j] = 1.0 / sizes_[j];
    }
    refresh();
  }

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }

  // Recomputes the cached denominators from scratch to shed drift.
  void refresh() {
    for (std::size_t i = 0; i < n_; ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < k_; ++j) d += u_[i * k_ + j] * x_[j] * y_[j];
      denom_[i] = d;
    }
  }

  // L_j for every item, the left side of the equilibrium conditions.
  const std::vector<double>& loads() {
    std::fill(load_.begin(), load_.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double inv = denom_[i] > 0.0 ? 1.0 / denom_[i] : kInf;
      const double* row = u_.data() + i * k_;
      for (std::size_t j = 0; j < k_; ++j) {
        if (row[j] != 0.0) load_[j] += row[j] * inv;
      }
    }
    for (std::size_t j = 0; j < k_; ++j) load_[j] *= scale_ * y_[j];
    return load_;
  }

  // Re-solves the condition of one item with every other item held fixed.
  void update(std::size_t j) {
    for (std::size_t i = 0; i < n_; ++i) {
      rest_[i] = std::max(0.0, denom_[i] - u_[i * k_ + j] * x_[j] * y_[j]);
    }
    const double s = sizes_[j];
    // L as a function of (x, y) for this item alone.
    auto load = [&](double x, double y) {
      double total = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double u = u_[i * k_ + j];
        if (u == 0.0) continue;
        const double d = rest_[i] + u * x * y;
        if (!(d > 0.0)) return kInf;
        total += u * y / d;
      }
      return scale_ * total;
    };

    double x = 0.0;
    double y = 1.0 / s;
    if (load(0.0, y) <= 1.0) {
      x = 0.0;
    } else if (load(s, y) >= 1.0) {
      // Fully funded; lower the marginal value until the condition is tight.
      // L(s, y) increases in y.
      x = s;
      double lo = 0.0;
      double hi = y;
      while (hi - lo > tol_ * y) {
        const double mid = 0.5 * (lo + hi);
        (load(s, mid) >= 1.0 ? hi : lo) = mid;
      }
      y = hi;
    } else {
      // L(x, 1/s) decreases in x.
      double lo = 0.0;
      double hi = s;
      while (hi - lo > tol_ * s) {
        const double mid = 0.5 * (lo + hi);
        (load(mid, y) > 1.0 ? lo : hi) = mid;
      }
      x = 0.5 * (lo + hi);
    }
    x_[j] = x;
    y_[j] = y;
    for (std::size_t i = 0; i < n_; ++i) denom_[i] = rest_[i] + u_[i * k_ + j] * x * y;
  }

  void prepare() { rest_.assign(n_, 0.0); }

 private:
  std::size_t n_;
  std::size_t k_;
  double scale_;
  std::vector<double> sizes_;
  std::vector<double> u_;
  double tol_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> denom_;
  std::vector<double> load_;
  std::vector<double> rest_;
};

double violation_of(double load, double x) {
  if (std::isnan(load)) return kInf;
  return x > 0.0 ? std::abs(load - 1.0) : std::max(0.0, load - 1.0);
}

}  // namespace

UtilityModel smooth_relax(const UtilityModel& saturating, double eps_smooth) {
  require(saturating.family() == Family::kSaturating, ErrorCode::kUnsupportedModel,
          "smoothing applies to saturating utilities");
  return UtilityModel::smoothed_saturating(saturating.instance_ptr(), eps_smooth);
}

double smoothing_alpha_bound(double eps_smooth, double budget_over_size) {
  require(eps_smooth > 0.0 && eps_smooth <= 1.0, ErrorCode::kInvalidArgument,
          "eps_smooth must lie in (0, 1]");
  require(budget_over_size > 0.0, ErrorCode::kInvalidArgument, "B/s must be positive");
  return std::pow(budget_over_size, eps_smooth) / eps_smooth + 1.0 - 1.0 / eps_smooth;
}

SmoothedSolution solve_smoothed(const UtilityModel& saturating, double eps_smooth,
                                const SolverConfig& config) {
  const UtilityModel smooth = smooth_relax(saturating, eps_smooth);
  const auto sizes = saturating.instance().sizes();
  const double smallest = *std::min_element(sizes.begin(), sizes.end());
  SmoothedSolution out;
  out.result = solve_potential(smooth, config);
  out.alpha_bound = smoothing_alpha_bound(eps_smooth, saturating.instance().budget() / smallest);
  return out;
}

void HeuristicConfig::validate() const {
  require(!eps_target || *eps_target > 0.0, ErrorCode::kInvalidArgument,
          "eps_target must be positive");
  require(!perturb_alpha || *perturb_alpha >= 0.0, ErrorCode::kInvalidArgument,
          "perturb_alpha must be nonnegative");
  require(bisection_tol > 0.0 && bisection_tol < 1.0, ErrorCode::kInvalidArgument,
          "bisection_tol must lie in (0, 1)");
  require(!eps_target || *eps_target >= bisection_tol, ErrorCode::kInvalidArgument,
          "eps_target must be at least bisection_tol");
}

std::vector<double> saturating_violations(const Instance& instance,
                                          const std::vector<double>& utilities,
                                          const std::vector<double>& x,
                                          const std::vector<double>& y) {
  const std::size_t n = instance.agents();
  const std::size_t k = instance.items();
  require(utilities.size() == n * k && x.size() == k && y.size() == k,
          ErrorCode::kDimensionMismatch, "shape mismatch in violation check");
  std::vector<double> load(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < k; ++j) d += utilities[i * k + j] * x[j] * y[j];
    for (std::size_t j = 0; j < k; ++j) {
      const double u = utilities[i * k + j];
      if (u != 0.0) load[j] += d > 0.0 ? u / d : kInf;
    }
  }
  std::vector<double> v(k);
  const double scale = instance.budget() / static_cast<double>(n);
  for (std::size_t j = 0; j < k; ++j) v[j] = violation_of(scale * y[j] * load[j], x[j]);
  return v;
}

HeuristicResult heuristic_solve(const Instance& instance, const HeuristicConfig& config) {
  config.validate();
  require(instance.has_sizes(), ErrorCode::kInvalidArgument,
          "saturating utilities need item sizes");
  const std::size_t n = instance.agents();
  const std::size_t k = instance.items();
  const double eps = config.eps_target.value_or(1.0 / static_cast<double>(n));
  const double noise = config.perturb_alpha.value_or(1.0 / static_cast<double>(k * k));

  HeuristicResult out;
  out.perturbed_utilities.assign(instance.utilities().begin(), instance.utilities().end());
  if (noise > 0.0) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> jitter(0.0, noise);
    for (double& u : out.perturbed_utilities) u += jitter(rng);
  }

  const auto sizes = instance.sizes();
  const double total_size = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  if (total_size <= instance.budget()) {
    // Everything fits: fund it all. The conditions cannot be tight here since
    // the budget is never exhausted.
    out.x.x.assign(sizes.begin(), sizes.end());
    out.y.resize(k);
    for (std::size_t j = 0; j < k; ++j) out.y[j] = 1.0 / sizes[j];
    out.converged = true;
    out.budget_flag = total_size < instance.budget() * (1.0 - eps);
    out.trace.push_back({0, 0.0});
    return out;
  }

  Dynamics dyn(instance, out.perturbed_utilities, config.bisection_tol);
  dyn.prepare();
  std::vector<double> v(k);
  for (std::size_t sweep = 0;; ++sweep) {
    const auto& load = dyn.loads();
    std::size_t worst = 0;
    double worst_v = -1.0;
    for (std::size_t j = 0; j < k; ++j) {
      v[j] = violation_of(load[j], dyn.x()[j]);
      if (v[j] > worst_v) {
        worst_v = v[j];
        worst = j;
      }
    }
    out.trace.push_back({sweep, worst_v});
    out.sweeps = sweep;
    out.max_violation = worst_v;
    if (worst_v <= eps) {
      out.converged = true;
      break;
    }
    if (sweep >= config.max_sweeps) break;
    dyn.update(worst);
    if ((sweep + 1) % 64 == 0) dyn.refresh();
  }
  out.x.x = dyn.x();
  out.y = dyn.y();
  const double spent = out.x.total();
  out.budget_flag = std::abs(spent - instance.budget()) > eps * instance.budget();
  return out;
}

}  // namespace pbcore
