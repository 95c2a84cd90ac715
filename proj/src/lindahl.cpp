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

#include "pbcore/lindahl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pbcore/error.hpp"
#include "projected_newton.hpp"

namespace pbcore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Coordinates this close to their bound are reported as unfunded.
bool at_floor(double v, double lower) { return v <= lower * (1.0 + 1e-9); }

// Eigen view of the utility matrix, n x k.
Eigen::MatrixXd utility_matrix(const Instance& inst) {
  Eigen::MatrixXd u(static_cast<Eigen::Index>(inst.agents()),
                    static_cast<Eigen::Index>(inst.items()));
  for (std::size_t i = 0; i < inst.agents(); ++i) {
    for (std::size_t j = 0; j < inst.items(); ++j) {
      u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inst.utility(i, j);
    }
  }
  return u;
}

// Residual-based stationarity. Iterates that starve some agent are simply
// not stationary.
double residual_violation(const UtilityModel& model, std::span<const double> x,
                          double funded_threshold) {
  try {
    const auto r = lindahl_residuals(model, x);
    return kkt_violation(r, x, funded_threshold);
  } catch (const DegenerateAgentError&) {
    return kInf;
  }
}

LindahlResult finish(const UtilityModel& model, const detail::AscentResult& run,
                     std::vector<double> x) {
  LindahlResult out;
  out.x.x = std::move(x);
  out.residuals = lindahl_residuals(model, out.x.x);
  out.iterations = run.iterations;
  out.converged = run.converged;
  out.line_search_failed = run.line_search_failed;
  out.trace.reserve(run.trace.size());
  for (const auto& [it, v] : run.trace) out.trace.push_back({it, v});
  out.objective = run.values;
  return out;
}

// sum_i log(1 + (a_i . d) / (a_i . v)) with a the rows of m.
double log_ratio_sum(const Eigen::MatrixXd& m, std::span<const double> from,
                     std::span<const double> to) {
  const auto k = static_cast<Eigen::Index>(from.size());
  Eigen::VectorXd v(k);
  Eigen::VectorXd d(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    v[j] = from[static_cast<std::size_t>(j)];
    d[j] = to[static_cast<std::size_t>(j)] - from[static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd base = m * v;
  const Eigen::VectorXd delta = m * d;
  double total = 0.0;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    const double ratio = delta[i] / base[i];
    if (!(ratio > -1.0)) return -kInf;
    total += std::log1p(ratio);
  }
  return total;
}

Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Gradient and Hessian of sum_i log(u_i . v): W^T 1 and -W^T W with
// W_ij = u_ij / (u_i . v).
void log_sum_derivatives(const Eigen::MatrixXd& u, std::span<const double> v,
                         Eigen::VectorXd& g, Eigen::MatrixXd& h) {
  const Eigen::VectorXd d = u * to_eigen(v);
  const Eigen::MatrixXd w = d.cwiseInverse().asDiagonal() * u;
  g = w.colwise().sum().transpose();
  h.noalias() = -(w.transpose() * w);
}

void check_model_budget(const UtilityModel& model, const SolverConfig& config) {
  config.validate();
  (void)model;
}

// Linear proportional fairness with a per-unit cost lambda on spending:
// maximise sum_i log(u_i . x) - lambda sum_j x_j over x >= lower.
detail::AscentResult priced_linear_pf(const Eigen::MatrixXd& u, double lambda,
                                      std::vector<double> start, std::vector<double> lower,
                                      double tol, std::size_t max_iters, double step_init) {
  const std::size_t k = static_cast<std::size_t>(u.cols());
  detail::AscentOptions opt;
  opt.lower = std::move(lower);
  opt.tol = tol;
  opt.max_iters = max_iters;
  opt.step_init = step_init;
  const std::vector<double>& bound = opt.lower;
  detail::ConcaveProblem p;
  p.dim = k;
  p.value = [&](std::span<const double> x) {
    const Eigen::VectorXd d = u * to_eigen(x);
    return d.array().log().sum() - lambda * to_eigen(x).sum();
  };
  p.improvement = [&](std::span<const double> from, std::span<const double> to) {
    double spent = 0.0;
    for (std::size_t j = 0; j < k; ++j) spent += to[j] - from[j];
    return log_ratio_sum(u, from, to) - lambda * spent;
  };
  p.derivatives = [&](std::span<const double> x, Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    log_sum_derivatives(u, x, g, h);
    g.array() -= lambda;
  };
  p.stationarity = [&](std::span<const double> x) {
    const Eigen::VectorXd d = u * to_eigen(x);
    if (!(d.minCoeff() > 0.0)) return kInf;
    const Eigen::VectorXd g = d.cwiseInverse().transpose() * u;
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double r = g[static_cast<Eigen::Index>(j)] / lambda - 1.0;
      worst = std::max(worst, at_floor(x[j], bound[j]) ? std::max(0.0, r) : std::abs(r));
    }
    return worst;
  };
  return detail::projected_newton_ascent(p, std::move(start), opt);
}

}  // namespace

SolverConfig SolverConfig::for_budget(double budget) {
  SolverConfig c;
  c.z_floor = 1e-12 * budget;
  return c;
}

void SolverConfig::validate() const {
  require(residual_tol > 0.0 && std::isfinite(residual_tol), ErrorCode::kInvalidArgument,
          "residual_tol must be positive");
  require(z_floor > 0.0 && std::isfinite(z_floor), ErrorCode::kInvalidArgument,
          "z_floor must be positive");
  require(step_init > 0.0 && std::isfinite(step_init), ErrorCode::kInvalidArgument,
          "step_init must be positive");
}

double PriceVectors::column_sum(std::size_t item) const {
  double s = 0.0;
  for (std::size_t i = 0; i < agents; ++i) s += price(i, item);
  return s;
}

double PriceVectors::spend(std::size_t agent, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < items; ++j) s += price(agent, j) * x[j];
  return s;
}

std::vector<double> lindahl_residuals(const UtilityModel& model, std::span<const double> x) {
  const Instance& inst = model.instance();
  const std::size_t n = inst.agents();
  const std::size_t k = inst.items();
  const auto w = marginal_shares(model, x);
  const double scale = inst.budget() / static_cast<double>(n);
  std::vector<double> r(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) r[j] += w[i * k + j];
  }
  for (double& v : r) v = scale * v - 1.0;
  return r;
}

double kkt_violation(std::span<const double> residuals, std::span<const double> x,
                     double funded_threshold) {
  require(residuals.size() == x.size(), ErrorCode::kDimensionMismatch,
          "residuals and allocation differ in length");
  double worst = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = residuals[j];
    if (std::isnan(r)) return kInf;
    worst = std::max(worst, x[j] > funded_threshold ? std::abs(r) : std::max(0.0, r));
  }
  return worst;
}

LindahlResult solve_proportional_fairness(const UtilityModel& model, const SolverConfig& config) {
  check_model_budget(model, config);
  require(model.homogeneous(), ErrorCode::kUnsupportedModel,
          "proportional fairness requires linear or cobb_douglas utilities");
  const Instance& inst = model.instance();
  const std::size_t n = inst.agents();
  const std::size_t k = inst.items();
  const double budget = inst.budget();
  const double price = static_cast<double>(n) / budget;
  std::vector<double> lower(k, config.z_floor);
  std::vector<double> start(k, budget / static_cast<double>(k));

  detail::AscentResult run;
  if (model.family() == Family::kLinear) {
    run = priced_linear_pf(utility_matrix(inst), price, start, lower, config.residual_tol,
                           config.max_iters, config.step_init);
  } else {
    // log U_i = sum_j a_ij log x_j, so the objective separates into
    // sum_j A_j log x_j - (n/B) sum_j x_j with A_j the exponent column sums.
    std::vector<double> weight(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) weight[j] += model.exponents()[i * k + j];
    }
    detail::ConcaveProblem p;
    p.dim = k;
    p.value = [&](std::span<const double> x) {
      double v = 0.0;
      for (std::size_t j = 0; j < k; ++j) v += weight[j] * std::log(x[j]) - price * x[j];
      return v;
    };
    p.improvement = [&](std::span<const double> from, std::span<const double> to) {
      double v = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double d = to[j] - from[j];
        v += weight[j] * std::log1p(d / from[j]) - price * d;
      }
      return v;
    };
    p.derivatives = [&](std::span<const double> x, Eigen::VectorXd& g, Eigen::MatrixXd& h) {
      h.setZero();
      for (std::size_t j = 0; j < k; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        g[jj] = weight[j] / x[j] - price;
        h(jj, jj) = -weight[j] / (x[j] * x[j]);
      }
    };
    p.stationarity = [&](std::span<const double> x) {
      return residual_violation(model, x, 0.0);
    };
    detail::AscentOptions opt;
    opt.lower = lower;
    opt.tol = config.residual_tol;
    opt.max_iters = config.max_iters;
    opt.step_init = config.step_init;
    run = detail::projected_newton_ascent(p, start, opt);
    // Every exponent is positive, so no item ever sits at the floor.
    return finish(model, run, run.v);
  }

  std::vector<double> x = run.v;
  for (std::size_t j = 0; j < k; ++j) {
    if (at_floor(x[j], lower[j])) x[j] = 0.0;
  }
  return finish(model, run, std::move(x));
}

double potential_value(const UtilityModel& model, std::span<const double> z) {
  const Instance& inst = model.instance();
  require(z.size() == inst.items(), ErrorCode::kDimensionMismatch,
          "z length must equal the item count");
  const ZTransform zt(model);
  double v = 0.0;
  for (std::size_t i = 0; i < inst.agents(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < inst.items(); ++j) d += inst.utility(i, j) * z[j];
    v += std::log(d);
  }
  double r = 0.0;
  for (std::size_t j = 0; j < inst.items(); ++j) r += zt.integral(j, z[j]);
  return v - static_cast<double>(inst.agents()) / inst.budget() * r;
}

LindahlResult solve_potential(const UtilityModel& model, const SolverConfig& config) {
  check_model_budget(model, config);
  if (model.family() == Family::kCobbDouglas) return solve_proportional_fairness(model, config);
  require(model.non_satiating(), ErrorCode::kUnsupportedModel,
          "the potential program needs non-satiating utilities; smooth saturating ones first");
  if (model.family() == Family::kLinear) return solve_proportional_fairness(model, config);

  const Instance& inst = model.instance();
  const std::size_t k = inst.items();
  const double price = static_cast<double>(inst.agents()) / inst.budget();
  const ZTransform zt(model);
  const Eigen::MatrixXd u = utility_matrix(inst);

  std::vector<double> lower(k);
  std::vector<double> start(k);
  for (std::size_t j = 0; j < k; ++j) {
    lower[j] = zt.z(j, config.z_floor);
    start[j] = zt.z(j, inst.budget() / static_cast<double>(k));
  }
  // Floored items keep their tiny positive spend: with x^alpha items the
  // marginal value at exactly zero is infinite and the residual would be too.
  auto to_x = [&](std::span<const double> z) {
    std::vector<double> x(k);
    for (std::size_t j = 0; j < k; ++j) x[j] = zt.inverse(j, z[j]);
    return x;
  };

  detail::ConcaveProblem p;
  p.dim = k;
  p.value = [&](std::span<const double> z) { return potential_value(model, z); };
  p.improvement = [&](std::span<const double> from, std::span<const double> to) {
    double cost = 0.0;
    for (std::size_t j = 0; j < k; ++j) cost += zt.integral_difference(j, from[j], to[j]);
    return log_ratio_sum(u, from, to) - price * cost;
  };
  p.derivatives = [&](std::span<const double> z, Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    log_sum_derivatives(u, z, g, h);
    for (std::size_t j = 0; j < k; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      g[jj] -= price * zt.ratio(j, z[j]);
      h(jj, jj) -= price * zt.ratio_derivative(j, z[j]);
    }
  };
  p.stationarity = [&](std::span<const double> z) {
    const auto x = to_x(z);
    try {
      const auto r = lindahl_residuals(model, x);
      double worst = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        worst = std::max(worst, at_floor(z[j], lower[j]) ? std::max(0.0, r[j]) : std::abs(r[j]));
      }
      return std::isnan(worst) ? kInf : worst;
    } catch (const DegenerateAgentError&) {
      return kInf;
    }
  };
  detail::AscentOptions opt;
  opt.lower = lower;
  opt.tol = config.residual_tol;
  opt.max_iters = config.max_iters;
  opt.step_init = config.step_init;
  const auto run = detail::projected_newton_ascent(p, start, opt);
  return finish(model, run, to_x(run.v));
}

LindahlResult solve_proportional_fairness_bounded(const UtilityModel& model, double lower,
                                                  double total, const SolverConfig& config) {
  check_model_budget(model, config);
  require(model.family() == Family::kLinear, ErrorCode::kUnsupportedModel,
          "bounded proportional fairness is implemented for linear utilities");
  const Instance& inst = model.instance();
  const std::size_t k = inst.items();
  require(lower >= 0.0 && total > 0.0, ErrorCode::kInvalidArgument,
          "bounds must be nonnegative with a positive total");
  require(static_cast<double>(k) * lower < total, ErrorCode::kInfeasible,
          "the per-item floor leaves no room under the total");
  const Eigen::MatrixXd u = utility_matrix(inst);
  const double floor = std::max(lower, config.z_floor);
  const std::vector<double> bounds(k, floor);

  // Spend S(lambda) at the optimum of the priced problem decreases in lambda;
  // the constrained optimum is the priced one with S(lambda) = total.
  std::vector<double> x(k, total / static_cast<double>(k));
  const double tol = std::min(config.residual_tol, 1e-12);
  auto spend_at = [&](double lambda, detail::AscentResult& run) {
    run = priced_linear_pf(u, lambda, x, bounds, tol, config.max_iters, config.step_init);
    x = run.v;
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  };

  detail::AscentResult run;
  double lo = static_cast<double>(inst.agents()) / total;
  double hi = lo;
  // Feasible start: every budget-exhausting point is optimal for some lambda
  // in [n/total, ...); with a floor the multiplier can only drop below n/total.
  double s = spend_at(lo, run);
  if (s > total) {
    while (s > total) {
      lo = hi;
      hi *= 2.0;
      s = spend_at(hi, run);
    }
  } else {
    while (s < total) {
      hi = lo;
      lo *= 0.5;
      s = spend_at(lo, run);
      if (lo < 1e-300) break;
    }
  }
  std::size_t total_iters = 0;
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-15; ++it) {
    const double mid = std::sqrt(lo * hi);
    s = spend_at(mid, run);
    total_iters += run.iterations;
    if (std::abs(s - total) <= 1e-15 * total) break;
    (s > total ? lo : hi) = mid;
  }
  // Remove the last rounding drift so the result sits on the budget face.
  const double slack = total - s;
  double free_mass = 0.0;
  for (double v : x) {
    if (!at_floor(v, floor)) free_mass += v - floor;
  }
  if (free_mass > 0.0) {
    for (double& v : x) {
      if (!at_floor(v, floor)) v += slack * (v - floor) / free_mass;
    }
  }
  LindahlResult out;
  out.x.x = x;
  out.residuals = lindahl_residuals(model, x);
  out.iterations = total_iters + run.iterations;
  out.converged = run.converged;
  out.line_search_failed = run.line_search_failed;
  for (const auto& [i, v] : run.trace) out.trace.push_back({i, v});
  out.objective = run.values;
  return out;
}

std::vector<double> quadratic_voting_direction(const UtilityModel& model, std::size_t agent,
                                               std::span<const double> x) {
  auto g = utility_gradient(model, agent, x).values;
  double norm = 0.0;
  for (double v : g) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateAgentError(agent, "agent " + std::to_string(agent) +
                                          " reports no usable direction at this allocation");
  }
  for (double& v : g) v /= norm;
  return g;
}

std::vector<double> sgd_gradient_sample(const UtilityModel& model, std::size_t agent,
                                        std::span<const double> x) {
  // For degree-1 homogeneous U, x . grad U = U, so the direction d alone
  // recovers grad log U = d / (x . d).
  auto d = quadratic_voting_direction(model, agent, x);
  double dot = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) dot += x[j] * d[j];
  if (!(dot > 0.0)) {
    throw DegenerateAgentError(agent, "agent " + std::to_string(agent) +
                                          " has zero utility at this allocation");
  }
  const double inv_budget = 1.0 / model.instance().budget();
  for (double& v : d) v = v / dot - inv_budget;
  return d;
}

std::vector<double> welfare_gradient(const UtilityModel& model, std::span<const double> x) {
  const Instance& inst = model.instance();
  const std::size_t n = inst.agents();
  const std::size_t k = inst.items();
  const auto w = marginal_shares(model, x);
  std::vector<double> g(k, -1.0 / inst.budget());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) g[j] += w[i * k + j] / static_cast<double>(n);
  }
  return g;
}

LindahlResult sgd_elicitation(const UtilityModel& model, const SgdOptions& options) {
  require(model.homogeneous(), ErrorCode::kUnsupportedModel,
          "gradient elicitation requires linear or cobb_douglas utilities");
  require(options.rounds > 0, ErrorCode::kInvalidArgument, "rounds must be positive");
  require(options.step_scale > 0.0 && options.x_floor > 0.0, ErrorCode::kInvalidArgument,
          "step_scale and x_floor must be positive");
  const Instance& inst = model.instance();
  const std::size_t n = inst.agents();
  const std::size_t k = inst.items();
  const double budget = inst.budget();
  const double floor = options.x_floor * budget;

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> x(k, budget / static_cast<double>(k));

  LindahlResult out;
  auto record = [&](std::size_t t) {
    const double v = residual_violation(model, x, 2.0 * floor);
    out.trace.push_back({t, v});
  };
  const std::size_t every = std::max<std::size_t>(options.trace_every, 1);
  record(0);
  for (std::size_t t = 1; t <= options.rounds; ++t) {
    const auto g = sgd_gradient_sample(model, pick(rng), x);
    const double eta = options.step_scale * budget * budget /
                       std::pow(static_cast<double>(t), options.step_exponent);
    for (std::size_t j = 0; j < k; ++j) x[j] = std::max(floor, x[j] + eta * g[j]);
    if (t % every == 0 || t == options.rounds) record(t);
  }
  out.x.x = x;
  out.residuals = lindahl_residuals(model, x);
  out.iterations = options.rounds;
  out.converged = kkt_violation(out.residuals, x, 2.0 * floor) <= options.tolerance;
  return out;
}

PriceVectors recover_prices(const UtilityModel& model, std::span<const double> x) {
  const Instance& inst = model.instance();
  PriceVectors pv;
  pv.agents = inst.agents();
  pv.items = inst.items();
  pv.p = marginal_shares(model, x);
  const double scale = inst.budget() / static_cast<double>(inst.agents());
  for (double& v : pv.p) v *= scale;
  return pv;
}

}  // namespace pbcore
