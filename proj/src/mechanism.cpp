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

#include "pbcore/mechanism.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <thread>

#include "pbcore/error.hpp"
#include "pbcore/lindahl.hpp"

namespace pbcore {
namespace {

constexpr double kLevelDrop = 25.0;
constexpr std::size_t kMaxProposals = 10000;
// Accept the secant envelope outright when it costs at most e^3 proposals.
constexpr double kCheapEnvelope = 3.0;
constexpr int kGoldenIters = 32;
constexpr int kLevelIters = 20;

double lower_bound_for(std::size_t agents, double gamma) {
  return std::pow(static_cast<double>(agents), -gamma);
}

// Evaluates q on normalised inputs.
class Scorer {
 public:
  Scorer(const Instance& normalized, double gamma)
      : n_(normalized.agents()),
        k_(normalized.items()),
        u_(normalized.utilities().begin(), normalized.utilities().end()),
        lower_(lower_bound_for(n_, gamma)),
        top_weight_(std::max(0.0, 1.0 - static_cast<double>(k_) * lower_)),
        c_(k_) {}

  std::size_t agents() const noexcept { return n_; }
  std::size_t items() const noexcept { return k_; }

  // Fills c_j = sum_i u_ij / U_i(x) and returns the best item.
  std::size_t column_ratios(std::span<const double> x) const {
    std::fill(c_.begin(), c_.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = u_.data() + i * k_;
      double ux = 0.0;
      for (std::size_t j = 0; j < k_; ++j) ux += row[j] * x[j];
      const double inv = 1.0 / ux;
      for (std::size_t j = 0; j < k_; ++j) c_[j] += row[j] * inv;
    }
    return static_cast<std::size_t>(std::max_element(c_.begin(), c_.end()) - c_.begin());
  }

  double inner_value(std::span<const double> x, std::size_t* best = nullptr) const {
    const std::size_t j_star = column_ratios(x);
    if (best) *best = j_star;
    double sum = 0.0;
    for (double c : c_) sum += c;
    return lower_ * sum + top_weight_ * c_[j_star];
  }

  double q(std::span<const double> x) const {
    return static_cast<double>(n_) - lower_ * inner_value(x);
  }

  double utility(std::size_t agent, std::span<const double> x) const {
    const double* row = u_.data() + agent * k_;
    double s = 0.0;
    for (std::size_t j = 0; j < k_; ++j) s += row[j] * x[j];
    return s;
  }

  double lower() const noexcept { return lower_; }
  double top_weight() const noexcept { return top_weight_; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> u_;
  double lower_;
  double top_weight_;
  mutable std::vector<double> c_;
};

// Hit-and-run on P targeting exp(eps q). Each step draws a Gaussian
// direction and samples the chord exactly by rejection under the maximum
// of the (concave) log-density restricted to a level set.
class Chain {
 public:
  Chain(const Instance& normalized, const MechanismConfig& config)
      : scorer_(normalized, config.gamma),
        set_(normalized.agents(), normalized.items(), config.gamma),
        eps_(config.epsilon_priv),
        rng_(config.seed),
        x_(set_.interior_point()),
        d_(x_.size()),
        y_(x_.size()) {}

  const std::vector<double>& state() const noexcept { return x_; }
  const Scorer& scorer() const noexcept { return scorer_; }

  void step() {
    for (double& v : d_) v = gauss_(rng_);
    const auto [lo, hi] = set_.chord(x_, d_);
    chord_total_ += hi - lo;
    ++steps_;

    auto f = [&](double t) {
      for (std::size_t j = 0; j < x_.size(); ++j) y_[j] = x_[j] + t * d_[j];
      return eps_ * scorer_.q(y_);
    };

    // Secant extrapolation of a concave function bounds it from above; when
    // that bound is already tight the whole chord is a cheap envelope.
    const double mid = 0.5 * (lo + hi);
    const double f_lo = f(lo), f_mid = f(mid), f_hi = f(hi);
    const double bound = std::max({f_mid, 2.0 * f_mid - f_hi, 2.0 * f_mid - f_lo});
    double a = lo, b = hi, top = bound;
    if (!(bound - std::min({f_lo, f_hi}) <= kCheapEnvelope) || !std::isfinite(bound)) {
      double left = lo, right = hi;
      const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
      double p = right - ratio * (right - left), r = left + ratio * (right - left);
      double fp = f(p), fr = f(r);
      for (int it = 0; it < kGoldenIters; ++it) {
        if (fp < fr) {
          left = p;
          p = r;
          fp = fr;
          r = left + ratio * (right - left);
          fr = f(r);
        } else {
          right = r;
          r = p;
          fr = fp;
          p = right - ratio * (right - left);
          fp = f(p);
        }
      }
      const double peak = 0.5 * (left + right);
      top = std::max({f(peak), fp, fr});
      const double level = top - kLevelDrop;
      if (f_lo < level) a = level_crossing(f, lo, peak, level, true);
      if (f_hi < level) b = level_crossing(f, peak, hi, level, false);
    }

    std::size_t tries = 0;
    while (true) {
      if (++tries > kMaxProposals) {
        fail(ErrorCode::kSampler, "hit-and-run rejection sampler exceeded its proposal cap");
      }
      const double t = a + (b - a) * unit_(rng_);
      const double ft = f(t);
      if (std::log(unit_(rng_)) <= ft - top) {
        for (std::size_t j = 0; j < x_.size(); ++j) x_[j] += t * d_[j];
        project_into_set();
        break;
      }
    }
    proposals_ += tries;
    max_tries_ = std::max(max_tries_, tries);
  }

  SamplerDiagnostics diagnostics(std::size_t burn_in) const {
    SamplerDiagnostics out;
    out.steps = steps_;
    out.burn_in = burn_in;
    out.proposals = proposals_;
    out.max_proposals_in_step = max_tries_;
    out.acceptance_rate =
        proposals_ ? static_cast<double>(steps_) / static_cast<double>(proposals_) : 1.0;
    out.mean_chord_length = steps_ ? chord_total_ / static_cast<double>(steps_) : 0.0;
    out.final_q = scorer_.q(x_);
    return out;
  }

 private:
  template <class F>
  static double level_crossing(F& f, double below, double above, double level, bool rising) {
    // rising: f(below) < level <= f(above); otherwise mirrored.
    double inside = rising ? above : below;
    double outside = rising ? below : above;
    for (int it = 0; it < kLevelIters; ++it) {
      const double m = 0.5 * (inside + outside);
      (f(m) >= level ? inside : outside) = m;
    }
    return outside;
  }

  // Rounding can leave a coordinate a hair outside P.
  void project_into_set() {
    const double lower = set_.lower();
    double sum = 0.0;
    for (double& v : x_) {
      v = std::max(v, lower);
      sum += v;
    }
    if (sum > 1.0) {
      const double excess = sum - 1.0;
      double free_mass = 0.0;
      for (double v : x_) free_mass += v - lower;
      for (double& v : x_) v -= excess * (v - lower) / free_mass;
    }
  }

  Scorer scorer_;
  FeasibleSet set_;
  double eps_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_;
  std::uniform_real_distribution<double> unit_;
  std::vector<double> x_;
  std::vector<double> d_;
  std::vector<double> y_;
  std::size_t steps_ = 0;
  std::size_t proposals_ = 0;
  std::size_t max_tries_ = 0;
  double chord_total_ = 0.0;
};

std::vector<double> to_unit_budget(const Instance& instance, std::span<const double> x) {
  require(x.size() == instance.items(), ErrorCode::kDimensionMismatch,
          "allocation length differs from the number of items");
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v /= instance.budget();
  return out;
}

std::vector<double> to_money(const Instance& instance, std::vector<double> x) {
  for (double& v : x) v *= instance.budget();
  return x;
}

void check_interior(const FeasibleSet& set) {
  require(set.has_interior(), ErrorCode::kInfeasible,
          "k n^-gamma >= 1 leaves the feasible set without an interior");
}

void check_nonempty(const FeasibleSet& set) {
  require(set.nonempty(), ErrorCode::kInfeasible, "k n^-gamma > 1 empties the feasible set");
}

void check_member(const FeasibleSet& set, std::span<const double> unit_x) {
  require(set.contains(unit_x, 1e-9), ErrorCode::kInvalidArgument,
          "allocation lies outside the feasible set");
}

}  // namespace

void MechanismConfig::validate(std::size_t agents, std::size_t items) const {
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  require(epsilon_priv > 0.0 && std::isfinite(epsilon_priv), ErrorCode::kInvalidArgument,
          "epsilon_priv must be positive");
  require(chain_steps > 0 && burn_in <= chain_steps, ErrorCode::kInvalidArgument,
          "chain_steps must be positive and at least burn_in");
  require(agents > 0 && items > 0, ErrorCode::kInvalidArgument, "empty instance");
  check_interior(FeasibleSet(agents, items, gamma));
}

FeasibleSet::FeasibleSet(std::size_t agents, std::size_t items, double gamma)
    : k_(items), lower_(lower_bound_for(agents, gamma)) {
  require(agents > 0 && items > 0, ErrorCode::kInvalidArgument, "empty instance");
}

bool FeasibleSet::contains(std::span<const double> x, double tol) const {
  if (x.size() != k_) return false;
  double sum = 0.0;
  for (double v : x) {
    if (v < lower_ - tol) return false;
    sum += v;
  }
  return sum <= 1.0 + tol;
}

std::pair<double, double> FeasibleSet::chord(std::span<const double> x,
                                             std::span<const double> d) const {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double sum = 0.0, dsum = 0.0;
  for (std::size_t j = 0; j < k_; ++j) {
    sum += x[j];
    dsum += d[j];
    if (d[j] > 0.0) {
      lo = std::max(lo, (lower_ - x[j]) / d[j]);
    } else if (d[j] < 0.0) {
      hi = std::min(hi, (lower_ - x[j]) / d[j]);
    }
  }
  if (dsum > 0.0) {
    hi = std::min(hi, (1.0 - sum) / dsum);
  } else if (dsum < 0.0) {
    lo = std::max(lo, (1.0 - sum) / dsum);
  }
  return {std::min(lo, 0.0), std::max(hi, 0.0)};
}

std::vector<double> FeasibleSet::interior_point() const {
  check_interior(*this);
  const double free = 1.0 - static_cast<double>(k_) * lower_;
  return std::vector<double>(k_, lower_ + free / static_cast<double>(k_ + 1));
}

Instance normalize_profile(const Instance& instance) {
  const std::size_t n = instance.agents(), k = instance.items();
  std::vector<double> u(instance.utilities().begin(), instance.utilities().end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += u[i * k + j];
    if (!(s > 0.0)) throw DegenerateAgentError(i, "agent has no positive utility");
    for (std::size_t j = 0; j < k; ++j) u[i * k + j] /= s;
  }
  return Instance(n, k, 1.0, std::move(u), std::nullopt, instance.item_names());
}

InnerMax inner_max(const Instance& instance, std::span<const double> x, double gamma) {
  const Instance unit = normalize_profile(instance);
  const Scorer scorer(unit, gamma);
  const FeasibleSet set(unit.agents(), unit.items(), gamma);
  check_nonempty(set);
  const std::vector<double> y = to_unit_budget(instance, x);
  check_member(set, y);
  InnerMax out;
  out.value = scorer.inner_value(y, &out.best_item);
  out.y_star.assign(unit.items(), scorer.lower());
  out.y_star[out.best_item] += scorer.top_weight();
  out.y_star = to_money(instance, std::move(out.y_star));
  return out;
}

double score_q(const Instance& instance, std::span<const double> x, double gamma) {
  const InnerMax m = inner_max(instance, x, gamma);
  return static_cast<double>(instance.agents()) -
         lower_bound_for(instance.agents(), gamma) * m.value;
}

std::vector<double> proportional_fairness_in_feasible_set(const Instance& instance,
                                                          double gamma) {
  auto unit = std::make_shared<const Instance>(normalize_profile(instance));
  const FeasibleSet set(unit->agents(), unit->items(), gamma);
  check_interior(set);
  SolverConfig cfg = SolverConfig::for_budget(1.0);
  cfg.residual_tol = 1e-12;
  const LindahlResult r =
      solve_proportional_fairness_bounded(UtilityModel::linear(unit), set.lower(), 1.0, cfg);
  return to_money(instance, r.x.x);
}

MechanismSample sample_mechanism(const Instance& instance, const MechanismConfig& config) {
  config.validate(instance.agents(), instance.items());
  Chain chain(normalize_profile(instance), config);
  for (std::size_t s = 0; s < config.chain_steps; ++s) chain.step();
  MechanismSample out;
  out.x.x = to_money(instance, chain.state());
  out.diagnostics = chain.diagnostics(config.burn_in);
  return out;
}

std::vector<std::vector<double>> sample_chain(const Instance& instance,
                                              const MechanismConfig& config,
                                              std::size_t samples, std::size_t thin,
                                              SamplerDiagnostics* diagnostics) {
  config.validate(instance.agents(), instance.items());
  require(thin > 0, ErrorCode::kInvalidArgument, "thin must be positive");
  Chain chain(normalize_profile(instance), config);
  for (std::size_t s = 0; s < config.burn_in; ++s) chain.step();
  std::vector<std::vector<double>> out;
  out.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t t = 0; t < thin; ++t) chain.step();
    out.push_back(to_money(instance, chain.state()));
  }
  if (diagnostics) *diagnostics = chain.diagnostics(config.burn_in);
  return out;
}

double approximation_certificate(const Instance& instance, std::span<const double> x,
                                 double gamma) {
  const std::size_t n = instance.agents(), k = instance.items();
  const FeasibleSet set(n, k, gamma);
  check_interior(set);
  check_member(set, to_unit_budget(instance, x));
  const double nd = static_cast<double>(n);
  const double lower = set.lower();
  const double excess = inner_max(instance, x, gamma).value - nd;
  return (static_cast<double>(k - 1) * lower + excess / nd) /
         (1.0 - static_cast<double>(k) * lower);
}

bool high_probability_precondition(std::size_t agents, std::size_t items,
                                   double epsilon_priv) {
  const double n = static_cast<double>(agents), k = static_cast<double>(items);
  if (agents < 2 || n <= k * k || !(epsilon_priv > 0.0)) return false;
  return 1.0 / epsilon_priv > k * n / ((n - k * k) * std::log(n));
}

double high_probability_bound(std::size_t agents, std::size_t items, double gamma,
                              double epsilon_priv) {
  const double n = static_cast<double>(agents), k = static_cast<double>(items);
  const double lower = lower_bound_for(agents, gamma);
  require(k * lower < 1.0, ErrorCode::kInfeasible,
          "k n^-gamma >= 1 leaves the feasible set without an interior");
  require(epsilon_priv > 0.0, ErrorCode::kInvalidArgument, "epsilon_priv must be positive");
  const double spread =
      2.0 * (k + 1.0) / epsilon_priv * std::pow(n, gamma - 1.0) * std::log(n);
  return ((k - 1.0) * lower + spread) / (1.0 - k * lower);
}

ManipulationEstimate manipulation_gain(const Instance& instance, std::size_t agent,
                                       std::span<const double> misreport,
                                       const MechanismConfig& config, std::size_t trials) {
  config.validate(instance.agents(), instance.items());
  require(agent < instance.agents(), ErrorCode::kInvalidArgument, "agent index out of range");
  require(misreport.size() == instance.items(), ErrorCode::kDimensionMismatch,
          "misreport length differs from the number of items");
  require(trials > 0, ErrorCode::kInvalidArgument, "trials must be positive");
  require(config.burn_in < config.chain_steps, ErrorCode::kInvalidArgument,
          "averaging needs at least one post-burn-in step");

  const Instance truthful = normalize_profile(instance);
  std::vector<double> lied(instance.utilities().begin(), instance.utilities().end());
  std::copy(misreport.begin(), misreport.end(),
            lied.begin() + static_cast<std::ptrdiff_t>(agent * instance.items()));
  const Instance reported = normalize_profile(instance.with_utilities(std::move(lied)));
  const Scorer judge(truthful, config.gamma);

  auto average_utility = [&](const Instance& profile, std::uint64_t seed) {
    MechanismConfig c = config;
    c.seed = seed;
    Chain chain(profile, c);
    double total = 0.0;
    for (std::size_t s = 0; s < config.chain_steps; ++s) {
      chain.step();
      if (s >= config.burn_in) total += judge.utility(agent, chain.state());
    }
    return total / static_cast<double>(config.chain_steps - config.burn_in);
  };

  std::vector<double> gains(trials), honest(trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    try {
      for (std::size_t t = next++; t < trials && !failed; t = next++) {
        const std::uint64_t seed = config.seed + 0x9e3779b97f4a7c15ULL * (t + 1);
        honest[t] = average_utility(truthful, seed);
        gains[t] = average_utility(reported, seed) - honest[t];
      }
    } catch (...) {
      if (!failed.exchange(true)) error = std::current_exception();
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(trials, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  ManipulationEstimate out;
  out.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    out.gain += gains[t];
    out.truthful_utility += honest[t];
  }
  out.gain /= static_cast<double>(trials);
  out.truthful_utility /= static_cast<double>(trials);
  if (trials > 1) {
    double ss = 0.0;
    for (double g : gains) ss += (g - out.gain) * (g - out.gain);
    out.std_error = std::sqrt(ss / static_cast<double>(trials - 1) / static_cast<double>(trials));
  }
  return out;
}

}  // namespace pbcore
