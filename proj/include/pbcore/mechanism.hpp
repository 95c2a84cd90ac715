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

// Approximately truthful randomized allocation for linear utilities.
//
// Utilities and budget are normalised (B = 1, every row sums to 1) and the
// allocation is drawn from P = {x >= n^-gamma, sum x <= 1} with density
// proportional to exp(eps q(x)), where
//
//   q(x) = n - n^-gamma max_{y in P} sum_i U_i(y) / U_i(x).
//
// Public entry points accept instances and allocations in their own units;
// values such as q and the certificates are in normalised units.

#ifndef PBCORE_MECHANISM_HPP
#define PBCORE_MECHANISM_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pbcore/model.hpp"

namespace pbcore {

struct MechanismConfig {
  double gamma = 0.5;
  double epsilon_priv = 0.1;
  std::size_t chain_steps = 20000;  // including burn-in
  std::size_t burn_in = 5000;
  std::uint64_t seed = 0;

  void validate(std::size_t agents, std::size_t items) const;
};

class FeasibleSet {
 public:
  FeasibleSet(std::size_t agents, std::size_t items, double gamma);

  std::size_t items() const noexcept { return k_; }
  double lower() const noexcept { return lower_; }
  bool nonempty() const noexcept {
    return static_cast<double>(k_) * lower_ <= 1.0 + 1e-12;
  }
  // k n^-gamma < 1. The sampler and the certificate need this.
  bool has_interior() const noexcept { return static_cast<double>(k_) * lower_ < 1.0; }
  bool contains(std::span<const double> x, double tol = 1e-12) const;
  // Parameter range [t_lo, t_hi] with x + t d in P.
  std::pair<double, double> chord(std::span<const double> x, std::span<const double> d) const;
  std::vector<double> interior_point() const;

 private:
  std::size_t k_;
  double lower_;
};

// Normalised copy: budget 1 and utility rows scaled to sum to 1.
Instance normalize_profile(const Instance& instance);

struct InnerMax {
  double value = 0.0;
  std::vector<double> y_star;  // in the caller's money units
  std::size_t best_item = 0;
};

InnerMax inner_max(const Instance& instance, std::span<const double> x, double gamma);
double score_q(const Instance& instance, std::span<const double> x, double gamma);

// Maximiser of sum_i log U_i over P, in money units. score_q there equals
// n - n^(1 - gamma).
std::vector<double> proportional_fairness_in_feasible_set(const Instance& instance, double gamma);

struct SamplerDiagnostics {
  std::size_t steps = 0;
  std::size_t burn_in = 0;
  std::size_t proposals = 0;
  std::size_t max_proposals_in_step = 0;
  double acceptance_rate = 0.0;
  double mean_chord_length = 0.0;
  double final_q = 0.0;
};

struct MechanismSample {
  Allocation x;
  SamplerDiagnostics diagnostics;
};

MechanismSample sample_mechanism(const Instance& instance, const MechanismConfig& config);

// Post-burn-in states, one every `thin` steps, in money units.
std::vector<std::vector<double>> sample_chain(const Instance& instance,
                                              const MechanismConfig& config,
                                              std::size_t samples, std::size_t thin,
                                              SamplerDiagnostics* diagnostics = nullptr);

// ((k - 1) n^-gamma + a / n) / (1 - k n^-gamma) with a = inner_max - n.
double approximation_certificate(const Instance& instance, std::span<const double> x,
                                 double gamma);

// 1/eps > k n / ((n - k^2) ln n), with n > k^2.
bool high_probability_precondition(std::size_t agents, std::size_t items, double epsilon_priv);

// ((k - 1) n^-gamma + 2 (k + 1) eps^-1 n^(gamma - 1) ln n) / (1 - k n^-gamma).
double high_probability_bound(std::size_t agents, std::size_t items, double gamma,
                              double epsilon_priv);

struct ManipulationEstimate {
  // Mean over trials of E[U_i(misreport)] - E[U_i(truth)], true utilities,
  // normalised units.
  double gain = 0.0;
  double std_error = 0.0;
  double truthful_utility = 0.0;
  std::size_t trials = 0;
};

// Paired chains: trial t runs the truthful and the misreported profile from
// the same seed and averages the agent's true utility over post-burn-in
// states. Trials run on worker threads.
ManipulationEstimate manipulation_gain(const Instance& instance, std::size_t agent,
                                       std::span<const double> misreport,
                                       const MechanismConfig& config, std::size_t trials);

}  // namespace pbcore

#endif  // PBCORE_MECHANISM_HPP
