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

// Problem instances, utility families and allocations.
//
// Every family except Cobb-Douglas is scalar separable:
//
//   U_i(x) = sum_j u_ij f_j(x_j)
//
// with f_j fixed by the family. Cobb-Douglas is U_i(x) = prod_j x_j^a_ij and
// only enters the solvers through its gradient direction, which is all the
// equilibrium conditions depend on.

#ifndef PBCORE_MODEL_HPP
#define PBCORE_MODEL_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pbcore {

class Instance {
 public:
  enum class ZeroRows { kReject, kAllow };

  // utilities is n*k row-major. sizes, when given, has k strictly positive
  // entries. Item names default to "item1".."itemk".
  Instance(std::size_t agents, std::size_t items, double budget,
           std::vector<double> utilities,
           std::optional<std::vector<double>> sizes = std::nullopt,
           std::vector<std::string> item_names = {},
           ZeroRows zero_rows = ZeroRows::kReject);

  std::size_t agents() const noexcept { return n_; }
  std::size_t items() const noexcept { return k_; }
  double budget() const noexcept { return budget_; }

  double utility(std::size_t agent, std::size_t item) const noexcept {
    return utilities_[agent * k_ + item];
  }
  std::span<const double> row(std::size_t agent) const noexcept {
    return {utilities_.data() + agent * k_, k_};
  }
  std::span<const double> utilities() const noexcept { return utilities_; }

  bool has_sizes() const noexcept { return sizes_.has_value(); }
  std::span<const double> sizes() const;
  double size(std::size_t item) const { return sizes()[item]; }

  const std::vector<std::string>& item_names() const noexcept { return names_; }

  // Number of agents with u_ij > 0, i.e. approval votes for an item.
  std::size_t votes(std::size_t item) const noexcept;

  Instance with_utilities(std::vector<double> utilities) const;
  Instance with_budget(double budget) const;
  Instance with_sizes(std::optional<std::vector<double>> sizes) const;

 private:
  std::size_t n_;
  std::size_t k_;
  double budget_;
  std::vector<double> utilities_;
  std::optional<std::vector<double>> sizes_;
  std::vector<std::string> names_;
  ZeroRows zero_rows_;
};

enum class Family {
  kLinear,
  kPowerSum,
  kCobbDouglas,
  kSaturating,
  kSmoothedSaturating,
};

const char* family_name(Family family) noexcept;

class UtilityModel {
 public:
  static UtilityModel linear(std::shared_ptr<const Instance> instance);
  // f_j(x) = x^alpha_j with alpha_j in (0, 1].
  static UtilityModel power_sum(std::shared_ptr<const Instance> instance,
                                std::vector<double> alpha);
  // exponents is n*k row-major, every row positive and summing to 1.
  static UtilityModel cobb_douglas(std::shared_ptr<const Instance> instance,
                                   std::vector<double> exponents);
  // Cobb-Douglas with exponents equal to the row-normalised utilities.
  static UtilityModel cobb_douglas(std::shared_ptr<const Instance> instance);
  // f_j(x) = min(x / s_j, 1). Requires item sizes.
  static UtilityModel saturating(std::shared_ptr<const Instance> instance);
  // f_j(x) = x / s_j below s_j and (1/eps)(x/s_j)^eps + 1 - 1/eps above.
  static UtilityModel smoothed_saturating(std::shared_ptr<const Instance> instance,
                                          double eps_smooth);

  Family family() const noexcept { return family_; }
  const Instance& instance() const noexcept { return *instance_; }
  const std::shared_ptr<const Instance>& instance_ptr() const noexcept {
    return instance_;
  }
  std::span<const double> alpha() const noexcept { return alpha_; }
  std::span<const double> exponents() const noexcept { return exponents_; }
  double eps_smooth() const noexcept { return eps_smooth_; }

  // Same family and parameters on another instance of identical shape.
  UtilityModel rebind(std::shared_ptr<const Instance> instance) const;

  bool homogeneous() const noexcept {
    return family_ == Family::kLinear || family_ == Family::kCobbDouglas;
  }
  bool non_satiating() const noexcept {
    return family_ == Family::kLinear || family_ == Family::kPowerSum ||
           family_ == Family::kSmoothedSaturating;
  }
  bool separable() const noexcept { return family_ != Family::kCobbDouglas; }

  // f_j(x), f_j'(x) and x f_j'(x) for the separable families. At the
  // saturating kink x == s_j the derivative is the left derivative 1/s_j.
  double item_value(std::size_t item, double x) const;
  double item_derivative(std::size_t item, double x) const;
  double item_elasticity(std::size_t item, double x) const;

 private:
  UtilityModel(Family family, std::shared_ptr<const Instance> instance);

  Family family_;
  std::shared_ptr<const Instance> instance_;
  std::vector<double> alpha_;
  std::vector<double> exponents_;
  double eps_smooth_ = 1.0;
};

enum class AllocationKind { kFractional, kIntegral };

struct Allocation {
  std::vector<double> x;
  AllocationKind kind = AllocationKind::kFractional;

  double total() const noexcept;
};

// Checks x >= 0, sum x <= B (1 + tol) and, for integral allocations,
// x_j in {0, s_j}. Throws Error on violation.
void validate_allocation(const Instance& instance, const Allocation& allocation,
                         double budget_tol = 1e-9);

double evaluate_utility(const UtilityModel& model, std::size_t agent,
                        std::span<const double> x);

struct Gradient {
  std::vector<double> values;
  // Set when some coordinate sits exactly on a saturating kink and the left
  // derivative was returned.
  bool at_kink = false;
};

Gradient utility_gradient(const UtilityModel& model, std::size_t agent,
                          std::span<const double> x);

// Per-agent normalised marginal values
//
//   w_ij = (dU_i/dx_j) / (sum_m x_m dU_i/dx_m)
//
// returned n*k row-major. Throws DegenerateAgentError when the denominator of
// some agent vanishes.
std::vector<double> marginal_shares(const UtilityModel& model,
                                    std::span<const double> x);

// Change of variables z = x f'(x) for non-satiating item functions, with
// inverse h(z) = x, ratio r(z) = h(z)/z = 1/f'(x) and R(z) = integral_0^z r.
class ZTransform {
 public:
  explicit ZTransform(const UtilityModel& model);

  std::size_t items() const noexcept { return k_; }
  double z(std::size_t item, double x) const;
  double inverse(std::size_t item, double z) const;
  double ratio(std::size_t item, double z) const;
  double ratio_derivative(std::size_t item, double z) const;
  double integral(std::size_t item, double z) const;
  // integral(to) - integral(from) without cancellation for nearby points.
  double integral_difference(std::size_t item, double from, double to) const;

 private:
  Family family_;
  std::size_t k_;
  std::vector<double> alpha_;
  std::vector<double> sizes_;
  double eps_ = 1.0;
};

ZTransform z_transform(const UtilityModel& model);

}  // namespace pbcore

#endif  // PBCORE_MODEL_HPP
