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

#include "pbcore/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "pbcore/error.hpp"

namespace pbcore {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kUnsupportedModel: return "unsupported_model";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kTooLarge: return "too_large";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kSampler: return "sampler_error";
    case ErrorCode::kInternal: return "internal_error";
  }
  return "unknown";
}

const char* family_name(Family family) noexcept {
  switch (family) {
    case Family::kLinear: return "linear";
    case Family::kPowerSum: return "power_sum";
    case Family::kCobbDouglas: return "cobb_douglas";
    case Family::kSaturating: return "saturating";
    case Family::kSmoothedSaturating: return "smoothed_saturating";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Instance

Instance::Instance(std::size_t agents, std::size_t items, double budget,
                   std::vector<double> utilities,
                   std::optional<std::vector<double>> sizes,
                   std::vector<std::string> item_names, ZeroRows zero_rows)
    : n_(agents),
      k_(items),
      budget_(budget),
      utilities_(std::move(utilities)),
      sizes_(std::move(sizes)),
      names_(std::move(item_names)),
      zero_rows_(zero_rows) {
  require(n_ >= 1, ErrorCode::kInvalidArgument, "instance needs at least one agent");
  require(k_ >= 1, ErrorCode::kInvalidArgument, "instance needs at least one item");
  require(std::isfinite(budget_) && budget_ > 0.0, ErrorCode::kInvalidArgument,
          "budget must be positive and finite");
  require(utilities_.size() == n_ * k_, ErrorCode::kDimensionMismatch,
          "utility matrix must have n*k entries");
  for (std::size_t i = 0; i < n_; ++i) {
    bool any_positive = false;
    for (std::size_t j = 0; j < k_; ++j) {
      const double u = utilities_[i * k_ + j];
      if (!std::isfinite(u) || u < 0.0) {
        std::ostringstream msg;
        msg << "utility of agent " << i << " for item " << j
            << " must be a finite nonnegative number";
        fail(ErrorCode::kInvalidArgument, msg.str());
      }
      any_positive = any_positive || u > 0.0;
    }
    if (!any_positive && zero_rows_ == ZeroRows::kReject) {
      fail(ErrorCode::kInvalidArgument,
           "agent " + std::to_string(i) + " has zero utility for every item");
    }
  }
  if (sizes_) {
    require(sizes_->size() == k_, ErrorCode::kDimensionMismatch,
            "sizes must have one entry per item");
    for (double s : *sizes_) {
      require(std::isfinite(s) && s > 0.0, ErrorCode::kInvalidArgument,
              "item sizes must be positive and finite");
    }
  }
  if (names_.empty()) {
    names_.reserve(k_);
    for (std::size_t j = 0; j < k_; ++j) names_.push_back("item" + std::to_string(j + 1));
  }
  require(names_.size() == k_, ErrorCode::kDimensionMismatch,
          "item_names must have one entry per item");
  std::set<std::string> unique(names_.begin(), names_.end());
  require(unique.size() == k_, ErrorCode::kInvalidArgument, "item names must be unique");
}

std::span<const double> Instance::sizes() const {
  require(sizes_.has_value(), ErrorCode::kInvalidArgument, "instance has no item sizes");
  return *sizes_;
}

std::size_t Instance::votes(std::size_t item) const noexcept {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n_; ++i) count += utilities_[i * k_ + item] > 0.0;
  return count;
}

Instance Instance::with_utilities(std::vector<double> utilities) const {
  return Instance(n_, k_, budget_, std::move(utilities), sizes_, names_, zero_rows_);
}

Instance Instance::with_budget(double budget) const {
  return Instance(n_, k_, budget, utilities_, sizes_, names_, zero_rows_);
}

Instance Instance::with_sizes(std::optional<std::vector<double>> sizes) const {
  return Instance(n_, k_, budget_, utilities_, std::move(sizes), names_, zero_rows_);
}

// ---------------------------------------------------------------------------
// UtilityModel

UtilityModel::UtilityModel(Family family, std::shared_ptr<const Instance> instance)
    : family_(family), instance_(std::move(instance)) {
  require(instance_ != nullptr, ErrorCode::kInvalidArgument, "model needs an instance");
}

UtilityModel UtilityModel::linear(std::shared_ptr<const Instance> instance) {
  return UtilityModel(Family::kLinear, std::move(instance));
}

UtilityModel UtilityModel::power_sum(std::shared_ptr<const Instance> instance,
                                     std::vector<double> alpha) {
  UtilityModel model(Family::kPowerSum, std::move(instance));
  require(alpha.size() == model.instance().items(), ErrorCode::kDimensionMismatch,
          "power_sum needs one exponent per item");
  for (double a : alpha) {
    require(a > 0.0 && a <= 1.0, ErrorCode::kInvalidArgument,
            "power_sum exponents must lie in (0, 1]");
  }
  model.alpha_ = std::move(alpha);
  return model;
}

UtilityModel UtilityModel::cobb_douglas(std::shared_ptr<const Instance> instance,
                                        std::vector<double> exponents) {
  UtilityModel model(Family::kCobbDouglas, std::move(instance));
  const std::size_t n = model.instance().agents();
  const std::size_t k = model.instance().items();
  require(exponents.size() == n * k, ErrorCode::kDimensionMismatch,
          "cobb_douglas needs an n*k exponent matrix");
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double a = exponents[i * k + j];
      require(std::isfinite(a) && a > 0.0, ErrorCode::kInvalidArgument,
              "cobb_douglas exponents must be positive");
      sum += a;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::kInvalidArgument,
            "cobb_douglas exponent row " + std::to_string(i) + " must sum to 1");
  }
  model.exponents_ = std::move(exponents);
  return model;
}

UtilityModel UtilityModel::cobb_douglas(std::shared_ptr<const Instance> instance) {
  const std::size_t n = instance->agents();
  const std::size_t k = instance->items();
  std::vector<double> exponents(instance->utilities().begin(), instance->utilities().end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = instance->row(i);
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) exponents[i * k + j] /= sum;
  }
  return cobb_douglas(std::move(instance), std::move(exponents));
}

UtilityModel UtilityModel::saturating(std::shared_ptr<const Instance> instance) {
  require(instance && instance->has_sizes(), ErrorCode::kInvalidArgument,
          "saturating model requires item sizes");
  return UtilityModel(Family::kSaturating, std::move(instance));
}

UtilityModel UtilityModel::smoothed_saturating(std::shared_ptr<const Instance> instance,
                                               double eps_smooth) {
  require(instance && instance->has_sizes(), ErrorCode::kInvalidArgument,
          "smoothed saturating model requires item sizes");
  require(eps_smooth > 0.0 && eps_smooth <= 1.0, ErrorCode::kInvalidArgument,
          "eps_smooth must lie in (0, 1]");
  UtilityModel model(Family::kSmoothedSaturating, std::move(instance));
  model.eps_smooth_ = eps_smooth;
  return model;
}

UtilityModel UtilityModel::rebind(std::shared_ptr<const Instance> instance) const {
  require(instance != nullptr, ErrorCode::kInvalidArgument, "model needs an instance");
  require(instance->agents() == instance_->agents() &&
              instance->items() == instance_->items(),
          ErrorCode::kDimensionMismatch, "rebind requires an instance of the same shape");
  if ((family_ == Family::kSaturating || family_ == Family::kSmoothedSaturating) &&
      !instance->has_sizes()) {
    fail(ErrorCode::kInvalidArgument, "saturating model requires item sizes");
  }
  UtilityModel copy = *this;
  copy.instance_ = std::move(instance);
  return copy;
}

double UtilityModel::item_value(std::size_t item, double x) const {
  switch (family_) {
    case Family::kLinear:
      return x;
    case Family::kPowerSum:
      return std::pow(x, alpha_[item]);
    case Family::kSaturating: {
      const double s = instance_->size(item);
      return std::min(x / s, 1.0);
    }
    case Family::kSmoothedSaturating: {
      const double s = instance_->size(item);
      if (x <= s) return x / s;
      const double e = eps_smooth_;
      return std::pow(x / s, e) / e + 1.0 - 1.0 / e;
    }
    case Family::kCobbDouglas:
      break;
  }
  fail(ErrorCode::kUnsupportedModel, "cobb_douglas utilities are not separable");
}

double UtilityModel::item_derivative(std::size_t item, double x) const {
  switch (family_) {
    case Family::kLinear:
      return 1.0;
    case Family::kPowerSum: {
      const double a = alpha_[item];
      if (a == 1.0) return 1.0;
      if (x <= 0.0) return std::numeric_limits<double>::infinity();
      return a * std::pow(x, a - 1.0);
    }
    case Family::kSaturating: {
      const double s = instance_->size(item);
      return x <= s ? 1.0 / s : 0.0;
    }
    case Family::kSmoothedSaturating: {
      const double s = instance_->size(item);
      if (x <= s) return 1.0 / s;
      return std::pow(x / s, eps_smooth_ - 1.0) / s;
    }
    case Family::kCobbDouglas:
      break;
  }
  fail(ErrorCode::kUnsupportedModel, "cobb_douglas utilities are not separable");
}

double UtilityModel::item_elasticity(std::size_t item, double x) const {
  switch (family_) {
    case Family::kLinear:
      return x;
    case Family::kPowerSum: {
      const double a = alpha_[item];
      return a * std::pow(x, a);
    }
    case Family::kSaturating: {
      const double s = instance_->size(item);
      return x <= s ? x / s : 0.0;
    }
    case Family::kSmoothedSaturating: {
      const double s = instance_->size(item);
      return x <= s ? x / s : std::pow(x / s, eps_smooth_);
    }
    case Family::kCobbDouglas:
      break;
  }
  fail(ErrorCode::kUnsupportedModel, "cobb_douglas utilities are not separable");
}

// ---------------------------------------------------------------------------
// Allocation

double Allocation::total() const noexcept { return std::accumulate(x.begin(), x.end(), 0.0); }

void validate_allocation(const Instance& instance, const Allocation& allocation,
                         double budget_tol) {
  require(allocation.x.size() == instance.items(), ErrorCode::kDimensionMismatch,
          "allocation length must equal the item count");
  for (double v : allocation.x) {
    require(std::isfinite(v) && v >= 0.0, ErrorCode::kInvalidArgument,
            "allocation entries must be finite and nonnegative");
  }
  require(allocation.total() <= instance.budget() * (1.0 + budget_tol),
          ErrorCode::kInvalidArgument, "allocation exceeds the budget");
  if (allocation.kind == AllocationKind::kIntegral) {
    const auto sizes = instance.sizes();
    for (std::size_t j = 0; j < allocation.x.size(); ++j) {
      const double v = allocation.x[j];
      require(v == 0.0 || v == sizes[j], ErrorCode::kInvalidArgument,
              "integral allocation must fund items at 0 or their full size");
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

void check_point(const UtilityModel& model, std::size_t agent, std::span<const double> x) {
  require(agent < model.instance().agents(), ErrorCode::kInvalidArgument,
          "agent index out of range");
  require(x.size() == model.instance().items(), ErrorCode::kDimensionMismatch,
          "allocation length must equal the item count");
}

}  // namespace

double evaluate_utility(const UtilityModel& model, std::size_t agent,
                        std::span<const double> x) {
  check_point(model, agent, x);
  const std::size_t k = x.size();
  if (model.family() == Family::kCobbDouglas) {
    const auto a = model.exponents().subspan(agent * k, k);
    double log_u = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (x[j] <= 0.0) return 0.0;
      log_u += a[j] * std::log(x[j]);
    }
    return std::exp(log_u);
  }
  const auto u = model.instance().row(agent);
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (u[j] != 0.0) total += u[j] * model.item_value(j, x[j]);
  }
  return total;
}

Gradient utility_gradient(const UtilityModel& model, std::size_t agent,
                          std::span<const double> x) {
  check_point(model, agent, x);
  const std::size_t k = x.size();
  Gradient g;
  g.values.assign(k, 0.0);
  if (model.family() == Family::kCobbDouglas) {
    const double value = evaluate_utility(model, agent, x);
    const auto a = model.exponents().subspan(agent * k, k);
    for (std::size_t j = 0; j < k; ++j) {
      g.values[j] = x[j] > 0.0 ? a[j] * value / x[j] : std::numeric_limits<double>::infinity();
    }
    return g;
  }
  const auto u = model.instance().row(agent);
  for (std::size_t j = 0; j < k; ++j) {
    if (model.family() == Family::kSaturating && x[j] == model.instance().size(j)) {
      g.at_kink = true;
    }
    if (u[j] != 0.0) g.values[j] = u[j] * model.item_derivative(j, x[j]);
  }
  return g;
}

std::vector<double> marginal_shares(const UtilityModel& model, std::span<const double> x) {
  const Instance& inst = model.instance();
  const std::size_t n = inst.agents();
  const std::size_t k = inst.items();
  require(x.size() == k, ErrorCode::kDimensionMismatch,
          "allocation length must equal the item count");
  std::vector<double> shares(n * k, 0.0);

  if (model.family() == Family::kCobbDouglas) {
    // grad log U_i = a_ij / x_j and sum_m x_m a_im / x_m = 1.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double a = model.exponents()[i * k + j];
        shares[i * k + j] = x[j] > 0.0 ? a / x[j] : std::numeric_limits<double>::infinity();
      }
    }
    return shares;
  }

  std::vector<double> derivative(k);
  std::vector<double> elasticity(k);
  for (std::size_t j = 0; j < k; ++j) {
    derivative[j] = model.item_derivative(j, x[j]);
    elasticity[j] = model.item_elasticity(j, x[j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = inst.row(i);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (u[j] != 0.0) denom += u[j] * elasticity[j];
    }
    if (!(denom > 0.0)) {
      throw DegenerateAgentError(
          i, "agent " + std::to_string(i) +
                 " has zero marginal value at this allocation (sum_m x_m dU/dx_m = 0)");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (u[j] != 0.0) shares[i * k + j] = u[j] * derivative[j] / denom;
    }
  }
  return shares;
}

// ---------------------------------------------------------------------------
// ZTransform

ZTransform::ZTransform(const UtilityModel& model)
    : family_(model.family()), k_(model.instance().items()) {
  switch (family_) {
    case Family::kLinear:
      break;
    case Family::kPowerSum:
      alpha_.assign(model.alpha().begin(), model.alpha().end());
      break;
    case Family::kSmoothedSaturating:
      sizes_.assign(model.instance().sizes().begin(), model.instance().sizes().end());
      eps_ = model.eps_smooth();
      break;
    case Family::kSaturating:
      fail(ErrorCode::kUnsupportedModel,
           "saturating utilities are not non-satiating; smooth them first");
    case Family::kCobbDouglas:
      fail(ErrorCode::kUnsupportedModel,
           "cobb_douglas has no z-transform; it is solved as proportional fairness");
  }
}

double ZTransform::z(std::size_t item, double x) const {
  switch (family_) {
    case Family::kPowerSum: {
      const double a = alpha_[item];
      return a * std::pow(x, a);
    }
    case Family::kSmoothedSaturating: {
      const double t = x / sizes_[item];
      return t <= 1.0 ? t : std::pow(t, eps_);
    }
    default:
      return x;
  }
}

double ZTransform::inverse(std::size_t item, double z) const {
  switch (family_) {
    case Family::kPowerSum: {
      const double a = alpha_[item];
      return std::pow(z / a, 1.0 / a);
    }
    case Family::kSmoothedSaturating: {
      const double s = sizes_[item];
      return z <= 1.0 ? s * z : s * std::pow(z, 1.0 / eps_);
    }
    default:
      return z;
  }
}

double ZTransform::ratio(std::size_t item, double z) const {
  switch (family_) {
    case Family::kPowerSum: {
      const double a = alpha_[item];
      return std::pow(a, -1.0 / a) * std::pow(z, 1.0 / a - 1.0);
    }
    case Family::kSmoothedSaturating: {
      const double s = sizes_[item];
      return z <= 1.0 ? s : s * std::pow(z, 1.0 / eps_ - 1.0);
    }
    default:
      return 1.0;
  }
}

double ZTransform::ratio_derivative(std::size_t item, double z) const {
  switch (family_) {
    case Family::kPowerSum: {
      const double a = alpha_[item];
      if (a == 1.0) return 0.0;
      return std::pow(a, -1.0 / a) * (1.0 / a - 1.0) * std::pow(z, 1.0 / a - 2.0);
    }
    case Family::kSmoothedSaturating: {
      const double s = sizes_[item];
      if (z <= 1.0 || eps_ == 1.0) return 0.0;
      return s * (1.0 / eps_ - 1.0) * std::pow(z, 1.0 / eps_ - 2.0);
    }
    default:
      return 0.0;
  }
}

double ZTransform::integral(std::size_t item, double z) const {
  switch (family_) {
    case Family::kPowerSum: {
      // R(z) = a^(1 - 1/a) z^(1/a), i.e. a * x in the original variable.
      const double a = alpha_[item];
      return std::pow(a, 1.0 - 1.0 / a) * std::pow(z, 1.0 / a);
    }
    case Family::kSmoothedSaturating: {
      const double s = sizes_[item];
      if (z <= 1.0) return s * z;
      return s + s * eps_ * (std::pow(z, 1.0 / eps_) - 1.0);
    }
    default:
      return z;
  }
}

double ZTransform::integral_difference(std::size_t item, double from, double to) const {
  if (from <= 0.0 || to <= 0.0) return integral(item, to) - integral(item, from);
  // c * (to^p - from^p) = c * from^p * expm1(p * log1p((to - from) / from)).
  auto power_gap = [](double c, double p, double a, double b) {
    return c * std::pow(a, p) * std::expm1(p * std::log1p((b - a) / a));
  };
  switch (family_) {
    case Family::kPowerSum: {
      const double a = alpha_[item];
      return power_gap(std::pow(a, 1.0 - 1.0 / a), 1.0 / a, from, to);
    }
    case Family::kSmoothedSaturating: {
      const double s = sizes_[item];
      if (from <= 1.0 && to <= 1.0) return s * (to - from);
      if (from > 1.0 && to > 1.0) return power_gap(s * eps_, 1.0 / eps_, from, to);
      return integral(item, to) - integral(item, from);
    }
    default:
      return to - from;
  }
}

ZTransform z_transform(const UtilityModel& model) { return ZTransform(model); }

}  // namespace pbcore
