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

#include "pbcore/pbcore.h"

#include <algorithm>
#include <memory>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "commands.hpp"
#include "pbcore/coreverify.hpp"
#include "pbcore/error.hpp"
#include "pbcore/io.hpp"
#include "pbcore/lindahl.hpp"
#include "pbcore/mechanism.hpp"
#include "pbcore/model.hpp"
#include "pbcore/saturating.hpp"

struct pb_instance {
  std::shared_ptr<const pbcore::Instance> instance;
};

struct pb_model {
  pbcore::UtilityModel model;
};

struct pb_result {
  std::string json;
};

namespace {

thread_local std::string last_error;

pb_status to_status(pbcore::ErrorCode code) { return static_cast<pb_status>(code); }

// Runs body and converts any exception into a status code.
template <class F>
pb_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return PB_OK;
  } catch (const pbcore::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PB_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PB_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  pbcore::require(p != nullptr, pbcore::ErrorCode::kInvalidArgument,
                  std::string(what) + " must not be null");
}

}  // namespace

extern "C" {

const char* pb_version(void) { return pbcore::app::kToolVersion; }

const char* pb_status_name(pb_status status) {
  if (status == PB_OK) return "ok";
  if (status < PB_INVALID_ARGUMENT || status > PB_INTERNAL) return "unknown";
  return pbcore::error_code_name(static_cast<pbcore::ErrorCode>(status));
}

const char* pb_last_error(void) { return last_error.c_str(); }

pb_status pb_instance_create(size_t agents, size_t items, double budget, const double* utilities,
                             const double* sizes, pb_instance** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(utilities, "utilities");
    std::vector<double> u(utilities, utilities + agents * items);
    std::optional<std::vector<double>> s;
    if (sizes) s.emplace(sizes, sizes + items);
    auto inst = std::make_shared<const pbcore::Instance>(agents, items, budget, std::move(u),
                                                         std::move(s));
    *out = new pb_instance{std::move(inst)};
  });
}

pb_status pb_instance_from_votes_csv(const char* csv, double budget, const double* sizes,
                                     pb_instance** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(csv, "csv");
    pbcore::VoteMatrix votes = pbcore::parse_votes(csv);
    const std::size_t k = votes.items.size();
    std::optional<std::vector<double>> s;
    if (sizes) s.emplace(sizes, sizes + k);
    auto inst = std::make_shared<const pbcore::Instance>(votes.voters(), k, budget,
                                                         std::move(votes.cells), std::move(s),
                                                         std::move(votes.items));
    *out = new pb_instance{std::move(inst)};
  });
}

size_t pb_instance_agents(const pb_instance* instance) {
  return instance ? instance->instance->agents() : 0;
}

size_t pb_instance_items(const pb_instance* instance) {
  return instance ? instance->instance->items() : 0;
}

void pb_instance_free(pb_instance* instance) { delete instance; }

pb_status pb_model_create(const pb_instance* instance, pb_family family, const double* params,
                          pb_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(instance, "instance");
    const auto& inst = instance->instance;
    const std::size_t n = inst->agents(), k = inst->items();
    switch (family) {
      case PB_LINEAR:
        *out = new pb_model{pbcore::UtilityModel::linear(inst)};
        return;
      case PB_POWER_SUM:
        need(params, "alpha");
        *out = new pb_model{pbcore::UtilityModel::power_sum(inst, {params, params + k})};
        return;
      case PB_COBB_DOUGLAS:
        *out = new pb_model{params ? pbcore::UtilityModel::cobb_douglas(inst, {params, params + n * k})
                                   : pbcore::UtilityModel::cobb_douglas(inst)};
        return;
      case PB_SATURATING:
        *out = new pb_model{pbcore::UtilityModel::saturating(inst)};
        return;
      case PB_SMOOTHED_SATURATING:
        need(params, "eps_smooth");
        *out = new pb_model{pbcore::UtilityModel::smoothed_saturating(inst, params[0])};
        return;
    }
    pbcore::fail(pbcore::ErrorCode::kUnsupportedModel, "unknown utility family");
  });
}

void pb_model_free(pb_model* model) { delete model; }

pb_status pb_solve(const pb_model* model, double residual_tol, uint64_t seed, double* x,
                   size_t* iterations) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    pbcore::SolverConfig cfg = pbcore::SolverConfig::for_budget(model->model.instance().budget());
    if (residual_tol > 0.0) cfg.residual_tol = residual_tol;
    cfg.seed = seed;
    const pbcore::LindahlResult r = pbcore::solve_potential(model->model, cfg);
    std::copy(r.x.x.begin(), r.x.x.end(), x);
    if (iterations) *iterations = r.iterations;
  });
}

pb_status pb_lindahl_residuals(const pb_model* model, const double* x, double* residuals) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    need(residuals, "residuals");
    const std::size_t k = model->model.instance().items();
    const auto r = pbcore::lindahl_residuals(model->model, std::span<const double>(x, k));
    std::copy(r.begin(), r.end(), residuals);
  });
}

pb_status pb_heuristic_solve(const pb_instance* instance, uint64_t seed, double* x, int* converged) {
  return guarded([&] {
    need(instance, "instance");
    need(x, "x");
    pbcore::HeuristicConfig cfg;
    cfg.seed = seed;
    const pbcore::HeuristicResult h = pbcore::heuristic_solve(*instance->instance, cfg);
    std::copy(h.x.x.begin(), h.x.x.end(), x);
    if (converged) *converged = h.converged ? 1 : 0;
  });
}

pb_status pb_find_deviation_continuous(const pb_model* model, const double* x, size_t grid_steps,
                                       double threshold, int* found,
                                       unsigned char* coalition_mask) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    need(found, "found");
    const std::size_t n = model->model.instance().agents();
    const std::size_t k = model->model.instance().items();
    pbcore::ContinuousSearch search;
    if (grid_steps > 0) search.grid_steps = grid_steps;
    search.threshold = threshold;
    const auto d = pbcore::find_deviation_continuous(model->model, std::span<const double>(x, k), search);
    *found = d ? 1 : 0;
    if (coalition_mask) {
      std::fill(coalition_mask, coalition_mask + n, 0);
      if (d) {
        for (auto i : d->coalition) coalition_mask[i] = 1;
      }
    }
  });
}

pb_status pb_sample_mechanism(const pb_instance* instance, double gamma, double epsilon_priv,
                              size_t chain_steps, size_t burn_in, uint64_t seed, double* x) {
  return guarded([&] {
    need(instance, "instance");
    need(x, "x");
    pbcore::MechanismConfig cfg;
    cfg.gamma = gamma;
    cfg.epsilon_priv = epsilon_priv;
    cfg.chain_steps = chain_steps;
    cfg.burn_in = burn_in;
    cfg.seed = seed;
    const auto s = pbcore::sample_mechanism(*instance->instance, cfg);
    std::copy(s.x.x.begin(), s.x.x.end(), x);
  });
}

pb_status pb_run(const char* request_json, pb_result** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(request_json, "request");
    pbcore::app::Json request;
    try {
      request = pbcore::app::Json::parse(request_json);
    } catch (const nlohmann::json::parse_error& e) {
      pbcore::fail(pbcore::ErrorCode::kParse, std::string("request: ") + e.what());
    }
    const pbcore::app::Outcome outcome = pbcore::app::run_command(request);
    *out = new pb_result{outcome.report.dump(2)};
  });
}

const char* pb_result_json(const pb_result* result) { return result ? result->json.c_str() : ""; }

void pb_result_free(pb_result* result) { delete result; }

}  // extern "C"
