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

/* C interface to pbcore. All handles are opaque; every call that can fail
 * returns a pb_status and leaves a message for pb_last_error() on the
 * calling thread. Arrays are row-major and owned by the caller unless a
 * function says otherwise. */

#ifndef PBCORE_PBCORE_H
#define PBCORE_PBCORE_H

#include <stddef.h>
#include <stdint.h>

#if defined(PBCORE_BUILDING)
#define PB_API __attribute__((visibility("default")))
#else
#define PB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pb_status {
  PB_OK = 0,
  PB_INVALID_ARGUMENT = 1,
  PB_DIMENSION_MISMATCH = 2,
  PB_DEGENERATE = 3,
  PB_UNSUPPORTED_MODEL = 4,
  PB_PARSE = 5,
  PB_IO = 6,
  PB_TOO_LARGE = 7,
  PB_INFEASIBLE = 8,
  PB_SAMPLER = 9,
  PB_INTERNAL = 10
} pb_status;

typedef enum pb_family {
  PB_LINEAR = 0,
  PB_POWER_SUM = 1,
  PB_COBB_DOUGLAS = 2,
  PB_SATURATING = 3,
  PB_SMOOTHED_SATURATING = 4
} pb_family;

typedef struct pb_instance pb_instance;
typedef struct pb_model pb_model;
typedef struct pb_result pb_result;

PB_API const char* pb_version(void);
PB_API const char* pb_status_name(pb_status status);
/* Message of the last failed call on this thread; empty after a success. */
PB_API const char* pb_last_error(void);

/* sizes may be NULL. */
PB_API pb_status pb_instance_create(size_t agents, size_t items, double budget,
                                    const double* utilities, const double* sizes,
                                    pb_instance** out);
/* budget and sizes (may be NULL) are in money; items are the CSV columns. */
PB_API pb_status pb_instance_from_votes_csv(const char* csv, double budget, const double* sizes,
                                            pb_instance** out);
PB_API size_t pb_instance_agents(const pb_instance* instance);
PB_API size_t pb_instance_items(const pb_instance* instance);
PB_API void pb_instance_free(pb_instance* instance);

/* params: alpha (k entries) for PB_POWER_SUM, exponents (n*k, or NULL for
 * normalised utilities) for PB_COBB_DOUGLAS, a single eps_smooth for
 * PB_SMOOTHED_SATURATING, ignored otherwise. */
PB_API pb_status pb_model_create(const pb_instance* instance, pb_family family,
                                 const double* params, pb_model** out);
PB_API void pb_model_free(pb_model* model);

/* Equilibrium allocation into x (k entries). iterations may be NULL. */
PB_API pb_status pb_solve(const pb_model* model, double residual_tol, uint64_t seed, double* x,
                          size_t* iterations);
PB_API pb_status pb_lindahl_residuals(const pb_model* model, const double* x, double* residuals);
/* Saturating heuristic. converged may be NULL. */
PB_API pb_status pb_heuristic_solve(const pb_instance* instance, uint64_t seed, double* x,
                                    int* converged);
/* found is set to 1 when some coalition gains more than threshold (additive)
 * on a grid of grid_steps per budget; coalition_mask then has the members. */
PB_API pb_status pb_find_deviation_continuous(const pb_model* model, const double* x,
                                              size_t grid_steps, double threshold, int* found,
                                              unsigned char* coalition_mask);
PB_API pb_status pb_sample_mechanism(const pb_instance* instance, double gamma,
                                     double epsilon_priv, size_t chain_steps, size_t burn_in,
                                     uint64_t seed, double* x);

/* JSON request in the shape the command-line tool builds; the report is
 * returned as JSON and artifacts are written to the request's out_dir. */
PB_API pb_status pb_run(const char* request_json, pb_result** out);
PB_API const char* pb_result_json(const pb_result* result);
PB_API void pb_result_free(pb_result* result);

#ifdef __cplusplus
}
#endif

#endif /* PBCORE_PBCORE_H */
