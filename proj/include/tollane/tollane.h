// Copyright 2026 The tollane Authors
//
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

#ifndef TOLLANE_H
#define TOLLANE_H

/* C interface of the tollane freeway simulator. Every function returns a
 * status code; on failure tollane_last_error() describes the problem for the
 * calling thread. Strings returned through out-parameters are released with
 * tollane_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(TOLLANE_BUILDING_LIBRARY)
#define TOLLANE_API __attribute__((visibility("default")))
#else
#define TOLLANE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  TOLLANE_OK = 0,
  TOLLANE_E_ARGUMENT = 1,
  TOLLANE_E_PARSE = 2,
  TOLLANE_E_VALIDATION = 3,
  TOLLANE_E_RUNTIME = 4,
  TOLLANE_E_IO = 5
};

typedef struct tollane_scenario tollane_scenario;
typedef struct tollane_sim tollane_sim;

typedef struct tollane_metrics {
  double vmt;
  double vht;
  double delay;
  double queue_vht;
  double queue_delay;
} tollane_metrics;

TOLLANE_API const char* tollane_version(void);
/* Message of the last failure on this thread; empty when none. */
TOLLANE_API const char* tollane_last_error(void);
TOLLANE_API void tollane_string_free(char* s);

TOLLANE_API int tollane_scenario_load(const char* path, tollane_scenario** out);
TOLLANE_API int tollane_scenario_load_string(const char* json, tollane_scenario** out);
TOLLANE_API void tollane_scenario_free(tollane_scenario* sc);
/* Number of mainline links K. */
TOLLANE_API int tollane_scenario_links(const tollane_scenario* sc, int* out);
TOLLANE_API int tollane_scenario_horizon(const tollane_scenario* sc, long* out);
/* Output directory named in the config, or an empty string. */
TOLLANE_API int tollane_scenario_output(const tollane_scenario* sc, char** out);

/* Runs the scenario to its horizon and writes the artifacts into out_dir.
 * has_seed = 0 keeps the configured seed. */
TOLLANE_API int tollane_run(const tollane_scenario* sc, const char* out_dir, uint64_t seed,
                            int has_seed);
/* Equilibrium analysis; writes analysis.json into out_dir when it is not NULL
 * and returns a human-readable report. */
TOLLANE_API int tollane_analyze(const tollane_scenario* sc, const char* out_dir, char** report);
/* Runs the fixed-share, all-general-purpose and controlled configurations and
 * returns the comparison table; artifacts go to out_dir when it is not NULL. */
TOLLANE_API int tollane_compare(const tollane_scenario* sc, const char* out_dir, uint64_t seed,
                                int has_seed, char** report);

/* Step-by-step simulation. The sim keeps its own copy of the scenario. */
TOLLANE_API int tollane_sim_create(const tollane_scenario* sc, uint64_t seed, int has_seed,
                                   tollane_sim** out);
TOLLANE_API int tollane_sim_step(tollane_sim* sim, long steps);
/* Lane groups simulated (1 or 2) and links per group (K + 2, entrance to exit). */
TOLLANE_API int tollane_sim_shape(const tollane_sim* sim, int* groups, int* links);
/* Copies the vehicles of one lane group on links 0..K+1 into out[0..len). */
TOLLANE_API int tollane_sim_vehicles(const tollane_sim* sim, int group, double* out, size_t len);
TOLLANE_API int tollane_sim_metrics(const tollane_sim* sim, tollane_metrics* out);
TOLLANE_API void tollane_sim_free(tollane_sim* sim);

#ifdef __cplusplus
}
#endif

#endif /* TOLLANE_H */
