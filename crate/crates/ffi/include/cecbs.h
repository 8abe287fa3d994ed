#ifndef CECBS_H
#define CECBS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum CecbsStatus {
  CECBS_STATUS_OK = 0,
  // A required pointer argument was null.
  CECBS_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  CECBS_STATUS_INVALID_UTF8 = 2,
  // Malformed parameters or geometry.
  CECBS_STATUS_INVALID_INPUT = 3,
  // The scenario failed validation.
  CECBS_STATUS_INVALID_SCENARIO = 4,
  // The search gave up without a collision-free solution.
  CECBS_STATUS_UNSOLVED = 5,
  CECBS_STATUS_IO = 6,
  CECBS_STATUS_JSON = 7,
  // An agent index was past the end.
  CECBS_STATUS_OUT_OF_RANGE = 8,
  // The output buffer is too small.
  CECBS_STATUS_BUFFER_TOO_SMALL = 9,
  // Internal panic; the library state is still usable.
  CECBS_STATUS_PANIC = 10,
} CecbsStatus;

// Loaded, validated scenario.
typedef struct CecbsScenario CecbsScenario;

// Solved scenario together with the paths of all agents.
typedef struct CecbsSolution CecbsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if it succeeded.
//
// The pointer stays valid until the next library call on the same thread.
const char *cecbs_last_error(void);

// Library version as a static NUL-terminated string.
const char *cecbs_version(void);

// Parses and validates a scenario from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out_scenario` must be writable.
enum CecbsStatus cecbs_scenario_from_json(const char *json, struct CecbsScenario **out_scenario);

// Loads and validates a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out_scenario` must be writable.
enum CecbsStatus cecbs_scenario_load(const char *path, struct CecbsScenario **out_scenario);

// # Safety
// `scenario` must come from this library and not be used afterwards. Null is a no-op.
void cecbs_scenario_free(struct CecbsScenario *scenario);

// Number of agents; 0 for a null handle.
//
// # Safety
// `scenario` must be null or a live handle.
size_t cecbs_scenario_agent_count(const struct CecbsScenario *scenario);

// Solves the scenario with its stored parameters and the given seed.
//
// # Safety
// `scenario` must be a live handle; `out_solution` must be writable.
enum CecbsStatus cecbs_solve(const struct CecbsScenario *scenario,
                             uint64_t seed,
                             struct CecbsSolution **out_solution);

// # Safety
// `solution` must come from this library and not be used afterwards. Null is a no-op.
void cecbs_solution_free(struct CecbsSolution *solution);

// Sum of path costs; NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double cecbs_solution_soc(const struct CecbsSolution *solution);

// Constraint-tree nodes expanded; 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t cecbs_solution_iterations(const struct CecbsSolution *solution);

// Number of agent paths; 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t cecbs_solution_agent_count(const struct CecbsSolution *solution);

// Id and path cost of the agent at `index` (agents are ordered by id).
//
// # Safety
// `solution` must be a live handle; the out pointers must be writable.
enum CecbsStatus cecbs_solution_agent(const struct CecbsSolution *solution,
                                      size_t index,
                                      uint32_t *out_id,
                                      double *out_cost);

// Copies the smoothed path of agent `index` as interleaved `x, y` pairs.
//
// `*inout_len` holds the capacity of `xy` in points on entry and the path
// length in points on return. Pass a null `xy` to query the length only;
// a short buffer yields `BufferTooSmall` with the required length stored.
//
// # Safety
// `xy` must be null or point to `2 * *inout_len` writable doubles.
enum CecbsStatus cecbs_solution_path(const struct CecbsSolution *solution,
                                     size_t index,
                                     double *xy,
                                     size_t *inout_len);

// Serializes the solution record as JSON. Free the string with [`cecbs_string_free`].
//
// # Safety
// Handles must be live; `out_json` must be writable.
enum CecbsStatus cecbs_solution_to_json(const struct CecbsScenario *scenario,
                                        const struct CecbsSolution *solution,
                                        bool include_timing,
                                        char **out_json);

// Writes the solution record to a JSON file.
//
// # Safety
// Handles must be live; `path` must be a NUL-terminated string.
enum CecbsStatus cecbs_solution_write(const struct CecbsScenario *scenario,
                                      const struct CecbsSolution *solution,
                                      const char *path,
                                      bool include_timing);

// Re-checks a solution by dense-time simulation. `dt_factor` scales the
// step `r_min / v_max`; `*out_passed` is set to whether every check held.
//
// # Safety
// Handles must be live; `out_passed` must be writable.
enum CecbsStatus cecbs_validate(const struct CecbsScenario *scenario,
                                const struct CecbsSolution *solution,
                                double dt_factor,
                                bool *out_passed);

// # Safety
// `s` must come from this library and not be used afterwards. Null is a no-op.
void cecbs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CECBS_H */
