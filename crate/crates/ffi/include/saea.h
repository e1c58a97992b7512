#ifndef SAEA_H
#define SAEA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SaeaStatus {
  SAEA_STATUS_OK = 0,
  SAEA_STATUS_NULL_POINTER = 1,
  SAEA_STATUS_INVALID_ARGUMENT = 2,
  SAEA_STATUS_IO = 3,
  SAEA_STATUS_PANIC = 4,
} SaeaStatus;

typedef enum SaeaFunction {
  SAEA_FUNCTION_ONE_MAX = 0,
  SAEA_FUNCTION_LEADING_ONES = 1,
  SAEA_FUNCTION_ONE_MAX_BLOCKS = 2,
} SaeaFunction;

typedef enum SaeaMutation {
  SAEA_MUTATION_STANDARD = 0,
  SAEA_MUTATION_HEAVY_TAILED = 1,
} SaeaMutation;

/**
 * Opaque run handle.
 */
typedef struct SaeaRun SaeaRun;

/**
 * Problem and algorithm settings. Fill with [`saea_params_default`] first.
 */
typedef struct SaeaParams {
  enum SaeaFunction function;
  size_t n;
  /**
   * Block size; read only for `SAEA_FUNCTION_ONE_MAX_BLOCKS`.
   */
  size_t k;
  enum SaeaMutation mutation;
  double chi;
  double beta;
  double update_strength;
  double success_rate;
  bool elitist;
  double lambda_init;
} SaeaParams;

typedef struct SaeaState {
  uint64_t generation;
  uint64_t evaluations;
  size_t fitness;
  /**
   * Fitness of the optimum.
   */
  size_t max_fitness;
  double lambda;
  bool optimal;
} SaeaState;

typedef struct SaeaBounds {
  double gamma;
  double epsilon;
  double lambda_safe;
  double lambda_threshold;
  double generation_bound;
  double fitness_level_sum;
  double elitist_evaluation_bound;
  double expected_lambda_limit;
} SaeaBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Writes the defaults: LeadingOnes, n = 100, unit-rate standard bit mutation, F = 1.5, s = 1.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `SaeaParams`.
 */
enum SaeaStatus saea_params_default(struct SaeaParams *out);

/**
 * Creates a run at a uniform random start. Same `params` and `seed` give the same run.
 *
 * # Safety
 * `params` must point to a valid `SaeaParams`; `out` to writable storage for a pointer.
 */
enum SaeaStatus saea_run_new(const struct SaeaParams *params, uint64_t seed, struct SaeaRun **out);

/**
 * Runs one generation; `success` (optional) receives whether the best offspring beat the parent.
 *
 * # Safety
 * `run` must come from `saea_run_new` and not be freed; `success` may be null.
 */
enum SaeaStatus saea_run_step(struct SaeaRun *run, bool *success);

/**
 * Steps until the optimum or until `budget_evals` total evaluations; `state` (optional) gets the final state.
 *
 * # Safety
 * `run` must come from `saea_run_new` and not be freed; `state` may be null.
 */
enum SaeaStatus saea_run_to_optimum(struct SaeaRun *run,
                                    uint64_t budget_evals,
                                    struct SaeaState *state);

/**
 * # Safety
 * `run` must come from `saea_run_new` and not be freed; `out` must be writable.
 */
enum SaeaStatus saea_run_state(const struct SaeaRun *run, struct SaeaState *out);

/**
 * Copies the current search point as `len` bytes of 0 or 1.
 *
 * # Safety
 * `run` must be live; `bits` must be writable for `len` bytes.
 */
enum SaeaStatus saea_run_point(const struct SaeaRun *run, uint8_t *bits, size_t len);

/**
 * Releases a run. Null is ignored.
 *
 * # Safety
 * `run` must be null or come from `saea_run_new` and not be freed already.
 */
void saea_run_free(struct SaeaRun *run);

/**
 * Evaluates the benchmark of `params` on `len` bytes, each 0 or 1; `len` must equal `params->n`.
 *
 * # Safety
 * `params` must be valid, `bits` readable for `len` bytes, `out` writable.
 */
enum SaeaStatus saea_evaluate(const struct SaeaParams *params,
                              const uint8_t *bits,
                              size_t len,
                              size_t *out);

/**
 * Runtime thresholds and bounds for `params`, with the derived epsilon and gamma.
 *
 * # Safety
 * `params` must be valid and `out` writable.
 */
enum SaeaStatus saea_theory_bounds(const struct SaeaParams *params, struct SaeaBounds *out);

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *saea_last_error_message(void);

/**
 * Library version, NUL-terminated and static.
 */
const char *saea_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAEA_H */
